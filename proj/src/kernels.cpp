#include "wordscores/kernels.hpp"

#include <cmath>
#include <limits>

namespace wordscores::kernels {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline void score_one_word(std::span<const std::int64_t> counts, std::size_t num_docs,
                           std::span<const double> doc_weight, std::span<const double> positions,
                           std::span<double> probabilities, std::span<double> scores,
                           std::size_t w) {
  const std::size_t base = w * num_docs;
  double sum = 0.0;
  for (std::size_t r = 0; r < num_docs; ++r) sum += static_cast<double>(counts[base + r]) * doc_weight[r];
  if (sum <= 0.0) {
    for (std::size_t r = 0; r < num_docs; ++r) probabilities[base + r] = 0.0;
    scores[w] = kNaN;
    return;
  }
  double score = 0.0;
  for (std::size_t r = 0; r < num_docs; ++r) {
    const double p = static_cast<double>(counts[base + r]) * doc_weight[r] / sum;
    probabilities[base + r] = p;
    score += p * positions[r];
  }
  scores[w] = score;
}

inline DocumentScore score_one_document(std::span<const std::int64_t> counts,
                                        std::size_t num_docs,
                                        std::span<const std::int64_t> totals,
                                        std::span<const std::ptrdiff_t> table_index,
                                        std::span<const double> word_scores,
                                        bool divide_by_total, std::size_t d) {
  DocumentScore s;
  s.total_tokens = totals[d];
  const std::size_t num_words = table_index.size();
  for (std::size_t w = 0; w < num_words; ++w)
    if (table_index[w] >= 0) s.scored_tokens += counts[w * num_docs + d];
  if (s.scored_tokens == 0) {
    s.raw = kNaN;
    s.se = kNaN;
    s.variance = kNaN;
    return s;
  }
  const double denom = static_cast<double>(divide_by_total ? s.total_tokens : s.scored_tokens);
  double raw = 0.0;
  for (std::size_t w = 0; w < num_words; ++w) {
    const auto idx = table_index[w];
    const auto c = counts[w * num_docs + d];
    if (idx < 0 || c == 0) continue;
    raw += (static_cast<double>(c) / denom) * word_scores[static_cast<std::size_t>(idx)];
  }
  double var = 0.0;
  for (std::size_t w = 0; w < num_words; ++w) {
    const auto idx = table_index[w];
    const auto c = counts[w * num_docs + d];
    if (idx < 0 || c == 0) continue;
    const double dev = word_scores[static_cast<std::size_t>(idx)] - raw;
    var += (static_cast<double>(c) / denom) * dev * dev;
  }
  s.raw = raw;
  s.variance = var;
  s.se = std::sqrt(var / static_cast<double>(s.scored_tokens));
  return s;
}

}  // namespace

void score_words_serial(std::span<const std::int64_t> counts, std::size_t num_docs,
                        std::span<const double> doc_weight, std::span<const double> positions,
                        std::span<double> probabilities, std::span<double> scores) {
  for (std::size_t w = 0; w < scores.size(); ++w)
    score_one_word(counts, num_docs, doc_weight, positions, probabilities, scores, w);
}

void score_words_parallel(std::span<const std::int64_t> counts, std::size_t num_docs,
                          std::span<const double> doc_weight, std::span<const double> positions,
                          std::span<double> probabilities, std::span<double> scores) {
  const auto n = static_cast<std::ptrdiff_t>(scores.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t w = 0; w < n; ++w)
    score_one_word(counts, num_docs, doc_weight, positions, probabilities, scores,
                   static_cast<std::size_t>(w));
}

void score_documents_serial(std::span<const std::int64_t> counts, std::size_t num_docs,
                            std::span<const std::int64_t> totals,
                            std::span<const std::ptrdiff_t> table_index,
                            std::span<const double> word_scores, bool divide_by_total,
                            std::span<DocumentScore> out) {
  for (std::size_t d = 0; d < num_docs; ++d)
    out[d] = score_one_document(counts, num_docs, totals, table_index, word_scores,
                                divide_by_total, d);
}

void score_documents_parallel(std::span<const std::int64_t> counts, std::size_t num_docs,
                              std::span<const std::int64_t> totals,
                              std::span<const std::ptrdiff_t> table_index,
                              std::span<const double> word_scores, bool divide_by_total,
                              std::span<DocumentScore> out) {
  const auto n = static_cast<std::ptrdiff_t>(num_docs);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t d = 0; d < n; ++d)
    out[static_cast<std::size_t>(d)] = score_one_document(
        counts, num_docs, totals, table_index, word_scores, divide_by_total,
        static_cast<std::size_t>(d));
}

}  // namespace wordscores::kernels
