#pragma once

// Data-parallel inner loops of the scoring engine. Each kernel exists in a
// serial reference form and an OpenMP form; both evaluate every output with
// the same summation order, so their results are bitwise identical.

#include <cstddef>
#include <cstdint>
#include <span>

namespace wordscores::kernels {

/// Word probabilities and word scores from a words x docs count block.
///
/// For word w: f_wr = counts(w, r) * doc_weight[r]; P_wr = f_wr / sum_r f_wr;
/// S_w = sum_r P_wr * positions[r]. `doc_weight` is 1/total(r) for
/// within-text relative frequencies or 1 for raw counts. Words with no
/// occurrences get NaN scores and a zero probability row.
void score_words_serial(std::span<const std::int64_t> counts, std::size_t num_docs,
                        std::span<const double> doc_weight, std::span<const double> positions,
                        std::span<double> probabilities, std::span<double> scores);
void score_words_parallel(std::span<const std::int64_t> counts, std::size_t num_docs,
                          std::span<const double> doc_weight, std::span<const double> positions,
                          std::span<double> probabilities, std::span<double> scores);

struct DocumentScore {
  double raw = 0.0;
  double variance = 0.0;  // sum_w F_wv (S_w - raw)^2
  double se = 0.0;        // sqrt(variance / scored_tokens)
  std::int64_t scored_tokens = 0;
  std::int64_t total_tokens = 0;
};

/// Scores each document column of a words x docs count block.
///
/// `table_index[w]` is the row of virgin word w in `word_scores`, or -1 when
/// the word is unscored. F_wv = count / denominator where the denominator is
/// the document's total tokens (`divide_by_total`) or its scored tokens.
/// Documents without scored tokens get raw = NaN and scored_tokens = 0.
void score_documents_serial(std::span<const std::int64_t> counts, std::size_t num_docs,
                            std::span<const std::int64_t> totals,
                            std::span<const std::ptrdiff_t> table_index,
                            std::span<const double> word_scores, bool divide_by_total,
                            std::span<DocumentScore> out);
void score_documents_parallel(std::span<const std::int64_t> counts, std::size_t num_docs,
                              std::span<const std::int64_t> totals,
                              std::span<const std::ptrdiff_t> table_index,
                              std::span<const double> word_scores, bool divide_by_total,
                              std::span<DocumentScore> out);

}  // namespace wordscores::kernels
