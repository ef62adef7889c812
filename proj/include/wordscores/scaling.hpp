#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wordscores/corpus.hpp"
#include "wordscores/validation.hpp"

namespace wordscores {

/// Exogenous positions: document id -> dimension -> A_rd.
using ReferenceScores = std::map<std::string, std::map<std::string, double>, std::less<>>;

/// CSV `doc_id,dimension,score`.
ReferenceScores load_reference_scores(const std::filesystem::path& path);
ReferenceScores parse_reference_scores(std::string_view text, std::string_view context);

class ReferenceSet {
 public:
  ReferenceSet(TermDocumentMatrix matrix, ReferenceScores scores);

  const TermDocumentMatrix& matrix() const noexcept { return matrix_; }
  const ReferenceScores& scores() const noexcept { return scores_; }
  std::optional<double> score(std::string_view doc_id, std::string_view dimension) const;
  /// Throws ValidationError naming the document when the score is missing.
  double require_score(std::string_view doc_id, std::string_view dimension) const;
  /// A_rd for every matrix column, in column order.
  std::vector<double> positions(std::string_view dimension) const;
  /// Every document scored on `dimension`, at least two distinct scores.
  void validate(std::string_view dimension) const;

 private:
  TermDocumentMatrix matrix_;
  ReferenceScores scores_;
};

/// How F_wr enters the word probabilities.
enum class FrequencyMode {
  relative,  // count(w, r) / total(r)
  raw_counts
};

/// How F_wv is normalized when scoring virgin texts.
enum class Variant {
  total_words,  // count / all tokens of the virgin text
  cooccurring   // count / tokens of the virgin text present in the word-score table
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);  // "total" | "cooccur"

struct WordProbabilityTable {
  std::vector<std::string> words;
  std::vector<std::string> doc_ids;
  std::vector<double> probabilities;  // words x docs, row-major

  std::span<const double> row(std::size_t w) const {
    return std::span<const double>(probabilities).subspan(w * doc_ids.size(), doc_ids.size());
  }
};

class WordScoreTable {
 public:
  WordScoreTable() = default;
  /// `words` must be sorted and unique.
  WordScoreTable(std::string dimension, std::vector<std::string> words, std::vector<double> scores,
                 double min_position, double max_position);

  const std::string& dimension() const noexcept { return dimension_; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::vector<double>& scores() const noexcept { return scores_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  std::optional<std::size_t> index_of(std::string_view word) const;
  std::optional<double> score(std::string_view word) const;
  double min_position() const noexcept { return min_position_; }
  double max_position() const noexcept { return max_position_; }

 private:
  std::string dimension_;
  std::vector<std::string> words_;
  std::vector<double> scores_;
  double min_position_ = 0.0;
  double max_position_ = 0.0;
};

struct TransformedScore {
  std::string label;  // "lbg" | "mv"
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct VirginEstimate {
  std::string doc_id;
  double raw = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t scored_tokens = 0;
  std::int64_t total_tokens = 0;
  std::optional<TransformedScore> transformed;
};

enum class TransformKind { lbg, mv };
std::string_view to_string(TransformKind k);
TransformKind parse_transform(std::string_view text);  // "lbg" | "mv"

struct LbgParams {
  double virgin_mean = 0.0;
  double sd_reference = 0.0;  // population SD of A_rd
  double sd_virgin = 0.0;     // population SD of raw virgin scores
};

struct MvParams {
  std::string low_id;
  std::string high_id;
  double raw_low = 0.0;
  double raw_high = 0.0;
  double assigned_low = 0.0;
  double assigned_high = 0.0;
};

struct TransformSpec {
  TransformKind kind = TransformKind::lbg;
  std::variant<LbgParams, MvParams> params;

  double apply(double raw) const;
};

struct TransformResult {
  std::vector<VirginEstimate> estimates;
  TransformSpec spec;
};

struct AnchorPair {
  std::string low;
  std::string high;
};

WordProbabilityTable word_probabilities(const ReferenceSet& reference,
                                        FrequencyMode mode = FrequencyMode::relative);

WordScoreTable word_scores(const WordProbabilityTable& probs, const ReferenceSet& reference,
                           std::string_view dimension);

/// word_probabilities followed by word_scores in one pass.
WordScoreTable score_reference(const ReferenceSet& reference, std::string_view dimension,
                               FrequencyMode mode = FrequencyMode::relative);

/// Raw scores, SE and CI (raw +/- z * SE) for every virgin document.
/// Throws UnscorableDocumentError listing every document with no scored word.
std::vector<VirginEstimate> score_virgin(const TermDocumentMatrix& virgin,
                                         const WordScoreTable& table, Variant variant,
                                         double z = 1.96);

/// Mean-preserving rescale to the reference SD.
TransformResult lbg_transform(std::span<const VirginEstimate> estimates,
                              const ReferenceSet& reference, std::string_view dimension);

/// Anchors with the lowest and highest A_rd (first in column order on ties).
AnchorPair extreme_anchors(const ReferenceSet& reference, std::string_view dimension);

/// Anchor raw scores come from scoring the anchor reference texts as virgin
/// texts with the same table and variant.
MvParams mv_parameters(const ReferenceSet& reference, const WordScoreTable& table,
                       const AnchorPair& anchors, Variant variant);

TransformResult mv_transform(std::span<const VirginEstimate> estimates,
                             const ReferenceSet& reference, const WordScoreTable& table,
                             const AnchorPair& anchors, Variant variant);

struct TradeoffRow {
  std::string doc_id;
  double exogenous = 0.0;
  double mv_score = 0.0;
  double difference = 0.0;
  std::optional<double> percent_difference;  // unset when exogenous == 0
};

/// Reference texts re-scored as virgin texts and MV-transformed.
std::vector<TradeoffRow> mv_tradeoff(const ReferenceSet& reference, const WordScoreTable& table,
                                     const AnchorPair& anchors, Variant variant);

struct VariantPair {
  std::string doc_id;
  double total_words = 0.0;
  double cooccurring = 0.0;
  double difference = 0.0;  // total_words - cooccurring
};

struct VariantComparison {
  std::vector<VariantPair> pairs;
  std::optional<double> pearson;          // unset when undefined (n < 3, zero variance)
  std::optional<ConcordanceResult> ccc;
};

VariantComparison compare_variants(const TermDocumentMatrix& virgin, const WordScoreTable& table);

struct WordScoreRow {
  std::string word;
  std::int64_t frequency = 0;
  std::optional<double> score;  // unset for unscored words
};

/// One row per distinct word in first-occurrence order.
std::vector<WordScoreRow> export_wordscores(const Document& document, const WordScoreTable& table);

// CSV forms.
std::string estimates_to_csv(std::span<const VirginEstimate> estimates, std::string_view dimension,
                             Variant variant);
std::vector<RunRecord> parse_estimates_csv(std::string_view text, std::string_view context);
std::string wordscore_rows_to_csv(std::span<const WordScoreRow> rows);
std::string word_table_to_csv(const WordScoreTable& table);
std::string tradeoff_to_csv(std::span<const TradeoffRow> rows);

}  // namespace wordscores
