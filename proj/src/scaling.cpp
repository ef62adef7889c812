#include "wordscores/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "wordscores/csv.hpp"
#include "wordscores/error.hpp"
#include "wordscores/kernels.hpp"

namespace wordscores {

// --- reference scores ------------------------------------------------------------

ReferenceScores parse_reference_scores(std::string_view text, std::string_view context) {
  const auto table = csv::parse(text, context);
  csv::require_header(table, {"doc_id", "dimension", "score"}, context);
  ReferenceScores out;
  for (const auto& row : table.rows) {
    const auto v = csv::parse_optional_double(row[2]);
    if (!v) continue;
    auto [it, inserted] = out[row[0]].try_emplace(row[1], *v);
    if (!inserted)
      throw ValidationError(std::string(context) + ": duplicate score for '" + row[0] + "' on '" +
                            row[1] + "'");
  }
  return out;
}

ReferenceScores load_reference_scores(const std::filesystem::path& path) {
  return parse_reference_scores(csv::read_text_file(path), path.string());
}

ReferenceSet::ReferenceSet(TermDocumentMatrix matrix, ReferenceScores scores)
    : matrix_(std::move(matrix)), scores_(std::move(scores)) {}

std::optional<double> ReferenceSet::score(std::string_view doc_id,
                                          std::string_view dimension) const {
  auto it = scores_.find(doc_id);
  if (it == scores_.end()) return std::nullopt;
  auto jt = it->second.find(std::string(dimension));
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

double ReferenceSet::require_score(std::string_view doc_id, std::string_view dimension) const {
  if (auto s = score(doc_id, dimension)) return *s;
  throw ValidationError("reference document '" + std::string(doc_id) + "' has no score on '" +
                        std::string(dimension) + "'");
}

std::vector<double> ReferenceSet::positions(std::string_view dimension) const {
  std::vector<double> out;
  for (const auto& id : matrix_.doc_ids()) out.push_back(require_score(id, dimension));
  return out;
}

void ReferenceSet::validate(std::string_view dimension) const {
  if (matrix_.num_docs() < 2) throw ValidationError("need at least 2 reference documents");
  if (matrix_.num_words() == 0) throw ValidationError("reference vocabulary is empty");
  const auto pos = positions(dimension);
  if (std::all_of(pos.begin(), pos.end(), [&](double a) { return a == pos.front(); }))
    throw ValidationError("reference documents need at least 2 distinct scores on '" +
                          std::string(dimension) + "'");
}

// --- enums -------------------------------------------------------------------------

std::string_view to_string(Variant v) {
  return v == Variant::total_words ? "total" : "cooccur";
}

Variant parse_variant(std::string_view text) {
  if (text == "total" || text == "total-words") return Variant::total_words;
  if (text == "cooccur" || text == "co-occurring" || text == "cooccurring")
    return Variant::cooccurring;
  throw ValidationError("unknown variant '" + std::string(text) + "' (expected total|cooccur)");
}

std::string_view to_string(TransformKind k) { return k == TransformKind::lbg ? "lbg" : "mv"; }

TransformKind parse_transform(std::string_view text) {
  if (text == "lbg" || text == "LBG") return TransformKind::lbg;
  if (text == "mv" || text == "MV") return TransformKind::mv;
  throw ValidationError("unknown transform '" + std::string(text) + "' (expected lbg|mv)");
}

// --- word scores ---------------------------------------------------------------------

WordScoreTable::WordScoreTable(std::string dimension, std::vector<std::string> words,
                               std::vector<double> scores, double min_position,
                               double max_position)
    : dimension_(std::move(dimension)),
      words_(std::move(words)),
      scores_(std::move(scores)),
      min_position_(min_position),
      max_position_(max_position) {
  if (words_.size() != scores_.size()) throw ValidationError("word/score length mismatch");
  if (!std::is_sorted(words_.begin(), words_.end()) ||
      std::adjacent_find(words_.begin(), words_.end()) != words_.end())
    throw ValidationError("word-score table words must be sorted and unique");
}

std::optional<std::size_t> WordScoreTable::index_of(std::string_view word) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), word);
  if (it == words_.end() || *it != word) return std::nullopt;
  return static_cast<std::size_t>(it - words_.begin());
}

std::optional<double> WordScoreTable::score(std::string_view word) const {
  if (auto i = index_of(word)) return scores_[*i];
  return std::nullopt;
}

namespace {

std::vector<double> document_weights(const TermDocumentMatrix& m, FrequencyMode mode) {
  std::vector<double> weights;
  for (std::size_t d = 0; d < m.num_docs(); ++d) {
    const auto total = m.totals()[d];
    if (total <= 0)
      throw ValidationError("reference document '" + m.doc_ids()[d] + "' has no tokens");
    weights.push_back(mode == FrequencyMode::relative ? 1.0 / static_cast<double>(total) : 1.0);
  }
  return weights;
}

}  // namespace

WordProbabilityTable word_probabilities(const ReferenceSet& reference, FrequencyMode mode) {
  const auto& m = reference.matrix();
  if (m.num_docs() < 2) throw ValidationError("need at least 2 reference documents");
  if (m.num_words() == 0) throw ValidationError("reference vocabulary is empty");
  const auto weights = document_weights(m, mode);
  const std::vector<double> no_positions(m.num_docs(), 0.0);
  std::vector<double> probs(m.num_words() * m.num_docs());
  std::vector<double> scores(m.num_words());
  kernels::score_words_parallel(m.counts(), m.num_docs(), weights, no_positions, probs, scores);

  WordProbabilityTable out;
  out.doc_ids = m.doc_ids();
  for (std::size_t w = 0; w < m.num_words(); ++w) {
    if (std::isnan(scores[w])) continue;  // absent from every reference text
    out.words.push_back(m.vocabulary()[w]);
    out.probabilities.insert(out.probabilities.end(), probs.begin() + w * m.num_docs(),
                             probs.begin() + (w + 1) * m.num_docs());
  }
  return out;
}

WordScoreTable word_scores(const WordProbabilityTable& probs, const ReferenceSet& reference,
                           std::string_view dimension) {
  std::vector<double> positions;
  for (const auto& id : probs.doc_ids) positions.push_back(reference.require_score(id, dimension));
  const auto n = static_cast<std::ptrdiff_t>(probs.words.size());
  std::vector<double> scores(probs.words.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t w = 0; w < n; ++w) {
    const auto row = probs.row(static_cast<std::size_t>(w));
    double s = 0.0;
    for (std::size_t r = 0; r < row.size(); ++r) s += row[r] * positions[r];
    scores[static_cast<std::size_t>(w)] = s;
  }
  const auto [lo, hi] = std::minmax_element(positions.begin(), positions.end());
  return WordScoreTable(std::string(dimension), probs.words, std::move(scores),
                        positions.empty() ? 0.0 : *lo, positions.empty() ? 0.0 : *hi);
}

WordScoreTable score_reference(const ReferenceSet& reference, std::string_view dimension,
                               FrequencyMode mode) {
  reference.validate(dimension);
  const auto& m = reference.matrix();
  const auto weights = document_weights(m, mode);
  const auto positions = reference.positions(dimension);
  std::vector<double> probs(m.num_words() * m.num_docs());
  std::vector<double> scores(m.num_words());
  kernels::score_words_parallel(m.counts(), m.num_docs(), weights, positions, probs, scores);

  std::vector<std::string> words;
  std::vector<double> kept;
  for (std::size_t w = 0; w < m.num_words(); ++w) {
    if (std::isnan(scores[w])) continue;
    words.push_back(m.vocabulary()[w]);
    kept.push_back(scores[w]);
  }
  const auto [lo, hi] = std::minmax_element(positions.begin(), positions.end());
  return WordScoreTable(std::string(dimension), std::move(words), std::move(kept), *lo, *hi);
}

// --- virgin scoring ----------------------------------------------------------------

std::vector<VirginEstimate> score_virgin(const TermDocumentMatrix& virgin,
                                         const WordScoreTable& table, Variant variant, double z) {
  if (table.empty()) throw ValidationError("word-score table is empty");
  std::vector<std::ptrdiff_t> index(virgin.num_words(), -1);
  for (std::size_t w = 0; w < virgin.num_words(); ++w)
    if (auto i = table.index_of(virgin.vocabulary()[w])) index[w] = static_cast<std::ptrdiff_t>(*i);

  std::vector<kernels::DocumentScore> scored(virgin.num_docs());
  kernels::score_documents_parallel(virgin.counts(), virgin.num_docs(), virgin.totals(), index,
                                    table.scores(), variant == Variant::total_words, scored);

  std::vector<std::string> failed;
  std::vector<VirginEstimate> out;
  for (std::size_t d = 0; d < virgin.num_docs(); ++d) {
    const auto& s = scored[d];
    if (s.scored_tokens == 0) {
      failed.push_back(virgin.doc_ids()[d]);
      continue;
    }
    VirginEstimate e;
    e.doc_id = virgin.doc_ids()[d];
    e.raw = s.raw;
    e.se = s.se;
    e.ci_low = s.raw - z * s.se;
    e.ci_high = s.raw + z * s.se;
    e.scored_tokens = s.scored_tokens;
    e.total_tokens = s.total_tokens;
    out.push_back(std::move(e));
  }
  if (!failed.empty()) throw UnscorableDocumentError(std::move(failed));
  return out;
}

// --- transforms ----------------------------------------------------------------------

namespace {

std::pair<double, double> mean_population_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

double apply_mv(double raw, const MvParams& p) {
  // Interpolation form: the anchors land exactly on their assigned scores.
  const double t = (raw - p.raw_low) / (p.raw_high - p.raw_low);
  return (1.0 - t) * p.assigned_low + t * p.assigned_high;
}

std::vector<VirginEstimate> apply_transform(std::span<const VirginEstimate> estimates,
                                            const TransformSpec& spec) {
  std::vector<VirginEstimate> out(estimates.begin(), estimates.end());
  for (auto& e : out) {
    TransformedScore t;
    t.label = std::string(to_string(spec.kind));
    t.value = spec.apply(e.raw);
    const double a = spec.apply(e.ci_low), b = spec.apply(e.ci_high);
    t.ci_low = std::min(a, b);
    t.ci_high = std::max(a, b);
    e.transformed = t;
  }
  return out;
}

}  // namespace

double TransformSpec::apply(double raw) const {
  if (const auto* lbg = std::get_if<LbgParams>(&params))
    return (raw - lbg->virgin_mean) * (lbg->sd_reference / lbg->sd_virgin) + lbg->virgin_mean;
  return apply_mv(raw, std::get<MvParams>(params));
}

TransformResult lbg_transform(std::span<const VirginEstimate> estimates,
                              const ReferenceSet& reference, std::string_view dimension) {
  if (estimates.size() < 2)
    throw TransformError("LBG transform needs at least 2 virgin texts (SD of a single score is 0)");
  std::vector<double> raw;
  for (const auto& e : estimates) raw.push_back(e.raw);
  const auto [mean, sd_virgin] = mean_population_sd(raw);
  if (!(sd_virgin > 0.0)) throw TransformError("LBG transform undefined: virgin raw scores have zero variance");
  const auto positions = reference.positions(dimension);
  const auto [ref_mean, sd_reference] = mean_population_sd(positions);
  (void)ref_mean;

  TransformSpec spec{TransformKind::lbg, LbgParams{mean, sd_reference, sd_virgin}};
  return {apply_transform(estimates, spec), spec};
}

AnchorPair extreme_anchors(const ReferenceSet& reference, std::string_view dimension) {
  const auto positions = reference.positions(dimension);
  if (positions.empty()) throw ValidationError("reference set is empty");
  const auto lo = std::min_element(positions.begin(), positions.end()) - positions.begin();
  const auto hi = std::max_element(positions.begin(), positions.end()) - positions.begin();
  const auto& ids = reference.matrix().doc_ids();
  return {ids[static_cast<std::size_t>(lo)], ids[static_cast<std::size_t>(hi)]};
}

MvParams mv_parameters(const ReferenceSet& reference, const WordScoreTable& table,
                       const AnchorPair& anchors, Variant variant) {
  for (const auto* id : {&anchors.low, &anchors.high})
    if (!reference.matrix().doc_index(*id))
      throw TransformError("MV anchor '" + *id + "' is not a reference document");
  if (anchors.low == anchors.high) throw TransformError("MV anchors must be two different documents");

  MvParams p;
  p.low_id = anchors.low;
  p.high_id = anchors.high;
  p.assigned_low = reference.require_score(anchors.low, table.dimension());
  p.assigned_high = reference.require_score(anchors.high, table.dimension());
  if (p.assigned_low == p.assigned_high)
    throw TransformError("MV anchors have equal assigned scores");
  const std::vector<std::string> ids{anchors.low, anchors.high};
  const auto anchor_matrix = reference.matrix().select_documents(ids);
  const auto raw = score_virgin(anchor_matrix, table, variant);
  p.raw_low = raw[0].raw;
  p.raw_high = raw[1].raw;
  if (p.raw_low == p.raw_high)
    throw TransformError("degenerate MV anchors: equal raw scores for '" + anchors.low + "' and '" +
                         anchors.high + "'");
  return p;
}

TransformResult mv_transform(std::span<const VirginEstimate> estimates,
                             const ReferenceSet& reference, const WordScoreTable& table,
                             const AnchorPair& anchors, Variant variant) {
  TransformSpec spec{TransformKind::mv, mv_parameters(reference, table, anchors, variant)};
  return {apply_transform(estimates, spec), spec};
}

std::vector<TradeoffRow> mv_tradeoff(const ReferenceSet& reference, const WordScoreTable& table,
                                     const AnchorPair& anchors, Variant variant) {
  const auto spec = TransformSpec{TransformKind::mv, mv_parameters(reference, table, anchors, variant)};
  const auto rescored = score_virgin(reference.matrix(), table, variant);
  std::vector<TradeoffRow> rows;
  for (const auto& e : rescored) {
    TradeoffRow row;
    row.doc_id = e.doc_id;
    row.exogenous = reference.require_score(e.doc_id, table.dimension());
    row.mv_score = spec.apply(e.raw);
    row.difference = row.mv_score - row.exogenous;
    if (row.exogenous != 0.0) row.percent_difference = 100.0 * row.difference / row.exogenous;
    rows.push_back(std::move(row));
  }
  return rows;
}

VariantComparison compare_variants(const TermDocumentMatrix& virgin, const WordScoreTable& table) {
  const auto total = score_virgin(virgin, table, Variant::total_words);
  const auto cooc = score_virgin(virgin, table, Variant::cooccurring);
  VariantComparison out;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < total.size(); ++i) {
    out.pairs.push_back({total[i].doc_id, total[i].raw, cooc[i].raw, total[i].raw - cooc[i].raw});
    x.push_back(total[i].raw);
    y.push_back(cooc[i].raw);
  }
  try {
    out.pearson = pearson(x, y);
    out.ccc = ccc(x, y);
  } catch (const StatisticsError&) {
    out.pearson.reset();
    out.ccc.reset();
  }
  return out;
}

std::vector<WordScoreRow> export_wordscores(const Document& document, const WordScoreTable& table) {
  std::vector<WordScoreRow> rows;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& tok : document.tokens) {
    auto [it, inserted] = seen.try_emplace(tok, rows.size());
    if (inserted) rows.push_back({tok, 0, table.score(tok)});
    ++rows[it->second].frequency;
  }
  return rows;
}

// --- CSV -------------------------------------------------------------------------------

std::string estimates_to_csv(std::span<const VirginEstimate> estimates, std::string_view dimension,
                             Variant variant) {
  std::ostringstream out;
  csv::write_row(out, {"doc_id", "dimension", "variant", "raw", "se", "ci_low", "ci_high",
                       "transform", "transformed"});
  for (const auto& e : estimates) {
    csv::write_row(out, {e.doc_id, std::string(dimension), std::string(to_string(variant)),
                         csv::format6(e.raw), csv::format6(e.se), csv::format6(e.ci_low),
                         csv::format6(e.ci_high), e.transformed ? e.transformed->label : "",
                         e.transformed ? csv::format6(e.transformed->value) : ""});
  }
  return out.str();
}

std::vector<RunRecord> parse_estimates_csv(std::string_view text, std::string_view context) {
  const auto table = csv::parse(text, context);
  csv::require_header(table, {"doc_id", "dimension", "variant", "raw", "se", "ci_low", "ci_high",
                              "transform", "transformed"},
                      context);
  std::vector<RunRecord> out;
  for (const auto& row : table.rows) {
    auto value = csv::parse_optional_double(row[8]);
    if (!value) value = csv::parse_optional_double(row[3]);
    if (!value) continue;
    out.push_back({row[0], row[1], *value});
  }
  return out;
}

std::string wordscore_rows_to_csv(std::span<const WordScoreRow> rows) {
  std::ostringstream out;
  csv::write_row(out, {"word", "freq", "score"});
  for (const auto& r : rows)
    csv::write_row(out, {r.word, std::to_string(r.frequency), r.score ? csv::format6(*r.score) : ""});
  return out.str();
}

std::string word_table_to_csv(const WordScoreTable& table) {
  std::ostringstream out;
  csv::write_row(out, {"word", "score"});
  for (std::size_t i = 0; i < table.size(); ++i)
    csv::write_row(out, {table.words()[i], csv::format6(table.scores()[i])});
  return out.str();
}

std::string tradeoff_to_csv(std::span<const TradeoffRow> rows) {
  std::ostringstream out;
  csv::write_row(out, {"doc_id", "exogenous", "mv_score", "difference", "pct_difference"});
  for (const auto& r : rows)
    csv::write_row(out, {r.doc_id, csv::format6(r.exogenous), csv::format6(r.mv_score),
                         csv::format6(r.difference),
                         r.percent_difference ? csv::format6(*r.percent_difference) : "NA"});
  return out.str();
}

}  // namespace wordscores
