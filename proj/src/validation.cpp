#include "wordscores/validation.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "wordscores/csv.hpp"
#include "wordscores/error.hpp"

namespace wordscores {

// --- EstimateTable -------------------------------------------------------------

std::size_t EstimateTable::add_column(std::string name, ColumnScale scale) {
  if (find_column(name)) throw ValidationError("duplicate column '" + name + "'");
  if (!scale.is_empirical() && !(scale.max.has_value() && *scale.max > *scale.min))
    throw ValidationError("declared scale of '" + name + "' needs min < max");
  std::vector<std::optional<double>> cells;
  const std::size_t old_cols = columns_.size();
  cells.reserve(keys_.size() * (old_cols + 1));
  for (std::size_t r = 0; r < keys_.size(); ++r) {
    for (std::size_t c = 0; c < old_cols; ++c) cells.push_back(cells_[r * old_cols + c]);
    cells.emplace_back();
  }
  cells_ = std::move(cells);
  columns_.push_back(std::move(name));
  scales_.push_back(scale);
  return columns_.size() - 1;
}

std::size_t EstimateTable::add_row(EstimateKey key) {
  if (index_.contains(key))
    throw ValidationError("duplicate row (" + key.party + ", " + key.country + ", " +
                          key.dimension + ")");
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  cells_.resize(cells_.size() + columns_.size());
  return keys_.size() - 1;
}

void EstimateTable::set(std::size_t row, std::size_t column, std::optional<double> value) {
  cells_.at(row * columns_.size() + column) = value;
}

std::optional<std::size_t> EstimateTable::find_column(std::string_view name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c)
    if (columns_[c] == name) return c;
  return std::nullopt;
}

std::size_t EstimateTable::column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw ValidationError("no column '" + std::string(name) + "'");
}

std::optional<std::size_t> EstimateTable::find_row(const EstimateKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::optional<double>> EstimateTable::column_values(std::size_t column) const {
  std::vector<std::optional<double>> out;
  out.reserve(keys_.size());
  for (std::size_t r = 0; r < keys_.size(); ++r) out.push_back(value(r, column));
  return out;
}

EstimateTable EstimateTable::filter_dimension(std::string_view dimension) const {
  EstimateTable out;
  for (std::size_t c = 0; c < columns_.size(); ++c) out.add_column(columns_[c], scales_[c]);
  for (std::size_t r = 0; r < keys_.size(); ++r) {
    if (keys_[r].dimension != dimension) continue;
    const auto nr = out.add_row(keys_[r]);
    for (std::size_t c = 0; c < columns_.size(); ++c) out.set(nr, c, value(r, c));
  }
  return out;
}

// --- rescaling -------------------------------------------------------------------

std::string_view to_string(RescaleMode mode) {
  return mode == RescaleMode::whole_dimension ? "wd" : "pc";
}

RescaleMode parse_rescale_mode(std::string_view text) {
  if (text == "wd" || text == "whole-dimension") return RescaleMode::whole_dimension;
  if (text == "pc" || text == "per-country") return RescaleMode::per_country;
  throw ValidationError("unknown rescale mode '" + std::string(text) + "' (expected wd|pc)");
}

std::vector<std::optional<double>> rescale_unit(const EstimateTable& table,
                                                std::string_view column, RescaleMode mode) {
  const auto col = table.column(column);
  const auto& scale = table.scale(col);
  auto group_of = [&](std::size_t r) {
    const auto& k = table.key(r);
    return mode == RescaleMode::whole_dimension ? k.dimension : k.dimension + "/" + k.country;
  };

  std::map<std::string, std::pair<double, double>> bounds;
  if (scale.is_empirical()) {
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      const auto v = table.value(r, col);
      if (!v) continue;
      auto [it, inserted] = bounds.try_emplace(group_of(r), *v, *v);
      if (!inserted) {
        it->second.first = std::min(it->second.first, *v);
        it->second.second = std::max(it->second.second, *v);
      }
    }
    for (const auto& [group, mm] : bounds)
      if (!(mm.second > mm.first))
        throw StatisticsError("cannot rescale column '" + std::string(column) + "': group '" +
                              group + "' is constant");
  }

  std::vector<std::optional<double>> out(table.num_rows());
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto v = table.value(r, col);
    if (!v) continue;
    double lo, hi;
    if (scale.is_empirical()) {
      std::tie(lo, hi) = bounds.at(group_of(r));
    } else {
      lo = *scale.min;
      hi = *scale.max;
    }
    out[r] = (*v - lo) / (hi - lo);
  }
  return out;
}

// --- correlation -------------------------------------------------------------------

PairedSample pairwise_complete(std::span<const std::optional<double>> x,
                               std::span<const std::optional<double>> y) {
  if (x.size() != y.size()) throw ValidationError("paired columns differ in length");
  PairedSample p;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i] || !y[i]) continue;
    p.x.push_back(*x[i]);
    p.y.push_back(*y[i]);
  }
  return p;
}

namespace {

struct Moments {
  double mean_x, mean_y, var_x, var_y, cov;
};

Moments population_moments(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  if (x.size() < 3) throw StatisticsError("correlation needs at least 3 complete pairs");
  const double n = static_cast<double>(x.size());
  Moments m{};
  m.mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  m.mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mean_x, dy = y[i] - m.mean_y;
    m.var_x += dx * dx;
    m.var_y += dy * dy;
    m.cov += dx * dy;
  }
  m.var_x /= n;
  m.var_y /= n;
  m.cov /= n;
  if (!(m.var_x > 0.0) || !(m.var_y > 0.0))
    throw StatisticsError("correlation undefined: zero variance");
  return m;
}

double normal_quantile_two_sided(double level) {
  if (!(level >= 0.0 && level < 1.0)) throw ValidationError("confidence level must be in [0, 1)");
  if (level == 0.0) return 0.0;
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  const auto m = population_moments(x, y);
  return std::clamp(m.cov / std::sqrt(m.var_x * m.var_y), -1.0, 1.0);
}

double ConcordanceResult::location_shift() const {
  return (mean_x - mean_y) / std::sqrt(sd_x * sd_y);
}

ConcordanceResult ccc(std::span<const double> x, std::span<const double> y, double level) {
  const auto m = population_moments(x, y);
  ConcordanceResult r;
  r.n = x.size();
  r.mean_x = m.mean_x;
  r.mean_y = m.mean_y;
  r.sd_x = std::sqrt(m.var_x);
  r.sd_y = std::sqrt(m.var_y);
  const double shift = m.mean_x - m.mean_y;
  const double denom = m.var_x + m.var_y + shift * shift;
  r.rho_c = 2.0 * m.cov / denom;
  r.pearson = std::clamp(m.cov / (r.sd_x * r.sd_y), -1.0, 1.0);
  r.c_b = 2.0 * r.sd_x * r.sd_y / denom;
  if (r.n >= 4) {
    const auto ci = ccc_ci(r, level);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
    r.ci_available = true;
  } else {
    r.ci_low = r.ci_high = r.rho_c;
  }
  return r;
}

Interval lin_interval(double rho_c, double pearson_r, double c_b, double location_shift,
                      std::size_t n, double level) {
  const double z_crit = normal_quantile_two_sided(level);
  if (n < 4) throw StatisticsError("concordance interval needs n >= 4");
  if (std::abs(rho_c) >= 1.0 || z_crit == 0.0) return {rho_c, rho_c};
  // Lin's variance of atanh(rho_c), with rho_c / rho replaced by C_b so the
  // expression stays finite at rho = 0.
  const double rc2 = rho_c * rho_c;
  const double r2 = pearson_r * pearson_r;
  const double u2 = location_shift * location_shift;
  const double one_minus = 1.0 - rc2;
  const double t1 = (1.0 - r2) * c_b * c_b / one_minus;
  const double t2 = 2.0 * r2 * c_b * c_b * c_b * (1.0 - rho_c) * u2 / (one_minus * one_minus);
  const double t3 = r2 * std::pow(c_b, 4) * u2 * u2 / (2.0 * one_minus * one_minus);
  const double var = std::max(0.0, (t1 + t2 - t3) / static_cast<double>(n - 2));
  const double z = std::atanh(rho_c);
  const double half = z_crit * std::sqrt(var);
  return {std::tanh(z - half), std::tanh(z + half)};
}

Interval ccc_ci(const ConcordanceResult& result, double level) {
  return lin_interval(result.rho_c, result.pearson, result.c_b, result.location_shift(), result.n,
                      level);
}

Interval ccc_ci_from_summary(double rho_c, double pearson_r, double c_b, std::size_t n,
                             double level) {
  if (!(c_b > 0.0 && c_b <= 1.0)) throw StatisticsError("C_b must lie in (0, 1]");
  const double u = std::sqrt(std::max(0.0, 2.0 / c_b - 2.0));
  return lin_interval(rho_c, pearson_r, c_b, u, n, level);
}

Interval ccc_bootstrap_ci(std::span<const double> x, std::span<const double> y, double level,
                          int resamples, std::uint64_t seed) {
  if (x.size() != y.size()) throw ValidationError("bootstrap inputs differ in length");
  if (x.size() < 4) throw StatisticsError("bootstrap interval needs n >= 4");
  if (resamples < 2) throw ValidationError("bootstrap needs at least 2 resamples");
  if (!(level >= 0.0 && level < 1.0)) throw ValidationError("confidence level must be in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> stats;
  std::vector<double> bx(x.size()), by(y.size());
  int attempts = 0;
  while (static_cast<int>(stats.size()) < resamples) {
    if (++attempts > resamples * 20)
      throw StatisticsError("bootstrap: too many degenerate resamples");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto j = pick(rng);
      bx[i] = x[j];
      by[i] = y[j];
    }
    try {
      const auto m = population_moments(bx, by);
      const double shift = m.mean_x - m.mean_y;
      stats.push_back(2.0 * m.cov / (m.var_x + m.var_y + shift * shift));
    } catch (const StatisticsError&) {
      // constant resample, draw again
    }
  }
  std::sort(stats.begin(), stats.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  const double alpha = (1.0 - level) / 2.0;
  return {quantile(alpha), quantile(1.0 - alpha)};
}

// --- benchmark matrix ------------------------------------------------------------

BenchmarkReport benchmark_matrix(const EstimateTable& table, std::string_view candidate,
                                 std::span<const std::string> benchmarks,
                                 const BenchmarkOptions& options) {
  if (benchmarks.size() < 2) throw ValidationError("benchmark_matrix needs at least 2 benchmarks");
  std::map<std::string, std::vector<std::optional<double>>, std::less<>> scaled;
  scaled.emplace(std::string(candidate), rescale_unit(table, candidate, options.mode));
  for (const auto& b : benchmarks) scaled.emplace(b, rescale_unit(table, b, options.mode));

  auto concordance = [&](const std::string& a, const std::string& b) {
    const auto sample = pairwise_complete(scaled.at(a), scaled.at(b));
    auto result = ccc(sample.x, sample.y, options.level);
    if (options.ci_method == CiMethod::bootstrap) {
      const auto ci = ccc_bootstrap_ci(sample.x, sample.y, options.level, options.resamples,
                                       options.seed);
      result.ci_low = std::min(ci.low, result.rho_c);
      result.ci_high = std::max(ci.high, result.rho_c);
      result.ci_available = true;
    }
    return result;
  };

  BenchmarkReport report;
  report.candidate = std::string(candidate);
  report.threshold = -1.0;
  for (std::size_t i = 0; i < benchmarks.size(); ++i) {
    for (std::size_t j = i + 1; j < benchmarks.size(); ++j) {
      PairConcordance p{benchmarks[i], benchmarks[j], concordance(benchmarks[i], benchmarks[j]),
                        false};
      report.threshold = std::max(report.threshold, p.result.rho_c);
      report.benchmark_pairs.push_back(std::move(p));
    }
  }
  report.all_pass = true;
  for (const auto& b : benchmarks) {
    PairConcordance p{std::string(candidate), b, concordance(std::string(candidate), b), false};
    p.passes = p.result.ci_high > report.threshold;
    report.any_pass = report.any_pass || p.passes;
    report.all_pass = report.all_pass && p.passes;
    report.candidate_pairs.push_back(std::move(p));
  }
  return report;
}

// --- merging -------------------------------------------------------------------------

MergeResult merge_estimates(std::span<const RunEstimates> runs,
                            std::span<const ExternalRecord> external,
                            std::span<const CrosswalkEntry> crosswalk,
                            const std::map<std::string, ColumnScale>& scales) {
  std::map<std::string, std::pair<std::string, std::string>> xwalk;
  for (const auto& e : crosswalk) {
    auto [it, inserted] = xwalk.try_emplace(e.doc_id, e.party_id, e.country);
    if (!inserted && it->second != std::make_pair(e.party_id, e.country))
      throw ValidationError("ambiguous crosswalk entry for document '" + e.doc_id + "'");
  }

  auto scale_for = [&](const std::string& name) {
    auto it = scales.find(name);
    return it == scales.end() ? ColumnScale::empirical() : it->second;
  };

  // Collect run cells keyed by (party, country, dimension).
  std::map<EstimateKey, std::vector<std::optional<double>>> rows;
  std::set<std::string> uncovered;
  for (std::size_t c = 0; c < runs.size(); ++c) {
    std::set<EstimateKey> seen;
    for (const auto& rec : runs[c].records) {
      auto it = xwalk.find(rec.doc_id);
      if (it == xwalk.end()) {
        uncovered.insert(rec.doc_id);
        continue;
      }
      EstimateKey key{it->second.first, it->second.second, rec.dimension};
      if (!seen.insert(key).second)
        throw ValidationError("run '" + runs[c].column + "' has duplicate estimates for (" +
                              key.party + ", " + key.dimension + ")");
      auto& cells = rows[key];
      cells.resize(runs.size());
      cells[c] = rec.value;
    }
  }

  std::vector<std::string> sources;
  for (const auto& e : external)
    if (std::find(sources.begin(), sources.end(), e.source) == sources.end())
      sources.push_back(e.source);

  MergeResult out;
  for (const auto& run : runs) out.table.add_column(run.column, scale_for(run.column));
  for (const auto& s : sources) out.table.add_column(s, scale_for(s));
  for (auto& [key, cells] : rows) {
    const auto r = out.table.add_row(key);
    for (std::size_t c = 0; c < runs.size(); ++c) out.table.set(r, c, cells[c]);
  }
  std::set<std::pair<EstimateKey, std::string>> seen_external;
  for (const auto& e : external) {
    EstimateKey key{e.party_id, e.country, e.dimension};
    if (!seen_external.insert({key, e.source}).second)
      throw ValidationError("external source '" + e.source + "' has duplicate score for (" +
                            e.party_id + ", " + e.dimension + ")");
    if (auto r = out.table.find_row(key)) out.table.set(*r, out.table.column(e.source), e.score);
  }
  out.uncovered.assign(uncovered.begin(), uncovered.end());
  return out;
}

std::vector<ExternalRecord> parse_external(std::string_view text, std::string_view context) {
  const auto table = csv::parse(text, context);
  csv::require_header(table, {"party_id", "country", "dimension", "source", "score"}, context);
  std::vector<ExternalRecord> out;
  for (const auto& row : table.rows) {
    const auto v = csv::parse_optional_double(row[4]);
    if (!v) continue;
    out.push_back({row[0], row[1], row[2], row[3], *v});
  }
  return out;
}

std::vector<ExternalRecord> load_external(const std::filesystem::path& path) {
  return parse_external(csv::read_text_file(path), path.string());
}

std::string external_to_csv(std::span<const ExternalRecord> records) {
  std::ostringstream out;
  csv::write_row(out, {"party_id", "country", "dimension", "source", "score"});
  for (const auto& r : records)
    csv::write_row(out, {r.party_id, r.country, r.dimension, r.source, csv::format6(r.score)});
  return out.str();
}

std::vector<CrosswalkEntry> load_crosswalk(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  csv::require_header(table, {"doc_id", "party_id", "country"}, path.string());
  std::vector<CrosswalkEntry> out;
  for (const auto& row : table.rows) out.push_back({row[0], row[1], row[2]});
  return out;
}

std::string report_to_csv(std::span<const ReportRow> rows,
                          std::span<const std::string> key_columns) {
  std::ostringstream out;
  csv::Row header(key_columns.begin(), key_columns.end());
  for (const char* h : {"reference", "benchmark", "transformation", "rescale", "rho_c", "n",
                        "ci_low", "ci_high", "pearson_r", "c_b"})
    header.emplace_back(h);
  csv::write_row(out, header);
  for (const auto& r : rows) {
    csv::Row row(r.keys.begin(), r.keys.end());
    row.insert(row.end(), {r.reference, r.benchmark, r.transformation, r.rescale,
                           csv::format_exact(r.result.rho_c), std::to_string(r.result.n),
                           csv::format_exact(r.result.ci_low), csv::format_exact(r.result.ci_high),
                           csv::format_exact(r.result.pearson), csv::format_exact(r.result.c_b)});
    csv::write_row(out, row);
  }
  return out.str();
}

}  // namespace wordscores
