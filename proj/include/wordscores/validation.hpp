#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wordscores {

// --- estimate tables ----------------------------------------------------------

/// Declared scale bounds, or empirical (observed extremes) when unset.
struct ColumnScale {
  std::optional<double> min;
  std::optional<double> max;

  static ColumnScale empirical() { return {}; }
  static ColumnScale declared(double lo, double hi) { return {lo, hi}; }
  bool is_empirical() const noexcept { return !min.has_value(); }
};

struct EstimateKey {
  std::string party;
  std::string country;
  std::string dimension;
  auto operator<=>(const EstimateKey&) const = default;
};

/// Parties x sources meta-dataset. Cells may be missing.
class EstimateTable {
 public:
  std::size_t add_column(std::string name, ColumnScale scale = ColumnScale::empirical());
  /// Throws ValidationError on a duplicate key.
  std::size_t add_row(EstimateKey key);
  void set(std::size_t row, std::size_t column, std::optional<double> value);

  std::size_t num_rows() const noexcept { return keys_.size(); }
  std::size_t num_columns() const noexcept { return columns_.size(); }
  const EstimateKey& key(std::size_t row) const { return keys_[row]; }
  const std::vector<EstimateKey>& keys() const noexcept { return keys_; }
  const std::string& column_name(std::size_t c) const { return columns_[c]; }
  const ColumnScale& scale(std::size_t c) const { return scales_[c]; }
  std::optional<double> value(std::size_t row, std::size_t column) const {
    return cells_[row * columns_.size() + column];
  }
  std::optional<std::size_t> find_column(std::string_view name) const;
  std::size_t column(std::string_view name) const;  // throws if absent
  std::optional<std::size_t> find_row(const EstimateKey& key) const;
  std::vector<std::optional<double>> column_values(std::size_t column) const;

  /// Rows whose dimension matches, all columns kept.
  EstimateTable filter_dimension(std::string_view dimension) const;

 private:
  std::vector<std::string> columns_;
  std::vector<ColumnScale> scales_;
  std::vector<EstimateKey> keys_;
  std::map<EstimateKey, std::size_t> index_;
  std::vector<std::optional<double>> cells_;  // row-major
};

enum class RescaleMode { whole_dimension, per_country };

std::string_view to_string(RescaleMode mode);
RescaleMode parse_rescale_mode(std::string_view text);  // "wd" | "pc"

/// (value - min) / (max - min) per rescaling group: each dimension (wd) or each
/// (dimension, country) (pc). Declared columns use their declared bounds;
/// empirical columns use the group's observed extremes. Missing stays missing.
std::vector<std::optional<double>> rescale_unit(const EstimateTable& table,
                                                std::string_view column, RescaleMode mode);

// --- correlation ---------------------------------------------------------------

struct PairedSample {
  std::vector<double> x;
  std::vector<double> y;
};

/// Keeps positions where both values are present.
PairedSample pairwise_complete(std::span<const std::optional<double>> x,
                               std::span<const std::optional<double>> y);

double pearson(std::span<const double> x, std::span<const double> y);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct ConcordanceResult {
  double rho_c = 0.0;
  double pearson = 0.0;
  double c_b = 0.0;  // bias-correction factor, rho_c = pearson * c_b
  std::size_t n = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool ci_available = false;  // false for n < 4 (interval collapsed to the point)
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sd_x = 0.0;  // population SDs
  double sd_y = 0.0;

  /// Location shift scaled by the geometric-mean SD.
  double location_shift() const;
};

/// Lin's concordance correlation with population moments and the 95% (or
/// `level`) z-transformed interval.
ConcordanceResult ccc(std::span<const double> x, std::span<const double> y, double level = 0.95);

/// Lin (1989) asymptotic interval on atanh(rho_c), inverse-transformed.
Interval ccc_ci(const ConcordanceResult& result, double level);

/// Same interval from summary statistics. `location_shift` is
/// (mu_x - mu_y) / sqrt(sigma_x sigma_y).
Interval lin_interval(double rho_c, double pearson_r, double c_b, double location_shift,
                      std::size_t n, double level);

/// Interval from a summary (rho_c, r, C_b, n) row. The location shift is
/// recovered from C_b assuming equal scales: u^2 = 2 / C_b - 2.
Interval ccc_ci_from_summary(double rho_c, double pearson_r, double c_b, std::size_t n,
                             double level);

/// Percentile bootstrap over paired resamples.
Interval ccc_bootstrap_ci(std::span<const double> x, std::span<const double> y, double level,
                          int resamples, std::uint64_t seed);

enum class CiMethod { lin, bootstrap };

// --- benchmark matrix ----------------------------------------------------------

struct BenchmarkOptions {
  RescaleMode mode = RescaleMode::whole_dimension;
  double level = 0.95;
  CiMethod ci_method = CiMethod::lin;
  int resamples = 1000;
  std::uint64_t seed = 42;
};

struct PairConcordance {
  std::string first;
  std::string second;
  ConcordanceResult result;
  bool passes = false;  // candidate pairs only: upper CI > threshold
};

struct BenchmarkReport {
  std::string candidate;
  std::vector<PairConcordance> candidate_pairs;
  std::vector<PairConcordance> benchmark_pairs;
  double threshold = 0.0;  // max benchmark-vs-benchmark rho_c
  bool any_pass = false;
  bool all_pass = false;
};

/// Candidate-vs-benchmark and benchmark-vs-benchmark concordance on rescaled
/// columns. A candidate pair passes when its upper CI strictly exceeds every
/// benchmark-pair point estimate.
BenchmarkReport benchmark_matrix(const EstimateTable& table, std::string_view candidate,
                                 std::span<const std::string> benchmarks,
                                 const BenchmarkOptions& options = {});

// --- merging -------------------------------------------------------------------

struct RunRecord {
  std::string doc_id;
  std::string dimension;
  double value = 0.0;
};

struct RunEstimates {
  std::string column;
  std::vector<RunRecord> records;
};

struct ExternalRecord {
  std::string party_id;
  std::string country;
  std::string dimension;
  std::string source;
  double score = 0.0;
};

struct CrosswalkEntry {
  std::string doc_id;
  std::string party_id;
  std::string country;
};

struct MergeResult {
  EstimateTable table;
  std::vector<std::string> uncovered;  // run document ids missing from the crosswalk
};

/// Left join of external sources onto the rows produced by the runs.
MergeResult merge_estimates(std::span<const RunEstimates> runs,
                            std::span<const ExternalRecord> external,
                            std::span<const CrosswalkEntry> crosswalk,
                            const std::map<std::string, ColumnScale>& scales = {});

std::vector<ExternalRecord> load_external(const std::filesystem::path& path);
std::vector<ExternalRecord> parse_external(std::string_view text, std::string_view context);
std::string external_to_csv(std::span<const ExternalRecord> records);
std::vector<CrosswalkEntry> load_crosswalk(const std::filesystem::path& path);

/// Long-format concordance report: `reference,benchmark,transformation,rescale,rho_c,n,
/// ci_low,ci_high,pearson_r,c_b`, optionally prefixed by extra key columns.
struct ReportRow {
  std::vector<std::string> keys;  // values for `key_columns`
  std::string reference;
  std::string benchmark;
  std::string transformation;
  std::string rescale;
  ConcordanceResult result;
};

std::string report_to_csv(std::span<const ReportRow> rows,
                          std::span<const std::string> key_columns = {});

}  // namespace wordscores
