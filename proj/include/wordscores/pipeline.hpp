#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wordscores/construct.hpp"
#include "wordscores/corpus.hpp"
#include "wordscores/scaling.hpp"
#include "wordscores/validation.hpp"

namespace wordscores {

struct CountryConfig {
  std::string name;
  std::filesystem::path reference_manifest;
  std::filesystem::path virgin_manifest;
};

struct SourceConfig {
  std::string name;
  std::filesystem::path scores;  // `doc_id,dimension,score`
  /// Keys "<dimension>" or "<country>.<dimension>"; the latter wins.
  std::map<std::string, AnchorPair> anchors;

  std::optional<AnchorPair> anchors_for(std::string_view country, std::string_view dimension) const;
};

/// Run grid read from a flat `key = value` file. `[country NAME]` and
/// `[source NAME]` open repeatable section blocks. Relative paths resolve
/// against the config file's directory.
struct RunConfig {
  std::filesystem::path base_dir;
  std::filesystem::path output = "out";
  std::uint64_t seed = 42;

  std::vector<std::string> dimensions;
  std::vector<Variant> variants{Variant::total_words};
  std::vector<TransformKind> transforms{TransformKind::lbg};
  std::vector<RescaleMode> rescale{RescaleMode::whole_dimension};
  PreprocessConfig preprocess;
  FrequencyMode frequency = FrequencyMode::relative;

  CiMethod ci_method = CiMethod::lin;
  double ci_level = 0.95;
  int resamples = 1000;

  std::optional<std::filesystem::path> benchmark_data;  // external CSV
  std::vector<std::string> benchmarks;
  std::map<std::string, ColumnScale> scales;  // declared scales per column
  std::optional<std::filesystem::path> crosswalk;

  std::optional<std::filesystem::path> construct_data;  // `party_id,class_label`
  std::vector<std::string> construct_features;          // dimensions; default all

  std::vector<CountryConfig> countries;
  std::vector<SourceConfig> sources;

  /// Throws ConfigError on the first problem: empty axes, unknown names,
  /// missing files.
  void validate() const;
};

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct CellSpec {
  std::string country;
  std::string dimension;
  std::string source;
  Variant variant = Variant::total_words;
  TransformKind transform = TransformKind::lbg;

  /// Estimate column name, `<source>/<variant>/<transform>`.
  std::string column() const;
  std::filesystem::path relative_dir() const;
};

/// Country x dimension x source x variant x transform, in config order.
std::vector<CellSpec> enumerate_cells(const RunConfig& config);

struct CellOutcome {
  CellSpec spec;
  bool ok = false;
  std::string error;
  std::vector<VirginEstimate> estimates;
};

struct RunReport {
  std::vector<CellOutcome> cells;
  std::vector<ReportRow> summary;
  std::vector<std::string> errors;  // every failed cell or stage, "<where>: <message>"
  std::vector<FitStatistics> fits;

  /// 0 when nothing failed, 3 otherwise.
  int exit_code() const { return errors.empty() ? 0 : 3; }
};

/// Runs every grid cell (in parallel), then the validation and construct
/// stages, writing everything under `config.output`. Cell failures are
/// isolated and recorded.
RunReport run_pipeline(const RunConfig& config);

enum class PlotKind { wordscore_distribution, ccc_dotplot, fit_bars };
PlotKind parse_plot_kind(std::string_view text);
std::string_view to_string(PlotKind kind);

/// Long-format CSV built from the files of a finished run directory.
std::string emit_plot_data(const std::filesystem::path& run_dir, PlotKind kind);

// Building blocks shared with the single-step subcommands.

/// Loads and tokenizes one corpus, applies the per-(country, year) stoplists.
Corpus load_and_preprocess(const std::filesystem::path& manifest, CorpusRole role,
                           const PreprocessConfig& config,
                           std::vector<GroupStoplist>* stoplists = nullptr);

/// Reference set restricted to the documents scored on `dimension`.
ReferenceSet reference_for_dimension(const TermDocumentMatrix& matrix, const ReferenceScores& scores,
                                     std::string_view dimension);

std::string stoplists_to_csv(std::span<const GroupStoplist> lists);
std::string corpus_stats_to_csv(std::span<const std::pair<std::string, CorpusStats>> stats);
std::string diagnostics_to_csv(const OverlapDiagnostics& d);
/// Estimate table holding every source found in `records` as a column.
EstimateTable table_from_records(std::span<const ExternalRecord> records,
                                 const std::map<std::string, ColumnScale>& scales = {});

/// `doc_id,word,freq,score` for every virgin document.
std::string word_exports_to_csv(const Corpus& virgin, const WordScoreTable& table);

}  // namespace wordscores
