#include "wordscores/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "wordscores/csv.hpp"
#include "wordscores/error.hpp"

namespace wordscores {

namespace fs = std::filesystem;

// --- config --------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(where + ": expected true/false, got '" + v + "'");
}

double parse_number(const std::string& v, const std::string& where) {
  try {
    return csv::parse_double(v, where);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
}

long long parse_integer(const std::string& v, const std::string& where) {
  try {
    return csv::parse_int(v, where);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
}

template <class T, class F>
std::vector<T> parse_enum_list(const std::string& v, const std::string& where, F parse) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) {
    try {
      out.push_back(parse(item));
    } catch (const ValidationError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_relative() ? base / p : p;
}

}  // namespace

std::optional<AnchorPair> SourceConfig::anchors_for(std::string_view country,
                                                    std::string_view dimension) const {
  auto it = anchors.find(std::string(country) + "." + std::string(dimension));
  if (it == anchors.end()) it = anchors.find(std::string(dimension));
  if (it == anchors.end()) return std::nullopt;
  return it->second;
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.output = base_dir / "out";
  enum class Section { global, country, source } section = Section::global;

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "config line " + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto s = trim(line);
    if (s.empty() || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + ": unterminated section header");
      const auto parts = split_words(std::string_view(s).substr(1, s.size() - 2));
      if (parts.size() != 2) throw ConfigError(where + ": expected [country NAME] or [source NAME]");
      if (parts[0] == "country") {
        cfg.countries.push_back({parts[1], {}, {}});
        section = Section::country;
      } else if (parts[0] == "source") {
        cfg.sources.push_back({parts[1], {}, {}});
        section = Section::source;
      } else {
        throw ConfigError(where + ": unknown section '" + parts[0] + "'");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const auto key = trim(std::string_view(s).substr(0, eq));
    const auto value = trim(std::string_view(s).substr(eq + 1));
    const std::string at = where + " (" + key + ")";

    if (section == Section::country) {
      auto& c = cfg.countries.back();
      if (key == "reference") c.reference_manifest = resolve(base_dir, value);
      else if (key == "virgin") c.virgin_manifest = resolve(base_dir, value);
      else throw ConfigError(where + ": unknown country key '" + key + "'");
      continue;
    }
    if (section == Section::source) {
      auto& src = cfg.sources.back();
      if (key == "scores") {
        src.scores = resolve(base_dir, value);
      } else if (key.rfind("anchor.", 0) == 0) {
        const auto ids = split_words(value);
        if (ids.size() != 2) throw ConfigError(at + ": expected two document ids 'low high'");
        src.anchors[key.substr(7)] = AnchorPair{ids[0], ids[1]};
      } else {
        throw ConfigError(where + ": unknown source key '" + key + "'");
      }
      continue;
    }

    if (key == "output") cfg.output = resolve(base_dir, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_integer(value, at));
    else if (key == "dimensions") cfg.dimensions = split_list(value);
    else if (key == "variants") cfg.variants = parse_enum_list<Variant>(value, at, parse_variant);
    else if (key == "transforms") cfg.transforms = parse_enum_list<TransformKind>(value, at, parse_transform);
    else if (key == "rescale") cfg.rescale = parse_enum_list<RescaleMode>(value, at, parse_rescale_mode);
    else if (key == "top_k") cfg.preprocess.top_k_stopwords = static_cast<int>(parse_integer(value, at));
    else if (key == "strip_numbers") cfg.preprocess.strip_numbers = parse_bool(value, at);
    else if (key == "strip_currency") cfg.preprocess.strip_currency = parse_bool(value, at);
    else if (key == "min_doc_fraction") cfg.preprocess.min_doc_fraction = parse_number(value, at);
    else if (key == "max_doc_fraction") cfg.preprocess.max_doc_fraction = parse_number(value, at);
    else if (key == "stemming") cfg.preprocess.stemming = parse_bool(value, at);
    else if (key == "frequency") {
      if (value == "relative") cfg.frequency = FrequencyMode::relative;
      else if (value == "raw") cfg.frequency = FrequencyMode::raw_counts;
      else throw ConfigError(at + ": expected relative|raw");
    } else if (key == "ci_method") {
      if (value == "lin") cfg.ci_method = CiMethod::lin;
      else if (value == "bootstrap") cfg.ci_method = CiMethod::bootstrap;
      else throw ConfigError(at + ": expected lin|bootstrap");
    } else if (key == "ci_level") cfg.ci_level = parse_number(value, at);
    else if (key == "bootstrap_resamples") cfg.resamples = static_cast<int>(parse_integer(value, at));
    else if (key == "benchmark_data") cfg.benchmark_data = resolve(base_dir, value);
    else if (key == "benchmarks") cfg.benchmarks = split_list(value);
    else if (key.rfind("scale.", 0) == 0) {
      const auto bounds = split_words(value);
      if (bounds.size() != 2) throw ConfigError(at + ": expected 'min max'");
      cfg.scales[key.substr(6)] =
          ColumnScale::declared(parse_number(bounds[0], at), parse_number(bounds[1], at));
    } else if (key == "crosswalk") cfg.crosswalk = resolve(base_dir, value);
    else if (key == "construct_data") cfg.construct_data = resolve(base_dir, value);
    else if (key == "construct_features") cfg.construct_features = split_list(value);
    else throw ConfigError(where + ": unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = csv::read_text_file(path);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void RunConfig::validate() const {
  auto require_file = [](const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigError(what + " is not set");
    if (!fs::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
  };
  auto unique = [](const auto& names, const std::string& what) {
    std::set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) throw ConfigError("duplicate " + what + " '" + n + "'");
  };

  if (dimensions.empty()) throw ConfigError("no dimensions configured");
  if (countries.empty()) throw ConfigError("no [country] sections");
  if (sources.empty()) throw ConfigError("no [source] sections");
  if (variants.empty() || transforms.empty() || rescale.empty())
    throw ConfigError("variants, transforms and rescale must not be empty");
  unique(dimensions, "dimension");
  try {
    preprocess.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("ci_level must lie in (0, 1)");
  if (resamples < 2) throw ConfigError("bootstrap_resamples must be at least 2");

  std::vector<std::string> names;
  for (const auto& c : countries) names.push_back(c.name);
  unique(names, "country");
  names.clear();
  for (const auto& s : sources) names.push_back(s.name);
  unique(names, "source");

  for (const auto& c : countries) {
    require_file(c.reference_manifest, "country " + c.name + " reference manifest");
    require_file(c.virgin_manifest, "country " + c.name + " virgin manifest");
    // Document files referenced by the manifests must exist too.
    for (const auto* m : {&c.reference_manifest, &c.virgin_manifest}) {
      try {
        const auto table = csv::read_file(*m);
        csv::require_header(table, {"id", "label", "country", "year", "path"}, m->string());
        for (const auto& row : table.rows) {
          fs::path f(row[4]);
          if (f.is_relative()) f = m->parent_path() / f;
          if (!fs::is_regular_file(f))
            throw ConfigError(m->string() + ": document '" + row[0] + "' not found: " + f.string());
        }
      } catch (const LoadError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  for (const auto& s : sources) require_file(s.scores, "source " + s.name + " scores");

  if (benchmark_data) {
    require_file(*benchmark_data, "benchmark_data");
    if (benchmarks.size() < 2) throw ConfigError("benchmark_data needs at least 2 benchmarks");
  } else if (!benchmarks.empty()) {
    throw ConfigError("benchmarks listed without benchmark_data");
  }
  unique(benchmarks, "benchmark");
  if (crosswalk) require_file(*crosswalk, "crosswalk");
  if (construct_data) require_file(*construct_data, "construct_data");
  for (const auto& f : construct_features)
    if (std::find(dimensions.begin(), dimensions.end(), f) == dimensions.end())
      throw ConfigError("construct feature '" + f + "' is not a configured dimension");
}

// --- cells ---------------------------------------------------------------------------

std::string CellSpec::column() const {
  return source + "/" + std::string(to_string(variant)) + "/" + std::string(to_string(transform));
}

fs::path CellSpec::relative_dir() const {
  return fs::path("cells") / country / dimension / source /
         (std::string(to_string(variant)) + "-" + std::string(to_string(transform)));
}

std::vector<CellSpec> enumerate_cells(const RunConfig& config) {
  std::vector<CellSpec> cells;
  for (const auto& c : config.countries)
    for (const auto& d : config.dimensions)
      for (const auto& s : config.sources)
        for (auto v : config.variants)
          for (auto t : config.transforms) cells.push_back({c.name, d, s.name, v, t});
  return cells;
}

// --- building blocks -----------------------------------------------------------------

Corpus load_and_preprocess(const fs::path& manifest, CorpusRole role, const PreprocessConfig& config,
                           std::vector<GroupStoplist>* stoplists) {
  auto corpus = load_documents(manifest, role);
  auto lists = preprocess_corpus(corpus, config);
  if (stoplists) *stoplists = std::move(lists);
  return corpus;
}

ReferenceSet reference_for_dimension(const TermDocumentMatrix& matrix, const ReferenceScores& scores,
                                     std::string_view dimension) {
  std::vector<std::string> ids;
  for (const auto& id : matrix.doc_ids()) {
    auto it = scores.find(id);
    if (it != scores.end() && it->second.count(std::string(dimension))) ids.push_back(id);
  }
  if (ids.size() < 2)
    throw ValidationError("fewer than 2 reference documents scored on '" + std::string(dimension) + "'");
  ReferenceSet ref(ids.size() == matrix.num_docs() ? matrix : matrix.select_documents(ids), scores);
  ref.validate(dimension);
  return ref;
}

std::string stoplists_to_csv(std::span<const GroupStoplist> lists) {
  std::ostringstream out;
  csv::write_row(out, {"country", "year", "rank", "word", "count"});
  for (const auto& l : lists)
    for (std::size_t i = 0; i < l.words.size(); ++i)
      csv::write_row(out, {l.country, std::to_string(l.year), std::to_string(i + 1), l.words[i],
                           std::to_string(l.counts[i])});
  return out.str();
}

std::string corpus_stats_to_csv(std::span<const std::pair<std::string, CorpusStats>> stats) {
  std::ostringstream out;
  csv::write_row(out, {"corpus", "obs", "mean_total", "sd_total", "mean_unique", "sd_unique",
                       "sd_defined"});
  for (const auto& [name, s] : stats)
    csv::write_row(out, {name, std::to_string(s.documents), csv::format6(s.mean_total),
                         csv::format6(s.sd_total), csv::format6(s.mean_unique),
                         csv::format6(s.sd_unique), s.sd_defined ? "true" : "false"});
  return out.str();
}

std::string diagnostics_to_csv(const OverlapDiagnostics& d) {
  std::ostringstream out;
  out << "# vocabulary_overlap=" << csv::format6(d.vocabulary_overlap)
      << " reference_skewness=" << csv::format6(d.reference_skewness)
      << " virgin_skewness=" << csv::format6(d.virgin_skewness) << '\n';
  csv::write_row(out, {"doc_id", "coverage"});
  for (std::size_t i = 0; i < d.virgin_ids.size(); ++i)
    csv::write_row(out, {d.virgin_ids[i], csv::format6(d.coverage[i])});
  return out.str();
}

std::string word_exports_to_csv(const Corpus& virgin, const WordScoreTable& table) {
  std::ostringstream out;
  csv::write_row(out, {"doc_id", "word", "freq", "score"});
  for (const auto& doc : virgin.documents)
    for (const auto& r : export_wordscores(doc, table))
      csv::write_row(out, {doc.id, r.word, std::to_string(r.frequency),
                           r.score ? csv::format6(*r.score) : ""});
  return out.str();
}

EstimateTable table_from_records(std::span<const ExternalRecord> records,
                                 const std::map<std::string, ColumnScale>& scales) {
  EstimateTable table;
  std::set<EstimateKey> keys;
  for (const auto& r : records) {
    if (!table.find_column(r.source)) {
      auto it = scales.find(r.source);
      table.add_column(r.source, it == scales.end() ? ColumnScale::empirical() : it->second);
    }
    keys.insert({r.party_id, r.country, r.dimension});
  }
  for (const auto& k : keys) table.add_row(k);
  std::set<std::pair<EstimateKey, std::string>> seen;
  for (const auto& r : records) {
    EstimateKey key{r.party_id, r.country, r.dimension};
    if (!seen.insert({key, r.source}).second)
      throw ValidationError("source '" + r.source + "' has duplicate score for (" + r.party_id +
                            ", " + r.dimension + ")");
    table.set(*table.find_row(key), table.column(r.source), r.score);
  }
  return table;
}

// --- run -----------------------------------------------------------------------------

namespace {

struct CountryData {
  Corpus reference;
  Corpus virgin;
  TermDocumentMatrix reference_matrix;
  TermDocumentMatrix virgin_matrix;
  std::vector<GroupStoplist> stoplists;
};

/// Stoplists are computed per (country, year) over the reference and virgin
/// texts together, then applied to both.
CountryData prepare_country(const CountryConfig& c, const PreprocessConfig& pre) {
  CountryData data;
  data.reference = load_documents(c.reference_manifest, CorpusRole::reference);
  data.virgin = load_documents(c.virgin_manifest, CorpusRole::virgin);
  Corpus all;
  for (const auto* corpus : {&data.reference, &data.virgin})
    all.documents.insert(all.documents.end(), corpus->documents.begin(), corpus->documents.end());
  data.stoplists = preprocess_corpus(all, pre);
  const auto nref = data.reference.documents.size();
  for (std::size_t i = 0; i < all.documents.size(); ++i) {
    auto& dst = i < nref ? data.reference.documents[i] : data.virgin.documents[i - nref];
    dst.tokens = std::move(all.documents[i].tokens);
    dst.text.clear();
  }
  data.reference_matrix = build_matrix(data.reference);
  data.virgin_matrix = build_matrix(data.virgin);
  return data;
}

std::string transform_label(TransformKind k) { return k == TransformKind::lbg ? "LBG" : "MV"; }

void run_cell(const RunConfig& config, const CountryData& country, const ReferenceScores& scores,
              const SourceConfig& source, CellOutcome& outcome) {
  const auto& spec = outcome.spec;
  const fs::path dir = config.output / spec.relative_dir();
  const auto ref = reference_for_dimension(country.reference_matrix, scores, spec.dimension);
  const auto table = score_reference(ref, spec.dimension, config.frequency);
  const auto raw = score_virgin(country.virgin_matrix, table, spec.variant);

  TransformResult result;
  std::optional<AnchorPair> anchors;
  if (spec.transform == TransformKind::lbg) {
    result = lbg_transform(raw, ref, spec.dimension);
  } else {
    anchors = source.anchors_for(spec.country, spec.dimension);
    if (!anchors) anchors = extreme_anchors(ref, spec.dimension);
    result = mv_transform(raw, ref, table, *anchors, spec.variant);
  }

  csv::write_text_file(dir / "estimates.csv",
                       estimates_to_csv(result.estimates, spec.dimension, spec.variant));
  csv::write_text_file(dir / "wordscores.csv", word_table_to_csv(table));
  csv::write_text_file(dir / "words.csv", word_exports_to_csv(country.virgin, table));
  if (anchors)
    csv::write_text_file(dir / "tradeoff.csv",
                         tradeoff_to_csv(mv_tradeoff(ref, table, *anchors, spec.variant)));
  outcome.estimates = std::move(result.estimates);
  outcome.ok = true;
}

std::string cells_index_csv(const std::vector<CellOutcome>& cells) {
  std::ostringstream out;
  csv::write_row(out, {"country", "dimension", "source", "variant", "transform", "status", "path",
                       "error"});
  for (const auto& c : cells)
    csv::write_row(out, {c.spec.country, c.spec.dimension, c.spec.source,
                         std::string(to_string(c.spec.variant)),
                         std::string(to_string(c.spec.transform)), c.ok ? "ok" : "failed",
                         c.spec.relative_dir().generic_string(), c.error});
  return out.str();
}

void validation_stage(const RunConfig& config, const EstimateTable& table,
                      const std::vector<CellSpec>& columns, RunReport& report) {
  std::ostringstream thresholds, criterion;
  csv::write_row(thresholds, {"dimension", "rescale", "first", "second", "rho_c", "n", "ci_low",
                              "ci_high"});
  csv::write_row(criterion, {"dimension", "variant", "reference", "transformation", "rescale",
                             "benchmark", "rho_c", "ci_high", "threshold", "passes"});
  std::uint64_t stream = 0;
  for (const auto& dim : config.dimensions) {
    const auto sub = table.filter_dimension(dim);
    for (auto mode : config.rescale) {
      bool thresholds_written = false;
      for (const auto& col : columns) {
        if (col.dimension != dim) continue;
        BenchmarkOptions opts;
        opts.mode = mode;
        opts.level = config.ci_level;
        opts.ci_method = config.ci_method;
        opts.resamples = config.resamples;
        opts.seed = config.seed + stream++;
        try {
          const auto r = benchmark_matrix(sub, col.column(), config.benchmarks, opts);
          if (!thresholds_written) {
            for (const auto& p : r.benchmark_pairs)
              csv::write_row(thresholds, {dim, std::string(to_string(mode)), p.first, p.second,
                                          csv::format6(p.result.rho_c), std::to_string(p.result.n),
                                          csv::format6(p.result.ci_low),
                                          csv::format6(p.result.ci_high)});
            thresholds_written = true;
          }
          for (const auto& p : r.candidate_pairs) {
            report.summary.push_back({{dim, std::string(to_string(col.variant))},
                                      col.source,
                                      p.second,
                                      transform_label(col.transform),
                                      std::string(to_string(mode)),
                                      p.result});
            csv::write_row(criterion,
                           {dim, std::string(to_string(col.variant)), col.source,
                            transform_label(col.transform), std::string(to_string(mode)), p.second,
                            csv::format6(p.result.rho_c), csv::format6(p.result.ci_high),
                            csv::format6(r.threshold), p.passes ? "true" : "false"});
          }
        } catch (const Error& e) {
          report.errors.push_back("validation " + dim + " " + col.column() + " " +
                                  std::string(to_string(mode)) + ": " + e.what());
        }
      }
    }
  }
  const std::vector<std::string> keys{"dimension", "variant"};
  csv::write_text_file(config.output / "summary.csv", report_to_csv(report.summary, keys));
  csv::write_text_file(config.output / "thresholds.csv", thresholds.str());
  csv::write_text_file(config.output / "criterion.csv", criterion.str());
}

void construct_stage(const RunConfig& config, const EstimateTable& table,
                     const std::vector<std::string>& models, RunReport& report) {
  const auto groups = load_design(*config.construct_data);
  const auto features =
      config.construct_features.empty() ? config.dimensions : config.construct_features;

  // party -> column -> dimension -> value
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> values;
  for (std::size_t r = 0; r < table.num_rows(); ++r)
    for (const auto& m : models)
      if (auto c = table.find_column(m))
        if (auto v = table.value(r, *c)) values[table.key(r).party][m][table.key(r).dimension] = *v;

  // Identical rows for every model: parties complete on every model and feature.
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < groups.rows(); ++i) {
    auto it = values.find(groups.row_ids[i]);
    bool complete = it != values.end();
    for (const auto& m : models)
      for (const auto& f : features)
        complete = complete && it->second.count(m) && it->second.at(m).count(f);
    if (complete) rows.push_back(i);
  }
  std::vector<std::string> ids, labels;
  for (auto i : rows) {
    ids.push_back(groups.row_ids[i]);
    labels.push_back(groups.class_names[static_cast<std::size_t>(groups.labels[i])]);
  }
  if (ids.empty()) throw ValidationError("no party is complete on every construct model");

  std::vector<DesignMatrix> designs;
  for (const auto& m : models) {
    std::vector<double> x;
    for (const auto& id : ids)
      for (const auto& f : features) x.push_back(values.at(id).at(m).at(f));
    auto d = make_design(ids, features, std::move(x), labels);
    d.dropped_rows = groups.rows() - ids.size() + groups.dropped_rows;
    designs.push_back(std::move(d));
  }
  auto fits = fit_many(designs);
  const auto null_fit = fit_multinomial(designs.front().intercept_only());
  std::vector<FitStatistics> stats;
  for (std::size_t i = 0; i < models.size(); ++i)
    stats.push_back(fit_statistics(models[i], fits[i], null_fit, designs[i]));
  const fs::path dir = config.output / "construct";
  csv::write_text_file(dir / "fit_statistics.csv", fit_statistics_to_csv(stats));
  csv::write_text_file(dir / "comparisons.csv", comparisons_to_csv(compare_models(fits, models)));
  csv::write_text_file(dir / "coefficients.csv", coefficients_to_csv(models, fits, designs));
  report.fits = std::move(stats);
}

}  // namespace

RunReport run_pipeline(const RunConfig& config) {
  config.validate();
  RunReport report;
  const fs::path out = config.output;
  fs::create_directories(out);

  // Corpora and scores are loaded once and shared read-only by the cells.
  std::vector<std::optional<CountryData>> countries(config.countries.size());
  std::vector<std::string> country_errors(config.countries.size());
  std::vector<std::pair<std::string, CorpusStats>> stats;
  for (std::size_t i = 0; i < config.countries.size(); ++i) {
    const auto& c = config.countries[i];
    try {
      countries[i] = prepare_country(c, config.preprocess);
      const fs::path dir = out / "preprocess" / c.name;
      csv::write_text_file(dir / "stoplists.csv", stoplists_to_csv(countries[i]->stoplists));
      csv::write_text_file(dir / "reference_matrix.csv", matrix_to_csv(countries[i]->reference_matrix));
      csv::write_text_file(dir / "diagnostics.csv",
                           diagnostics_to_csv(diagnose_overlap(countries[i]->reference_matrix,
                                                               countries[i]->virgin_matrix)));
      stats.emplace_back(c.name + "/reference", corpus_stats(countries[i]->reference_matrix));
      stats.emplace_back(c.name + "/virgin", corpus_stats(countries[i]->virgin_matrix));
    } catch (const Error& e) {
      country_errors[i] = e.what();
      report.errors.push_back("country " + c.name + ": " + e.what());
    }
  }
  csv::write_text_file(out / "corpus_stats.csv", corpus_stats_to_csv(stats));

  std::vector<ReferenceScores> scores(config.sources.size());
  std::vector<std::string> source_errors(config.sources.size());
  for (std::size_t i = 0; i < config.sources.size(); ++i) {
    try {
      scores[i] = load_reference_scores(config.sources[i].scores);
    } catch (const Error& e) {
      source_errors[i] = e.what();
      report.errors.push_back("source " + config.sources[i].name + ": " + e.what());
    }
  }

  const auto specs = enumerate_cells(config);
  report.cells.resize(specs.size());
  auto country_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < config.countries.size(); ++i)
      if (config.countries[i].name == name) return i;
    return std::size_t{0};
  };
  auto source_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < config.sources.size(); ++i)
      if (config.sources[i].name == name) return i;
    return std::size_t{0};
  };

  const auto ncells = static_cast<std::ptrdiff_t>(specs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < ncells; ++i) {
    auto& outcome = report.cells[static_cast<std::size_t>(i)];
    outcome.spec = specs[static_cast<std::size_t>(i)];
    const auto ci = country_index(outcome.spec.country);
    const auto si = source_index(outcome.spec.source);
    const fs::path dir = out / outcome.spec.relative_dir();
    try {
      if (!countries[ci]) throw ValidationError("country failed to load: " + country_errors[ci]);
      if (!source_errors[si].empty()) throw ValidationError("source failed to load: " + source_errors[si]);
      run_cell(config, *countries[ci], scores[si], config.sources[si], outcome);
    } catch (const UnscorableDocumentError& e) {
      outcome.error = e.what();
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    if (!outcome.ok) {
      outcome.estimates.clear();
      try {
        csv::write_text_file(dir / "error.log", outcome.error + "\n");
      } catch (const std::exception&) {
      }
    }
  }
  for (const auto& c : report.cells)
    if (!c.ok) report.errors.push_back("cell " + c.spec.relative_dir().generic_string() + ": " + c.error);
  csv::write_text_file(out / "cells.csv", cells_index_csv(report.cells));

  // Meta-dataset: one column per (source, variant, transform).
  std::vector<CellSpec> columns;
  std::vector<RunEstimates> runs;
  std::vector<CrosswalkEntry> identity;
  for (const auto& s : config.sources)
    for (auto v : config.variants)
      for (auto t : config.transforms) {
        CellSpec proto{"", "", s.name, v, t};
        RunEstimates run{proto.column(), {}};
        for (const auto& c : report.cells) {
          if (!c.ok || c.spec.column() != run.column) continue;
          for (const auto& e : c.estimates)
            run.records.push_back({e.doc_id, c.spec.dimension, e.transformed ? e.transformed->value : e.raw});
        }
        runs.push_back(std::move(run));
        for (const auto& d : config.dimensions) {
          proto.dimension = d;
          columns.push_back(proto);
        }
      }
  for (std::size_t i = 0; i < countries.size(); ++i)
    if (countries[i])
      for (const auto& doc : countries[i]->virgin.documents)
        identity.push_back({doc.id, doc.id, doc.country.empty() ? config.countries[i].name : doc.country});

  try {
    std::vector<ExternalRecord> external;
    if (config.benchmark_data) external = load_external(*config.benchmark_data);
    const auto crosswalk = config.crosswalk ? load_crosswalk(*config.crosswalk) : identity;
    const auto merged = merge_estimates(runs, external, crosswalk, config.scales);
    if (!merged.uncovered.empty()) {
      std::string list;
      for (const auto& id : merged.uncovered) list += (list.empty() ? "" : ", ") + id;
      report.errors.push_back("crosswalk does not cover: " + list);
    }
    if (config.benchmark_data) validation_stage(config, merged.table, columns, report);
    if (config.construct_data) {
      std::vector<std::string> models;
      for (const auto& r : runs) models.push_back(r.column);
      models.insert(models.end(), config.benchmarks.begin(), config.benchmarks.end());
      try {
        construct_stage(config, merged.table, models, report);
      } catch (const Error& e) {
        report.errors.push_back(std::string("construct: ") + e.what());
      }
    }
  } catch (const Error& e) {
    report.errors.push_back(std::string("merge: ") + e.what());
  }

  std::ostringstream errors;
  for (const auto& e : report.errors) errors << e << '\n';
  csv::write_text_file(out / "errors.log", errors.str());

  for (auto kind : {PlotKind::wordscore_distribution, PlotKind::ccc_dotplot, PlotKind::fit_bars}) {
    try {
      csv::write_text_file(out / "plots" / (std::string(to_string(kind)) + ".csv"),
                           emit_plot_data(out, kind));
    } catch (const ValidationError&) {
      // analysis not part of this run
    }
  }
  return report;
}

// --- plot data -----------------------------------------------------------------------

PlotKind parse_plot_kind(std::string_view text) {
  if (text == "wordscore-distribution") return PlotKind::wordscore_distribution;
  if (text == "ccc-dotplot") return PlotKind::ccc_dotplot;
  if (text == "fit-bars") return PlotKind::fit_bars;
  throw ConfigError("unknown plot kind '" + std::string(text) +
                    "' (expected wordscore-distribution|ccc-dotplot|fit-bars)");
}

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::wordscore_distribution: return "wordscore-distribution";
    case PlotKind::ccc_dotplot: return "ccc-dotplot";
    case PlotKind::fit_bars: return "fit-bars";
  }
  return "";
}

namespace {

csv::Table read_run_file(const fs::path& path) {
  if (!fs::is_regular_file(path))
    throw ValidationError("run output missing: " + path.string() + " (analysis did not run)");
  return csv::read_file(path);
}

}  // namespace

std::string emit_plot_data(const fs::path& run_dir, PlotKind kind) {
  std::ostringstream out;
  if (kind == PlotKind::wordscore_distribution) {
    const auto cells = read_run_file(run_dir / "cells.csv");
    out << "# one row per (virgin document, word): freq = occurrences, score = wordscore (empty if unscored)\n";
    csv::write_row(out, {"country", "dimension", "source", "doc_id", "word", "freq", "score"});
    std::set<std::tuple<std::string, std::string, std::string>> done;
    const auto status = cells.column("status"), path = cells.column("path");
    for (const auto& row : cells.rows) {
      if (row[status] != "ok") continue;
      // Word scores do not depend on variant or transform; first cell wins.
      if (!done.insert({row[0], row[1], row[2]}).second) continue;
      const auto words = read_run_file(run_dir / row[path] / "words.csv");
      for (const auto& w : words.rows)
        csv::write_row(out, {row[0], row[1], row[2], w[0], w[1], w[2], w[3]});
    }
  } else if (kind == PlotKind::ccc_dotplot) {
    const auto thresholds = read_run_file(run_dir / "thresholds.csv");
    const auto summary = read_run_file(run_dir / "summary.csv");
    out << "# kind = threshold (benchmark vs benchmark) or candidate (wordscores vs benchmark)\n";
    csv::write_row(out, {"dimension", "rescale", "kind", "label", "rho_c", "ci_low", "ci_high"});
    for (const auto& r : thresholds.rows)
      csv::write_row(out, {r[0], r[1], "threshold", r[2] + "/" + r[3], r[4], r[6], r[7]});
    const auto c = [&](std::string_view n) { return summary.column(n); };
    for (const auto& r : summary.rows)
      csv::write_row(out, {r[c("dimension")], r[c("rescale")], "candidate",
                           r[c("reference")] + "/" + r[c("variant")] + "/" + r[c("transformation")] +
                               " vs " + r[c("benchmark")],
                           r[c("rho_c")], r[c("ci_low")], r[c("ci_high")]});
  } else {
    const auto fits = read_run_file(run_dir / "construct" / "fit_statistics.csv");
    out << "# one row per model: count R2 and McFadden pseudo-R2\n";
    csv::write_row(out, {"model", "count_r2", "mcfadden_r2"});
    for (const auto& r : fits.rows)
      csv::write_row(out, {r[fits.column("model")], r[fits.column("count_r2")],
                           r[fits.column("mcfadden_r2")]});
  }
  return out.str();
}

}  // namespace wordscores
