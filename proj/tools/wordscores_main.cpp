#include <CLI11.hpp>

#include <iostream>
#include <set>
#include <sstream>

#include "wordscores/construct.hpp"
#include "wordscores/corpus.hpp"
#include "wordscores/csv.hpp"
#include "wordscores/error.hpp"
#include "wordscores/pipeline.hpp"
#include "wordscores/scaling.hpp"
#include "wordscores/validation.hpp"

namespace fs = std::filesystem;
using namespace wordscores;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

/// Corpus/scoring inputs, taken from flags or from a config selection.
struct Inputs {
  std::string config;
  std::string country;
  std::string source;
  std::string reference;
  std::string virgin;
  std::string scores;
  std::string dimension;
  int top_k = 20;
  bool keep_numbers = false;
  bool keep_currency = false;
  bool raw_counts = false;
  std::optional<AnchorPair> anchors;
  std::string anchor_text;

  void add_to(CLI::App* app, bool needs_scores) {
    app->add_option("--config", config, "Run config to take manifests and scores from");
    app->add_option("--country", country, "Country section of the config (default: first)");
    app->add_option("--reference", reference, "Reference manifest (id,label,country,year,path)");
    app->add_option("--virgin", virgin, "Virgin manifest");
    if (needs_scores) {
      app->add_option("--source", source, "Source section of the config (default: first)");
      app->add_option("--scores", scores, "Reference scores (doc_id,dimension,score)");
      app->add_option("--dimension", dimension, "Dimension (default: first in config)");
      app->add_flag("--raw-counts", raw_counts, "Word probabilities from raw counts");
    }
    app->add_option("--top-k", top_k, "Most frequent words dropped per country and year")
        ->check(CLI::NonNegativeNumber);
    app->add_flag("--keep-numbers", keep_numbers, "Keep digit runs as tokens");
    app->add_flag("--keep-currency", keep_currency, "Keep currency symbols as tokens");
  }

  PreprocessConfig preprocess() const {
    PreprocessConfig p;
    p.top_k_stopwords = top_k;
    p.strip_numbers = !keep_numbers;
    p.strip_currency = !keep_currency;
    return p;
  }

  /// Fills unset paths from the config file.
  void resolve() {
    if (config.empty()) return;
    const auto cfg = load_run_config(config);
    const CountryConfig* c = cfg.countries.empty() ? nullptr : &cfg.countries.front();
    for (const auto& cc : cfg.countries)
      if (cc.name == country) c = &cc;
    if (!country.empty() && (!c || c->name != country))
      throw ConfigError("country '" + country + "' not in config");
    const SourceConfig* s = cfg.sources.empty() ? nullptr : &cfg.sources.front();
    for (const auto& ss : cfg.sources)
      if (ss.name == source) s = &ss;
    if (!source.empty() && (!s || s->name != source))
      throw ConfigError("source '" + source + "' not in config");
    if (c && reference.empty()) reference = c->reference_manifest.string();
    if (c && virgin.empty()) virgin = c->virgin_manifest.string();
    if (s && scores.empty()) scores = s->scores.string();
    if (dimension.empty() && !cfg.dimensions.empty()) dimension = cfg.dimensions.front();
    if (s && c && !anchors) anchors = s->anchors_for(c->name, dimension);
    top_k = cfg.preprocess.top_k_stopwords;
    keep_numbers = !cfg.preprocess.strip_numbers;
    keep_currency = !cfg.preprocess.strip_currency;
    raw_counts = raw_counts || cfg.frequency == FrequencyMode::raw_counts;
  }

  void require(std::initializer_list<std::pair<const char*, const std::string*>> fields) const {
    for (const auto& [name, value] : fields)
      if (value->empty()) throw ConfigError(std::string("missing --") + name);
  }
};

struct Prepared {
  Corpus reference;
  Corpus virgin;
  TermDocumentMatrix reference_matrix;
  TermDocumentMatrix virgin_matrix;
  std::vector<GroupStoplist> stoplists;
};

/// Stoplists from the reference and virgin texts together, as in `run`.
Prepared prepare(const Inputs& in) {
  Prepared p;
  p.reference = load_documents(in.reference, CorpusRole::reference);
  p.virgin = load_documents(in.virgin, CorpusRole::virgin);
  Corpus all;
  all.documents = p.reference.documents;
  all.documents.insert(all.documents.end(), p.virgin.documents.begin(), p.virgin.documents.end());
  p.stoplists = preprocess_corpus(all, in.preprocess());
  for (std::size_t i = 0; i < all.documents.size(); ++i) {
    auto& dst = i < p.reference.documents.size()
                    ? p.reference.documents[i]
                    : p.virgin.documents[i - p.reference.documents.size()];
    dst.tokens = std::move(all.documents[i].tokens);
    dst.text.clear();
  }
  p.reference_matrix = build_matrix(p.reference);
  p.virgin_matrix = build_matrix(p.virgin);
  return p;
}

std::string variants_to_csv(const VariantComparison& cmp) {
  std::ostringstream out;
  if (cmp.pearson)
    out << "# pearson=" << csv::format6(*cmp.pearson) << " ccc=" << csv::format6(cmp.ccc->rho_c) << '\n';
  csv::write_row(out, {"doc_id", "total", "cooccur", "difference"});
  for (const auto& p : cmp.pairs)
    csv::write_row(out, {p.doc_id, csv::format6(p.total_words), csv::format6(p.cooccurring),
                         csv::format6(p.difference)});
  return out.str();
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wordscores: supervised text scaling and validation"};
  app.require_subcommand(1);
  std::string out_dir = "wordscores-out";
  std::optional<std::uint64_t> seed;
  std::string variant_text = "total", transform_text = "lbg", rescale_text = "wd", ci_text = "lin";

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out_dir, "Output directory"); };
  auto add_variant = [&](CLI::App* sub) {
    sub->add_option("--variant", variant_text, "F_wv normalization")
        ->check(CLI::IsMember({"total", "cooccur"}));
  };
  auto add_transform = [&](CLI::App* sub) {
    sub->add_option("--transform", transform_text, "Score transformation")
        ->check(CLI::IsMember({"lbg", "mv"}));
  };
  auto add_rescale = [&](CLI::App* sub) {
    sub->add_option("--rescale", rescale_text, "Unit rescaling mode")
        ->check(CLI::IsMember({"wd", "pc"}));
  };
  auto add_ci = [&](CLI::App* sub) {
    sub->add_option("--ci", ci_text, "Concordance interval method")
        ->check(CLI::IsMember({"lin", "bootstrap"}));
    sub->add_option("--seed", seed, "Bootstrap seed");
  };

  // preprocess
  Inputs pre_in;
  auto* pre = app.add_subcommand("preprocess", "Tokenize, drop stopwords, export matrices and stoplists");
  pre_in.add_to(pre, false);
  add_out(pre);

  // score
  Inputs score_in;
  auto* score = app.add_subcommand("score", "Word scores and raw virgin scores");
  score_in.add_to(score, true);
  add_out(score);
  add_variant(score);

  // transform
  Inputs tr_in;
  auto* transform = app.add_subcommand("transform", "Raw scores plus LBG or MV transformation");
  tr_in.add_to(transform, true);
  transform->add_option("--anchors", tr_in.anchor_text, "MV anchors 'low,high' (default: min/max A)");
  add_out(transform);
  add_variant(transform);
  add_transform(transform);

  // rescale
  std::string rs_data, rs_column;
  std::vector<double> rs_scale;
  auto* rescale = app.add_subcommand("rescale", "Unit-rescale one source of an estimates CSV");
  rescale->add_option("--data", rs_data, "CSV party_id,country,dimension,source,score")->required();
  rescale->add_option("--column", rs_column, "Source to rescale")->required();
  rescale->add_option("--scale", rs_scale, "Declared scale 'min max' (default: empirical)")
      ->expected(2);
  add_out(rescale);
  add_rescale(rescale);

  // validate
  std::string va_data, va_candidate, va_dimension;
  std::vector<std::string> va_benchmarks;
  double va_level = 0.95;
  auto* validate = app.add_subcommand("validate", "Concordance of a candidate against benchmarks");
  validate->add_option("--data", va_data, "CSV party_id,country,dimension,source,score")->required();
  validate->add_option("--candidate", va_candidate, "Candidate source")->required();
  validate->add_option("--benchmarks", va_benchmarks, "Benchmark sources (at least 2)")
      ->required()->delimiter(',');
  validate->add_option("--dimension", va_dimension, "Only this dimension");
  validate->add_option("--level", va_level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  add_out(validate);
  add_rescale(validate);
  add_ci(validate);

  // construct
  std::vector<std::string> co_models;
  std::vector<std::string> co_features;
  auto* construct = app.add_subcommand("construct", "Multinomial fits and BIC comparison");
  construct->add_option("--model", co_models, "name=design.csv (party_id,class_label,features...)")
      ->required();
  construct->add_option("--features", co_features, "Feature subset")->delimiter(',');
  add_out(construct);

  // diagnose
  Inputs dg_in;
  auto* diagnose = app.add_subcommand("diagnose", "Vocabulary overlap, coverage, skewness, word counts");
  dg_in.add_to(diagnose, false);
  add_out(diagnose);

  // run
  std::string run_config;
  std::vector<std::string> run_variants, run_transforms, run_rescale;
  auto* run = app.add_subcommand("run", "Full grid from a run config");
  run->add_option("--config", run_config, "Run config")->required();
  run->add_option("--out", out_dir, "Output directory (overrides config)");
  run->add_option("--seed", seed, "Seed (overrides config)");
  run->add_option("--variant", run_variants, "Restrict variants")->delimiter(',')
      ->check(CLI::IsMember({"total", "cooccur"}));
  run->add_option("--transform", run_transforms, "Restrict transforms")->delimiter(',')
      ->check(CLI::IsMember({"lbg", "mv"}));
  run->add_option("--rescale", run_rescale, "Restrict rescale modes")->delimiter(',')
      ->check(CLI::IsMember({"wd", "pc"}));
  run->add_option("--ci", ci_text, "Concordance interval method")
      ->check(CLI::IsMember({"lin", "bootstrap"}));

  // plotdata
  std::string pd_kind, pd_file;
  auto* plotdata = app.add_subcommand("plotdata", "Plot-ready CSV from a finished run");
  plotdata->add_option("--out", out_dir, "Run output directory")->required();
  plotdata->add_option("--kind", pd_kind, "wordscore-distribution | ccc-dotplot | fit-bars")->required();
  plotdata->add_option("--file", pd_file, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const fs::path out(out_dir);
  try {
    if (*pre) {
      pre_in.resolve();
      pre_in.require({{"reference", &pre_in.reference}});
      std::vector<GroupStoplist> lists;
      auto corpus = load_and_preprocess(pre_in.reference, CorpusRole::reference, pre_in.preprocess(), &lists);
      const auto m = build_matrix(corpus);
      csv::write_text_file(out / "matrix.csv", matrix_to_csv(m));
      csv::write_text_file(out / "stoplists.csv", stoplists_to_csv(lists));
      const std::vector<std::pair<std::string, CorpusStats>> stats{{"reference", corpus_stats(m)}};
      csv::write_text_file(out / "corpus_stats.csv", corpus_stats_to_csv(stats));
    } else if (*score || *transform) {
      auto& in = *score ? score_in : tr_in;
      in.resolve();
      in.require({{"reference", &in.reference}, {"virgin", &in.virgin}, {"scores", &in.scores},
                  {"dimension", &in.dimension}});
      const auto variant = parse_variant(variant_text);
      const auto p = prepare(in);
      const auto ref =
          reference_for_dimension(p.reference_matrix, load_reference_scores(in.scores), in.dimension);
      const auto table = score_reference(
          ref, in.dimension, in.raw_counts ? FrequencyMode::raw_counts : FrequencyMode::relative);
      const auto raw = score_virgin(p.virgin_matrix, table, variant);
      csv::write_text_file(out / "wordscores.csv", word_table_to_csv(table));
      csv::write_text_file(out / "words.csv", word_exports_to_csv(p.virgin, table));
      if (*score) {
        csv::write_text_file(out / "estimates.csv", estimates_to_csv(raw, in.dimension, variant));
        csv::write_text_file(out / "variants.csv", variants_to_csv(compare_variants(p.virgin_matrix, table)));
      } else if (parse_transform(transform_text) == TransformKind::lbg) {
        const auto r = lbg_transform(raw, ref, in.dimension);
        csv::write_text_file(out / "estimates.csv", estimates_to_csv(r.estimates, in.dimension, variant));
      } else {
        if (!in.anchor_text.empty()) {
          const auto ids = split_commas(in.anchor_text);
          if (ids.size() != 2) throw ConfigError("--anchors expects 'low,high'");
          in.anchors = AnchorPair{ids[0], ids[1]};
        }
        const auto anchors = in.anchors ? *in.anchors : extreme_anchors(ref, in.dimension);
        const auto r = mv_transform(raw, ref, table, anchors, variant);
        csv::write_text_file(out / "estimates.csv", estimates_to_csv(r.estimates, in.dimension, variant));
        csv::write_text_file(out / "tradeoff.csv", tradeoff_to_csv(mv_tradeoff(ref, table, anchors, variant)));
      }
    } else if (*rescale) {
      std::map<std::string, ColumnScale> scales;
      if (rs_scale.size() == 2) scales[rs_column] = ColumnScale::declared(rs_scale[0], rs_scale[1]);
      const auto table = table_from_records(load_external(rs_data), scales);
      const auto values = rescale_unit(table, rs_column, parse_rescale_mode(rescale_text));
      std::ostringstream s;
      csv::write_row(s, {"party_id", "country", "dimension", "value", "rescaled"});
      const auto c = table.column(rs_column);
      for (std::size_t r = 0; r < table.num_rows(); ++r) {
        const auto v = table.value(r, c);
        if (!v) continue;
        const auto& k = table.key(r);
        csv::write_row(s, {k.party, k.country, k.dimension, csv::format6(*v), csv::format6(*values[r])});
      }
      csv::write_text_file(out / "rescaled.csv", s.str());
    } else if (*validate) {
      if (va_benchmarks.size() < 2) throw ConfigError("--benchmarks needs at least 2 sources");
      const auto table = table_from_records(load_external(va_data));
      std::set<std::string> dims;
      for (const auto& k : table.keys())
        if (va_dimension.empty() || k.dimension == va_dimension) dims.insert(k.dimension);
      if (dims.empty()) throw ConfigError("no rows for the requested dimension");
      BenchmarkOptions opts;
      opts.mode = parse_rescale_mode(rescale_text);
      opts.level = va_level;
      opts.ci_method = ci_text == "bootstrap" ? CiMethod::bootstrap : CiMethod::lin;
      opts.seed = seed.value_or(42);
      std::vector<ReportRow> rows;
      std::ostringstream thresholds;
      csv::write_row(thresholds, {"dimension", "first", "second", "rho_c", "n", "threshold", "candidate_passes"});
      for (const auto& dim : dims) {
        const auto r = benchmark_matrix(table.filter_dimension(dim), va_candidate, va_benchmarks, opts);
        for (const auto& p : r.candidate_pairs)
          rows.push_back({{dim}, p.first, p.second, "", rescale_text, p.result});
        for (const auto& p : r.benchmark_pairs)
          csv::write_row(thresholds, {dim, p.first, p.second, csv::format6(p.result.rho_c),
                                      std::to_string(p.result.n), csv::format6(r.threshold),
                                      r.all_pass ? "true" : "false"});
      }
      const std::vector<std::string> keys{"dimension"};
      csv::write_text_file(out / "report.csv", report_to_csv(rows, keys));
      csv::write_text_file(out / "thresholds.csv", thresholds.str());
    } else if (*construct) {
      std::vector<std::string> names;
      std::vector<DesignMatrix> designs;
      for (const auto& spec : co_models) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("--model expects name=path");
        names.push_back(spec.substr(0, eq));
        auto d = load_design(spec.substr(eq + 1));
        if (!co_features.empty()) d = d.select_features(co_features);
        designs.push_back(std::move(d));
      }
      const auto fits = fit_many(designs);
      const auto null_fit = fit_multinomial(designs.front().intercept_only());
      std::vector<FitStatistics> stats;
      for (std::size_t i = 0; i < fits.size(); ++i) {
        stats.push_back(fit_statistics(names[i], fits[i], null_fit, designs[i]));
        for (const auto& w : fits[i].warnings) std::cerr << names[i] << ": " << w << '\n';
      }
      csv::write_text_file(out / "fit_statistics.csv", fit_statistics_to_csv(stats));
      csv::write_text_file(out / "comparisons.csv", comparisons_to_csv(compare_models(fits, names)));
      csv::write_text_file(out / "coefficients.csv", coefficients_to_csv(names, fits, designs));
    } else if (*diagnose) {
      dg_in.resolve();
      dg_in.require({{"reference", &dg_in.reference}, {"virgin", &dg_in.virgin}});
      const auto p = prepare(dg_in);
      csv::write_text_file(out / "diagnostics.csv",
                           diagnostics_to_csv(diagnose_overlap(p.reference_matrix, p.virgin_matrix)));
      const std::vector<std::pair<std::string, CorpusStats>> stats{
          {"reference", corpus_stats(p.reference_matrix)}, {"virgin", corpus_stats(p.virgin_matrix)}};
      csv::write_text_file(out / "corpus_stats.csv", corpus_stats_to_csv(stats));
      csv::write_text_file(out / "stoplists.csv", stoplists_to_csv(p.stoplists));
    } else if (*run) {
      auto cfg = load_run_config(run_config);
      if (run->count("--out")) cfg.output = out;
      if (seed) cfg.seed = *seed;
      if (!run_variants.empty()) {
        cfg.variants.clear();
        for (const auto& v : run_variants) cfg.variants.push_back(parse_variant(v));
      }
      if (!run_transforms.empty()) {
        cfg.transforms.clear();
        for (const auto& t : run_transforms) cfg.transforms.push_back(parse_transform(t));
      }
      if (!run_rescale.empty()) {
        cfg.rescale.clear();
        for (const auto& r : run_rescale) cfg.rescale.push_back(parse_rescale_mode(r));
      }
      if (run->count("--ci")) cfg.ci_method = ci_text == "bootstrap" ? CiMethod::bootstrap : CiMethod::lin;
      const auto report = run_pipeline(cfg);
      std::size_t ok = 0;
      for (const auto& c : report.cells) ok += c.ok;
      std::cerr << ok << "/" << report.cells.size() << " cells ok, " << report.summary.size()
                << " summary rows\n";
      for (const auto& e : report.errors) std::cerr << "error: " << e << '\n';
      return report.exit_code();
    } else if (*plotdata) {
      const auto text = emit_plot_data(out, parse_plot_kind(pd_kind));
      if (pd_file.empty()) std::cout << text;
      else csv::write_text_file(pd_file, text);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const UnscorableDocumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
