#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "support/synthetic.hpp"
#include "wordscores/csv.hpp"
#include "wordscores/error.hpp"
#include "wordscores/pipeline.hpp"

using namespace wordscores;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) { return csv::read_text_file(p); }

/// Every regular file under `dir`, relative path -> contents.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WORDSCORES_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_run_config(
      "# grid\n"
      "output = results\n"
      "seed = 9   # trailing comment\n"
      "dimensions = lr, eu\n"
      "variants = cooccur\n"
      "transforms = lbg, mv\n"
      "rescale = pc\n"
      "top_k = 3\n"
      "ci_method = bootstrap\n"
      "scale.ches = 0 10\n"
      "[country uk]\nreference = uk/ref.csv\nvirgin = uk/vir.csv\n"
      "[source bl]\nscores = bl.csv\nanchor.lr = a b\nanchor.uk.eu = c d\n",
      "/base");
  CHECK(cfg.output == fs::path("/base/results"));
  CHECK(cfg.seed == 9);
  CHECK(cfg.dimensions == std::vector<std::string>{"lr", "eu"});
  CHECK(cfg.variants == std::vector<Variant>{Variant::cooccurring});
  CHECK(cfg.transforms.size() == 2);
  CHECK(cfg.rescale == std::vector<RescaleMode>{RescaleMode::per_country});
  CHECK(cfg.preprocess.top_k_stopwords == 3);
  CHECK(cfg.ci_method == CiMethod::bootstrap);
  CHECK(*cfg.scales.at("ches").max == 10.0);
  REQUIRE(cfg.countries.size() == 1);
  CHECK(cfg.countries[0].reference_manifest == fs::path("/base/uk/ref.csv"));
  CHECK(cfg.sources[0].anchors_for("uk", "lr")->low == "a");
  CHECK(cfg.sources[0].anchors_for("uk", "eu")->high == "d");
  CHECK_FALSE(cfg.sources[0].anchors_for("nl", "eu").has_value());

  CHECK_THROWS_AS(parse_run_config("bogus = 1\n", "."), ConfigError);
  CHECK_THROWS_AS(parse_run_config("variants = sideways\n", "."), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[planet mars]\n", "."), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = x\n", "."), ConfigError);
}

TEST_CASE("grid cells enumerate in deterministic order") {
  RunConfig cfg;
  cfg.countries = {{"uk", {}, {}}};
  cfg.dimensions = {"lr", "eu"};
  cfg.sources = {{"bl", {}, {}}, {"ches", {}, {}}};
  cfg.variants = {Variant::total_words};
  cfg.transforms = {TransformKind::lbg, TransformKind::mv};
  const auto cells = enumerate_cells(cfg);
  REQUIRE(cells.size() == 8);
  CHECK(cells[0].column() == "bl/total/lbg");
  CHECK(cells[1].column() == "bl/total/mv");
  CHECK(cells[2].column() == "ches/total/lbg");
  CHECK(cells[4].dimension == "eu");
  CHECK(cells[7].relative_dir() == fs::path("cells/uk/eu/ches/total-mv"));
}

TEST_CASE("toy run reproduces the hand-computed values") {
  const auto dir = synthetic::temp_dir("toy");
  const auto cfg = load_run_config(synthetic::write_toy_project(dir));
  const auto report = run_pipeline(cfg);
  CHECK(report.exit_code() == 0);
  REQUIRE(report.cells.size() == 4);
  const double mean = (-5.0 / 143 + 45.0 / 429) / 2;
  for (const auto& cell : report.cells) {
    REQUIRE(cell.ok);
    REQUIRE(cell.estimates.size() == 2);
    CHECK(std::abs(cell.estimates[0].raw - -5.0 / 143) < 1e-12);
    CHECK(std::abs(cell.estimates[1].raw - 45.0 / 429) < 1e-12);
    if (cell.spec.transform == TransformKind::lbg) {
      CHECK(std::abs(cell.estimates[0].transformed->value - (mean - 1.0)) < 1e-12);
      CHECK(std::abs(cell.estimates[1].transformed->value - (mean + 1.0)) < 1e-12);
    } else {
      CHECK(std::abs(cell.estimates[0].transformed->value - -0.2) < 1e-12);
      const auto trade = csv::read_file(cfg.output / cell.spec.relative_dir() / "tradeoff.csv");
      for (const auto& row : trade.rows) CHECK(row[3] == "0");
    }
  }
  const auto est = slurp(cfg.output / "cells/toy/lr/toysrc/total-mv/estimates.csv");
  CHECK(est.find("V,lr,total,-0.034965,") != std::string::npos);
  CHECK(est.find(",mv,-0.2\n") != std::string::npos);

  const auto words = emit_plot_data(cfg.output, PlotKind::wordscore_distribution);
  const auto t = csv::parse(words);
  std::size_t v_rows = 0;
  for (const auto& row : t.rows) v_rows += row[3] == "V";
  CHECK(v_rows == 2);
  CHECK(words.find("toy,lr,toysrc,V,tax,1,-0.454545") != std::string::npos);
  CHECK_THROWS_AS(emit_plot_data(cfg.output, PlotKind::ccc_dotplot), ValidationError);
  CHECK_THROWS_AS(parse_plot_kind("pie"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("invalid config fails before writing anything") {
  const auto dir = synthetic::temp_dir("badcfg");
  synthetic::write_toy_project(dir);
  synthetic::write_file(dir / "bad.conf",
                        "output = out\ndimensions = lr\ntop_k = 0\n"
                        "[country toy]\nreference = missing.csv\nvirgin = virgin.csv\n"
                        "[source s]\nscores = scores.csv\n");
  const auto cfg = load_run_config(dir / "bad.conf");
  CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
  CHECK_FALSE(fs::exists(dir / "out"));
  fs::remove_all(dir);
}

TEST_CASE("a failing cell does not disturb the others") {
  const auto dir = synthetic::temp_dir("partial");
  synthetic::write_toy_project(dir);
  // second country whose virgin text shares no word with its reference texts
  synthetic::write_file(dir / "texts/u.txt", "unicorn dragon");
  synthetic::write_file(dir / "virgin-bad.csv", "id,label,country,year,path\nU,U,bad,2009,texts/u.txt\n");
  auto conf = slurp(dir / "toy.conf");
  conf += "\n[country bad]\nreference = reference.csv\nvirgin = virgin-bad.csv\n";
  synthetic::write_file(dir / "two.conf", conf);

  auto cfg = load_run_config(dir / "two.conf");
  const auto report = run_pipeline(cfg);
  CHECK(report.exit_code() == 3);
  std::size_t failed = 0;
  for (const auto& c : report.cells) {
    if (c.spec.country == "bad") {
      CHECK_FALSE(c.ok);
      CHECK(c.error.find("U") != std::string::npos);
      CHECK(fs::exists(cfg.output / c.spec.relative_dir() / "error.log"));
      ++failed;
    } else {
      CHECK(c.ok);
    }
  }
  CHECK(failed == 4);

  // the healthy cells are byte-identical to a run without the failing country
  auto solo = load_run_config(dir / "toy.conf");
  solo.output = dir / "solo";
  run_pipeline(solo);
  const auto a = snapshot(cfg.output / "cells/toy"), b = snapshot(solo.output / "cells/toy");
  CHECK(a == b);
  fs::remove_all(dir);
}

TEST_CASE("synthetic grid: determinism, summary round trip, plot data") {
  const auto dir = synthetic::temp_dir("grid");
  const auto path = synthetic::write_synthetic_project(dir, {.countries = 2, .virgin_per_country = 10});
  auto cfg = load_run_config(path);
  const auto report = run_pipeline(cfg);
  for (const auto& e : report.errors) INFO(e);
  CHECK(report.exit_code() == 0);
  CHECK(report.cells.size() == 2 * 2 * 1 * 2 * 2);
  // 2 dims x 4 candidates x 2 rescale modes x 3 benchmarks
  CHECK(report.summary.size() == 48);
  CHECK(report.fits.size() == 4 + 3);

  const auto summary = csv::read_file(cfg.output / "summary.csv");
  CHECK(summary.header == std::vector<std::string>{"dimension", "variant", "reference", "benchmark",
                                                    "transformation", "rescale", "rho_c", "n", "ci_low",
                                                    "ci_high", "pearson_r", "c_b"});
  for (const auto& row : summary.rows) {
    const double rc = std::stod(row[6]), r = std::stod(row[10]), cb = std::stod(row[11]);
    CHECK(std::abs(rc - r * cb) < 1e-9);
  }

  const auto dots = csv::parse(emit_plot_data(cfg.output, PlotKind::ccc_dotplot));
  std::size_t thresholds = 0, candidates = 0;
  for (const auto& row : dots.rows) (row[2] == "threshold" ? thresholds : candidates)++;
  CHECK(thresholds == 2 * 2 * 3);
  CHECK(candidates == 48);
  const auto bars = csv::parse(emit_plot_data(cfg.output, PlotKind::fit_bars));
  CHECK(bars.rows.size() == 7);
  CHECK(bars.header == std::vector<std::string>{"model", "count_r2", "mcfadden_r2"});

  auto again = cfg;
  again.output = dir / "again";
  run_pipeline(again);
  CHECK(snapshot(cfg.output) == snapshot(again.output));
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes and subcommands") {
  const auto dir = synthetic::temp_dir("cli");
  const auto conf = synthetic::write_toy_project(dir);
  const std::string d = dir.string();
  CHECK(run_cli("run --config " + conf.string() + " --out " + d + "/run") == 0);
  CHECK(fs::exists(dir / "run/cells.csv"));
  CHECK(run_cli("run --config " + d + "/nope.conf") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("plotdata --out " + d + "/run --kind pie") == 2);
  CHECK(run_cli("plotdata --out " + d + "/run --kind wordscore-distribution --file " + d + "/w.csv") == 0);
  CHECK(slurp(dir / "w.csv").find("toy,lr,toysrc,V,spend,1,0.384615") != std::string::npos);

  CHECK(run_cli("score --config " + conf.string() + " --variant cooccur --out " + d + "/score") == 0);
  CHECK(slurp(dir / "score/estimates.csv").find("V,lr,cooccur,-0.034965,0.296688,") != std::string::npos);
  CHECK(run_cli("transform --config " + conf.string() + " --transform mv --out " + d + "/mv") == 0);
  CHECK(slurp(dir / "mv/estimates.csv").find(",mv,-0.2\n") != std::string::npos);
  CHECK(run_cli("preprocess --config " + conf.string() + " --out " + d + "/pre") == 0);
  CHECK(slurp(dir / "pre/matrix.csv") == "word,R1,R2\nspend,1,3\ntax,2,1\n");
  CHECK(run_cli("diagnose --config " + conf.string() + " --out " + d + "/diag") == 0);
  CHECK(fs::exists(dir / "diag/diagnostics.csv"));

  synthetic::write_file(dir / "ext.csv",
                        "party_id,country,dimension,source,score\n"
                        "a,x,lr,ws,1\nb,x,lr,ws,2\nc,x,lr,ws,3\nd,x,lr,ws,5\ne,x,lr,ws,4\n"
                        "a,x,lr,b1,1\nb,x,lr,b1,2.5\nc,x,lr,b1,3\nd,x,lr,b1,4\ne,x,lr,b1,5\n"
                        "a,x,lr,b2,2\nb,x,lr,b2,1\nc,x,lr,b2,3\nd,x,lr,b2,5\ne,x,lr,b2,4\n");
  CHECK(run_cli("rescale --data " + d + "/ext.csv --column ws --out " + d + "/rs") == 0);
  CHECK(slurp(dir / "rs/rescaled.csv").find("a,x,lr,1,0\n") != std::string::npos);
  CHECK(run_cli("validate --data " + d + "/ext.csv --candidate ws --benchmarks b1,b2 --out " + d + "/val") == 0);
  CHECK(csv::read_file(dir / "val/report.csv").rows.size() == 2);
  CHECK(run_cli("validate --data " + d + "/ext.csv --candidate ws --benchmarks b1 --out " + d + "/val") == 2);

  synthetic::write_file(dir / "m1.csv", "party_id,class_label,x\na,l,1\nb,l,2\nc,r,3\nd,r,2.5\ne,l,0\nf,r,4\n");
  synthetic::write_file(dir / "m2.csv", "party_id,class_label,x\na,l,3\nb,l,1\nc,r,2\nd,r,0\ne,l,2\nf,r,1\n");
  CHECK(run_cli("construct --model one=" + d + "/m1.csv --model two=" + d + "/m2.csv --out " + d + "/con") == 0);
  CHECK(csv::read_file(dir / "con/fit_statistics.csv").rows.size() == 2);
  fs::remove_all(dir);
}
