#pragma once

// Seeded generators for corpora and small projects on disk.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "wordscores/corpus.hpp"
#include "wordscores/scaling.hpp"

namespace synthetic {

/// Letters-only names: a, b, ..., z, ba, bb, ...
inline std::string word_name(std::size_t i) {
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i > 0);
  return "w" + s;
}

struct Corpus {
  wordscores::Corpus reference;
  wordscores::Corpus virgin;
  wordscores::TermDocumentMatrix reference_matrix;
  wordscores::TermDocumentMatrix virgin_matrix;
  wordscores::ReferenceScores scores;
  std::vector<double> positions;  // A_rd
  std::string dimension = "lr";
};

struct Options {
  std::size_t n_reference = 4;
  std::size_t n_virgin = 6;
  std::size_t vocabulary = 40;
  std::size_t min_length = 30;
  std::size_t max_length = 120;
  double oov_fraction = 0.0;  // share of virgin tokens replaced by unseen words
  bool equal_virgin_lengths = false;
};

/// Documents draw words with weights peaked near their latent position.
inline Corpus make_corpus(std::uint64_t seed, const Options& opt = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> word_pos(opt.vocabulary);
  for (auto& p : word_pos) p = unit(rng);

  auto draw_doc = [&](double pos, std::size_t length, double oov, const std::string& tag) {
    std::vector<double> w(opt.vocabulary);
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = std::exp(-3.0 * (pos - word_pos[i]) * (pos - word_pos[i])) + 0.05;
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::bernoulli_distribution is_oov(oov);
    std::vector<std::string> tokens;
    for (std::size_t t = 0; t < length; ++t) {
      if (oov > 0 && is_oov(rng)) tokens.push_back("oov" + tag + word_name(t % 7));
      else tokens.push_back(word_name(pick(rng)));
    }
    return tokens;
  };
  std::uniform_int_distribution<std::size_t> len(opt.min_length, opt.max_length);

  Corpus c;
  for (std::size_t r = 0; r < opt.n_reference; ++r) {
    // Spread reference positions so they are distinct.
    const double a = -1.0 + 2.0 * (static_cast<double>(r) + 0.5 * (1.0 + unit(rng)) * 0.5) /
                                static_cast<double>(opt.n_reference);
    wordscores::Document d;
    d.id = "r" + std::to_string(r);
    d.country = "xx";
    d.year = 2009;
    d.tokens = draw_doc(a, len(rng), 0.0, "");
    c.scores[d.id][c.dimension] = std::round(a * 1e6) / 1e6 * 10.0;
    c.positions.push_back(c.scores[d.id][c.dimension]);
    c.reference.documents.push_back(std::move(d));
  }
  const std::size_t fixed_len = len(rng);
  for (std::size_t v = 0; v < opt.n_virgin; ++v) {
    wordscores::Document d;
    d.id = "v" + std::to_string(v);
    d.country = "xx";
    d.year = 2009;
    d.tokens = draw_doc(unit(rng), opt.equal_virgin_lengths ? fixed_len : len(rng), opt.oov_fraction,
                        std::to_string(v));
    c.virgin.documents.push_back(std::move(d));
  }
  c.virgin.role = wordscores::CorpusRole::virgin;
  c.reference_matrix = wordscores::build_matrix(c.reference);
  c.virgin_matrix = wordscores::build_matrix(c.virgin);
  return c;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("wordscores-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// The toy project: R1, R2 reference texts, V and V2 virgin texts.
inline std::filesystem::path write_toy_project(const std::filesystem::path& dir) {
  write_file(dir / "texts/r1.txt", "Tax, tax; spend!");
  write_file(dir / "texts/r2.txt", "tax spend spend spend");
  write_file(dir / "texts/v.txt", "tax spend");
  write_file(dir / "texts/v2.txt", "Spend, spend, tax.");
  write_file(dir / "reference.csv",
             "id,label,country,year,path\nR1,Reference one,toy,2009,texts/r1.txt\n"
             "R2,Reference two,toy,2009,texts/r2.txt\n");
  write_file(dir / "virgin.csv", "id,label,country,year,path\nV,Virgin,toy,2009,texts/v.txt\n"
             "V2,Virgin two,toy,2009,texts/v2.txt\n");
  write_file(dir / "scores.csv", "doc_id,dimension,score\nR1,lr,-1\nR2,lr,1\n");
  write_file(dir / "toy.conf",
             "# toy grid\n"
             "output = out\n"
             "seed = 7\n"
             "dimensions = lr\n"
             "variants = total, cooccur\n"
             "transforms = lbg, mv\n"
             "top_k = 0\n"
             "\n[country toy]\nreference = reference.csv\nvirgin = virgin.csv\n"
             "\n[source toysrc]\nscores = scores.csv\nanchor.lr = R1 R2\n");
  return dir / "toy.conf";
}

struct ProjectOptions {
  std::size_t countries = 3;
  std::size_t reference_per_country = 5;
  std::size_t virgin_per_country = 12;
  std::size_t vocabulary = 80;
  std::uint64_t seed = 42;
};

/// Countries x {ec, eu} project with three noisy benchmark sources and a
/// group-membership file, every document generated from latent positions.
inline std::filesystem::path write_synthetic_project(const std::filesystem::path& dir,
                                                     const ProjectOptions& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.15);
  std::uniform_int_distribution<std::size_t> len(150, 300);
  std::vector<std::pair<double, double>> word_pos(opt.vocabulary);
  for (auto& p : word_pos) p = {unit(rng), unit(rng)};

  auto text_at = [&](double x, double y) {
    std::vector<double> w(opt.vocabulary);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double dx = x - word_pos[i].first, dy = y - word_pos[i].second;
      w[i] = std::exp(-2.0 * (dx * dx + dy * dy)) + 0.05;
    }
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::string text;
    const auto n = len(rng);
    for (std::size_t t = 0; t < n; ++t) text += word_name(pick(rng)) + (t % 12 == 11 ? ".\n" : " ");
    return text;
  };

  std::string scores = "doc_id,dimension,score\n";
  std::string external = "party_id,country,dimension,source,score\n";
  std::string groups = "party_id,class_label\n";
  std::string conf = "output = out\nseed = " + std::to_string(opt.seed) +
                     "\ndimensions = ec, eu\nvariants = total, cooccur\ntransforms = lbg, mv\n"
                     "rescale = wd, pc\ntop_k = 5\nbenchmark_data = external.csv\n"
                     "benchmarks = b1, b2, b3\nscale.b1 = 0 10\nconstruct_data = groups.csv\n";
  for (std::size_t c = 0; c < opt.countries; ++c) {
    const std::string cc = "c" + std::string(1, static_cast<char>('a' + c));
    std::string ref = "id,label,country,year,path\n", vir = ref;
    for (std::size_t r = 0; r < opt.reference_per_country; ++r) {
      const double x = -1.0 + 2.0 * (static_cast<double>(r) + 0.5) / static_cast<double>(opt.reference_per_country);
      const double y = unit(rng);
      const std::string id = cc + "-r" + std::to_string(r);
      write_file(dir / "texts" / (id + ".txt"), text_at(x, y));
      ref += id + "," + id + "," + cc + ",2009,texts/" + id + ".txt\n";
      scores += id + ",ec," + std::to_string(5.0 + 5.0 * x) + "\n";
      scores += id + ",eu," + std::to_string(5.0 + 5.0 * y) + "\n";
    }
    for (std::size_t v = 0; v < opt.virgin_per_country; ++v) {
      const double x = unit(rng), y = unit(rng);
      const std::string id = cc + "-p" + std::to_string(v);
      write_file(dir / "texts" / (id + ".txt"), text_at(x, y));
      vir += id + "," + id + "," + cc + ",2009,texts/" + id + ".txt\n";
      for (const auto& [dim, val] : {std::pair{"ec", x}, std::pair{"eu", y}})
        for (const char* b : {"b1", "b2", "b3"})
          external += id + "," + cc + "," + dim + "," + b + "," +
                      std::to_string(5.0 + 5.0 * std::clamp(val + noise(rng), -1.0, 1.0)) + "\n";
      const char* label = x < -0.33 ? "left" : (x < 0.33 ? "centre" : "right");
      groups += id + "," + label + "\n";
    }
    write_file(dir / (cc + "-reference.csv"), ref);
    write_file(dir / (cc + "-virgin.csv"), vir);
    conf += "\n[country " + cc + "]\nreference = " + cc + "-reference.csv\nvirgin = " + cc + "-virgin.csv\n";
  }
  conf += "\n[source expert]\nscores = scores.csv\n";
  write_file(dir / "scores.csv", scores);
  write_file(dir / "external.csv", external);
  write_file(dir / "groups.csv", groups);
  write_file(dir / "project.conf", conf);
  return dir / "project.conf";
}

}  // namespace synthetic
