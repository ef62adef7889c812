#include <doctest.h>

#include <algorithm>

#include "support/synthetic.hpp"
#include "wordscores/corpus.hpp"
#include "wordscores/error.hpp"

using namespace wordscores;
using Tokens = std::vector<std::string>;

namespace {

Corpus corpus_of(std::vector<std::pair<std::string, Tokens>> docs) {
  Corpus c;
  for (auto& [id, tokens] : docs) {
    Document d;
    d.id = id;
    d.country = "xx";
    d.year = 2004;
    d.tokens = tokens;
    c.documents.push_back(d);
  }
  return c;
}

Corpus toy_reference() {
  return corpus_of({{"R1", {"tax", "tax", "spend"}}, {"R2", {"tax", "spend", "spend", "spend"}}});
}

}  // namespace

TEST_CASE("tokenize normalizes case and punctuation") {
  CHECK(tokenize("Tax, tax; spend!") == Tokens{"tax", "tax", "spend"});
  CHECK(tokenize("") == Tokens{});
  CHECK(tokenize("  ...  ") == Tokens{});
}

TEST_CASE("tokenize strip flags") {
  CHECK(tokenize("spend £5 now") == Tokens{"spend", "now"});
  PreprocessConfig keep;
  keep.strip_numbers = false;
  keep.strip_currency = false;
  CHECK(tokenize("spend £5 now", keep) == Tokens{"spend", "£", "5", "now"});
  CHECK(tokenize("cost $100 or 20€", keep) == Tokens{"cost", "$", "100", "or", "20", "€"});
}

TEST_CASE("tokenize splits hyphens and keeps accented letters") {
  CHECK(tokenize("euro-sceptic") == Tokens{"euro", "sceptic"});
  CHECK(tokenize("Öffentliche Ausgaben") == Tokens{"öffentliche", "ausgaben"});
  CHECK(tokenize("ΕΛΛΆΔΑ και Россия") == Tokens{"ελλάδα", "και", "россия"});
  CHECK(tokenize("Économie ÇA") == Tokens{"économie", "ça"});
}

TEST_CASE("tokenize is idempotent on its own output") {
  for (const char* text : {"Tax, tax; spend!", "Zölle-Senkung 2009: £5 für ALLE", "a  b\tc\nd"}) {
    const auto once = tokenize(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined) == once);
  }
}

TEST_CASE("load_documents") {
  const auto dir = synthetic::temp_dir("load");
  synthetic::write_toy_project(dir);

  SUBCASE("toy manifest") {
    auto c = load_documents(dir / "reference.csv");
    REQUIRE(c.documents.size() == 2);
    CHECK(c.documents[0].id == "R1");
    CHECK(c.documents[0].country == "toy");
    CHECK(c.documents[0].year == 2009);
    tokenize_corpus(c);
    CHECK(c.documents[0].tokens.size() == 3);
    CHECK(c.documents[1].tokens.size() == 4);
  }
  SUBCASE("duplicate id") {
    synthetic::write_file(dir / "dup.csv",
                          "id,label,country,year,path\nuk-lab,a,uk,2009,texts/v.txt\nuk-lab,b,uk,2009,texts/v.txt\n");
    CHECK_THROWS_AS(load_documents(dir / "dup.csv"), ValidationError);
  }
  SUBCASE("missing file names the id") {
    synthetic::write_file(dir / "missing.csv", "id,label,country,year,path\nghost,a,uk,2009,texts/none.txt\n");
    try {
      load_documents(dir / "missing.csv");
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
  SUBCASE("quoted fields and tags") {
    synthetic::write_file(dir / "quoted.csv",
                          "id,label,country,year,path,tags\n\"a,1\",\"Party \"\"A\"\"\",uk,2004,texts/v.txt,lr;eu\n");
    const auto c = load_documents(dir / "quoted.csv");
    CHECK(c.documents[0].id == "a,1");
    CHECK(c.documents[0].label == "Party \"A\"");
    CHECK(c.documents[0].tags == Tokens{"lr", "eu"});
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("build_matrix on the toy reference corpus") {
  const auto m = build_matrix(toy_reference());
  CHECK(m.vocabulary() == Tokens{"spend", "tax"});
  CHECK(m.count(*m.word_index("tax"), 0) == 2);
  CHECK(m.count(*m.word_index("tax"), 1) == 1);
  CHECK(m.count(*m.word_index("spend"), 0) == 1);
  CHECK(m.count(*m.word_index("spend"), 1) == 3);
  CHECK(m.totals() == std::vector<std::int64_t>{3, 4});

  const auto one = build_matrix(corpus_of({{"d", {"a", "a"}}}));
  CHECK(one.num_words() == 1);
  CHECK(one.num_docs() == 1);
  CHECK(one.count(0, 0) == 2);

  CHECK_THROWS_AS(build_matrix(Corpus{}), ValidationError);
  CHECK_THROWS_AS(build_matrix(corpus_of({{"a", {}}, {"b", {}}})), ValidationError);
}

TEST_CASE("top_k_stopwords") {
  const auto m = build_matrix(toy_reference());
  CHECK(top_k_stopwords(m, 1) == Tokens{"spend"});
  CHECK(top_k_stopwords(m, 0).empty());
  CHECK(top_k_stopwords(m, 10) == m.vocabulary());
  // ties go to lexicographic order
  const auto tie = build_matrix(corpus_of({{"d", {"b", "a", "c", "c"}}}));
  CHECK(top_k_stopwords(tie, 2) == Tokens{"c", "a"});
}

TEST_CASE("apply_stoplist") {
  const auto m = build_matrix(toy_reference());
  const std::vector<std::string> spend{"spend"};
  const auto f = apply_stoplist(m, spend);
  CHECK(f.vocabulary() == Tokens{"tax"});
  CHECK(f.totals() == std::vector<std::int64_t>{2, 1});
  CHECK(apply_stoplist(m, std::vector<std::string>{}) == m);
  CHECK_THROWS_AS(apply_stoplist(m, m.vocabulary()), ValidationError);
}

TEST_CASE("corpus_stats") {
  const auto s = corpus_stats(build_matrix(toy_reference()));
  CHECK(s.documents == 2);
  CHECK(s.mean_total == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(s.sd_total == doctest::Approx(std::sqrt(0.5)));
  CHECK(s.mean_unique == doctest::Approx(2.0));
  CHECK(s.sd_defined);

  Tokens ten(10, "x");
  for (std::size_t i = 0; i < ten.size(); ++i) ten[i] = synthetic::word_name(i);
  const auto single = corpus_stats(build_matrix(corpus_of({{"d", ten}})));
  CHECK(single.mean_total == 10.0);
  CHECK(single.sd_total == 0.0);
  CHECK_FALSE(single.sd_defined);
}

TEST_CASE("diagnose_overlap") {
  const auto ref = build_matrix(toy_reference());
  const auto v = build_matrix(corpus_of({{"V", {"tax", "spend"}}}));
  auto d = diagnose_overlap(ref, v);
  CHECK(d.coverage == std::vector<double>{1.0});
  CHECK(d.vocabulary_overlap == 1.0);

  const auto unicorn = build_matrix(corpus_of({{"U", {"unicorn"}}}));
  d = diagnose_overlap(ref, unicorn);
  CHECK(d.coverage == std::vector<double>{0.0});
  CHECK(d.vocabulary_overlap == 0.0);

  CHECK(diagnose_overlap(ref, ref).vocabulary_overlap == 1.0);
  for (double c : diagnose_overlap(ref, build_matrix(corpus_of({{"a", {"tax", "x", "y"}}, {"b", {"z"}}}))).coverage) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("skewness is the standardized third moment") {
  const std::vector<double> sym{1, 2, 3};
  CHECK(skewness(sym) == doctest::Approx(0.0));
  const std::vector<double> v{0, 0, 0, 1};
  // m2 = 3/16, m3 = 3/32 -> 2/sqrt(3)
  CHECK(skewness(v) == doctest::Approx(2.0 / std::sqrt(3.0)));
  const std::vector<double> flat{4, 4};
  CHECK(skewness(flat) == 0.0);
}

TEST_CASE("property: column sums equal stored totals") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = synthetic::make_corpus(seed);
    for (const auto* m : {&c.reference_matrix, &c.virgin_matrix}) {
      for (std::size_t d = 0; d < m->num_docs(); ++d) {
        std::int64_t sum = 0;
        for (std::size_t w = 0; w < m->num_words(); ++w) sum += m->count(w, d);
        CHECK(sum == m->totals()[d]);
      }
      for (std::size_t w = 0; w < m->num_words(); ++w) CHECK(m->word_total(w) > 0);
    }
  }
}

TEST_CASE("property: stoplist commutes with rebuilding from filtered tokens") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = synthetic::make_corpus(seed);
    const auto stop = top_k_stopwords(c.reference_matrix, static_cast<int>(seed % 7) + 1);
    const auto filtered = apply_stoplist(c.reference_matrix, stop);
    remove_tokens(c.reference, stop);
    CHECK(build_matrix(c.reference) == filtered);
  }
}

TEST_CASE("property: top_k of the whole vocabulary returns the vocabulary") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = synthetic::make_corpus(seed).reference_matrix;
    auto all = top_k_stopwords(m, static_cast<int>(m.num_words()));
    std::sort(all.begin(), all.end());
    CHECK(all == m.vocabulary());
  }
}

TEST_CASE("preprocess_corpus drops top-k per country and year") {
  auto c = corpus_of({{"a", {"the", "the", "tax", "x"}}, {"b", {"the", "spend", "x"}}});
  c.documents[1].year = 2009;
  PreprocessConfig cfg;
  cfg.top_k_stopwords = 1;
  const auto lists = preprocess_corpus(c, cfg);
  REQUIRE(lists.size() == 2);
  CHECK(lists[0].year == 2004);
  CHECK(lists[0].words == Tokens{"the"});
  CHECK(lists[0].counts == std::vector<std::int64_t>{2});
  // the 2009 group ties at count 1: lexicographic order picks "spend"
  CHECK(lists[1].words == Tokens{"spend"});
  CHECK(c.documents[0].tokens == Tokens{"tax", "x"});
  CHECK(c.documents[1].tokens == Tokens{"the", "x"});
}

TEST_CASE("document-frequency filter is off by default and validated") {
  PreprocessConfig cfg;
  CHECK_FALSE(cfg.min_doc_fraction.has_value());
  cfg.min_doc_fraction = 0.5;
  cfg.max_doc_fraction = 0.4;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.top_k_stopwords = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  const auto m = build_matrix(corpus_of({{"a", {"x", "y"}}, {"b", {"x", "z"}}, {"c", {"x", "z"}}}));
  const auto f = apply_document_frequency_filter(m, 0.5, 0.9);
  CHECK(f.vocabulary() == Tokens{"z"});
}

TEST_CASE("matrix_to_csv") {
  const auto m = build_matrix(toy_reference());
  CHECK(matrix_to_csv(m) == "word,R1,R2\nspend,1,3\ntax,2,1\n");
}
