#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wordscores {

enum class CorpusRole { reference, virgin };

struct Document {
  std::string id;
  std::string label;
  std::string country;
  int year = 0;
  std::vector<std::string> tags;
  std::string text;                 // raw text, kept until tokenization
  std::vector<std::string> tokens;  // lowercase word sequence
};

struct Corpus {
  std::vector<Document> documents;
  CorpusRole role = CorpusRole::reference;

  const Document& find(std::string_view id) const;
  const Document* find_ptr(std::string_view id) const;
};

struct PreprocessConfig {
  bool strip_numbers = true;
  bool strip_currency = true;
  int top_k_stopwords = 20;
  // Document-frequency filter; off unless both are set.
  std::optional<double> min_doc_fraction;
  std::optional<double> max_doc_fraction;
  bool stemming = false;

  /// Throws ValidationError if the fractions or k are out of range.
  void validate() const;
};

/// Word-by-document count matrix. Rows are words in lexicographic order,
/// columns are documents in corpus order. Immutable after construction.
class TermDocumentMatrix {
 public:
  TermDocumentMatrix() = default;
  /// `counts` is row-major (word-major), vocabulary.size() x doc_ids.size().
  TermDocumentMatrix(std::vector<std::string> vocabulary, std::vector<std::string> doc_ids,
                     std::vector<std::int64_t> counts);

  std::size_t num_words() const noexcept { return vocabulary_.size(); }
  std::size_t num_docs() const noexcept { return doc_ids_.size(); }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const std::vector<std::int64_t>& totals() const noexcept { return totals_; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }

  std::int64_t count(std::size_t word, std::size_t doc) const {
    return counts_[word * doc_ids_.size() + doc];
  }
  std::span<const std::int64_t> row(std::size_t word) const {
    return std::span<const std::int64_t>(counts_).subspan(word * doc_ids_.size(), doc_ids_.size());
  }
  std::int64_t word_total(std::size_t word) const;
  std::optional<std::size_t> word_index(std::string_view word) const;
  std::optional<std::size_t> doc_index(std::string_view id) const;

  /// Matrix restricted to the given document columns (in that order).
  /// Words absent from all kept columns are dropped.
  TermDocumentMatrix select_documents(std::span<const std::string> ids) const;

  bool operator==(const TermDocumentMatrix&) const = default;

 private:
  std::vector<std::string> vocabulary_;
  std::vector<std::string> doc_ids_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> totals_;
};

Corpus load_documents(const std::filesystem::path& manifest,
                      CorpusRole role = CorpusRole::reference);

/// Maximal runs of letters (Latin, Greek, Cyrillic incl. accents), lowercased.
/// Digit runs and currency symbols become tokens only when the matching strip
/// flag is off. Everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text, const PreprocessConfig& config = {});

void tokenize_corpus(Corpus& corpus, const PreprocessConfig& config = {});

TermDocumentMatrix build_matrix(const Corpus& corpus);

/// Highest total count first, ties by lexicographic word order.
std::vector<std::string> top_k_stopwords(const TermDocumentMatrix& matrix, int k);

TermDocumentMatrix apply_stoplist(const TermDocumentMatrix& matrix,
                                  std::span<const std::string> words);

/// Drops words whose document frequency fraction is below `min_fraction` or
/// above `max_fraction`.
TermDocumentMatrix apply_document_frequency_filter(const TermDocumentMatrix& matrix,
                                                   double min_fraction, double max_fraction);

/// Removes tokens in `words` from every document of the corpus.
void remove_tokens(Corpus& corpus, std::span<const std::string> words);

/// Stoplist computed for one (country, year) group.
struct GroupStoplist {
  std::string country;
  int year = 0;
  std::vector<std::string> words;
  std::vector<std::int64_t> counts;
};

/// Tokenizes, drops the top-k words per (country, year) group and applies the
/// document-frequency filter when configured. Returns the stoplists used.
std::vector<GroupStoplist> preprocess_corpus(Corpus& corpus, const PreprocessConfig& config);

struct CorpusStats {
  std::size_t documents = 0;
  double mean_total = 0.0;
  double sd_total = 0.0;
  double mean_unique = 0.0;
  double sd_unique = 0.0;
  bool sd_defined = false;  // false for a single document (SDs reported as 0)
};

/// Sample SD (n - 1) over documents; unique = distinct word types per document.
CorpusStats corpus_stats(const TermDocumentMatrix& matrix);

struct OverlapDiagnostics {
  std::vector<std::string> virgin_ids;
  std::vector<double> coverage;  // share of each virgin document's tokens known to the reference
  double vocabulary_overlap = 0.0;  // share of virgin word types present in the reference
  double reference_skewness = 0.0;  // standardized third moment of word totals
  double virgin_skewness = 0.0;
};

OverlapDiagnostics diagnose_overlap(const TermDocumentMatrix& reference,
                                    const TermDocumentMatrix& virgin);

/// Population skewness m3 / m2^1.5; 0 when all values are equal.
double skewness(std::span<const double> values);

/// CSV `word,<doc_id...>` with integer counts.
std::string matrix_to_csv(const TermDocumentMatrix& matrix);

}  // namespace wordscores
