#include "wordscores/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "wordscores/csv.hpp"
#include "wordscores/error.hpp"

namespace wordscores {

const Document* Corpus::find_ptr(std::string_view id) const {
  for (const auto& d : documents)
    if (d.id == id) return &d;
  return nullptr;
}

const Document& Corpus::find(std::string_view id) const {
  if (const auto* d = find_ptr(id)) return *d;
  throw ValidationError("document '" + std::string(id) + "' not in corpus");
}

void PreprocessConfig::validate() const {
  if (top_k_stopwords < 0) throw ValidationError("top-k stopwords must be >= 0");
  if (min_doc_fraction.has_value() != max_doc_fraction.has_value())
    throw ValidationError("min and max document fractions must be set together");
  if (min_doc_fraction) {
    const double lo = *min_doc_fraction, hi = *max_doc_fraction;
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
      throw ValidationError("document fractions must satisfy 0 <= min < max <= 1");
  }
  if (stemming) throw ValidationError("stemming is not supported");
}

// --- TermDocumentMatrix -----------------------------------------------------

TermDocumentMatrix::TermDocumentMatrix(std::vector<std::string> vocabulary,
                                       std::vector<std::string> doc_ids,
                                       std::vector<std::int64_t> counts)
    : vocabulary_(std::move(vocabulary)), doc_ids_(std::move(doc_ids)), counts_(std::move(counts)) {
  if (counts_.size() != vocabulary_.size() * doc_ids_.size())
    throw ValidationError("count matrix size does not match vocabulary x documents");
  if (!std::is_sorted(vocabulary_.begin(), vocabulary_.end()) ||
      std::adjacent_find(vocabulary_.begin(), vocabulary_.end()) != vocabulary_.end())
    throw ValidationError("vocabulary must be sorted and unique");
  totals_.assign(doc_ids_.size(), 0);
  for (std::size_t w = 0; w < vocabulary_.size(); ++w) {
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
      const auto c = counts_[w * doc_ids_.size() + d];
      if (c < 0) throw ValidationError("negative count for '" + vocabulary_[w] + "'");
      totals_[d] += c;
    }
  }
}

std::int64_t TermDocumentMatrix::word_total(std::size_t word) const {
  const auto r = row(word);
  return std::accumulate(r.begin(), r.end(), std::int64_t{0});
}

std::optional<std::size_t> TermDocumentMatrix::word_index(std::string_view word) const {
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), word);
  if (it == vocabulary_.end() || *it != word) return std::nullopt;
  return static_cast<std::size_t>(it - vocabulary_.begin());
}

std::optional<std::size_t> TermDocumentMatrix::doc_index(std::string_view id) const {
  for (std::size_t d = 0; d < doc_ids_.size(); ++d)
    if (doc_ids_[d] == id) return d;
  return std::nullopt;
}

TermDocumentMatrix TermDocumentMatrix::select_documents(std::span<const std::string> ids) const {
  std::vector<std::size_t> cols;
  for (const auto& id : ids) {
    auto d = doc_index(id);
    if (!d) throw ValidationError("document '" + id + "' not in matrix");
    cols.push_back(*d);
  }
  std::vector<std::string> vocab;
  std::vector<std::int64_t> counts;
  for (std::size_t w = 0; w < num_words(); ++w) {
    bool any = false;
    for (auto d : cols) any = any || count(w, d) > 0;
    if (!any) continue;
    vocab.push_back(vocabulary_[w]);
    for (auto d : cols) counts.push_back(count(w, d));
  }
  return TermDocumentMatrix(std::move(vocab), std::vector<std::string>(ids.begin(), ids.end()),
                            std::move(counts));
}

// --- loading ----------------------------------------------------------------

Corpus load_documents(const std::filesystem::path& manifest, CorpusRole role) {
  const auto table = csv::read_file(manifest);
  const std::string ctx = manifest.string();
  csv::require_header(table, {"id", "label", "country", "year", "path"}, ctx);
  const auto tags_col = table.find_column("tags");

  Corpus corpus;
  corpus.role = role;
  std::set<std::string> seen;
  const auto base = manifest.parent_path();
  for (const auto& row : table.rows) {
    Document doc;
    doc.id = row[0];
    if (doc.id.empty()) throw ValidationError(ctx + ": empty document id");
    if (!seen.insert(doc.id).second)
      throw ValidationError(ctx + ": duplicate document id '" + doc.id + "'");
    doc.label = row[1];
    doc.country = row[2];
    doc.year = static_cast<int>(csv::parse_int(row[3], ctx + " year of " + doc.id));
    if (tags_col && !row[*tags_col].empty()) {
      std::stringstream ss(row[*tags_col]);
      std::string tag;
      while (std::getline(ss, tag, ';'))
        if (!tag.empty()) doc.tags.push_back(tag);
    }
    std::filesystem::path file(row[4]);
    if (file.is_relative()) file = base / file;
    try {
      doc.text = csv::read_text_file(file);
    } catch (const LoadError&) {
      throw LoadError(ctx + ": cannot read text of document '" + doc.id + "' (" + file.string() + ")");
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

void tokenize_corpus(Corpus& corpus, const PreprocessConfig& config) {
  for (auto& doc : corpus.documents) {
    doc.tokens = tokenize(doc.text, config);
    doc.text.clear();
  }
}

// --- matrix construction ----------------------------------------------------

TermDocumentMatrix build_matrix(const Corpus& corpus) {
  if (corpus.documents.empty()) throw ValidationError("cannot build a matrix from an empty corpus");
  std::map<std::string, std::vector<std::int64_t>> rows;
  const std::size_t n = corpus.documents.size();
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (std::size_t d = 0; d < n; ++d) {
    const auto& doc = corpus.documents[d];
    if (!seen.insert(doc.id).second) throw ValidationError("duplicate document id '" + doc.id + "'");
    ids.push_back(doc.id);
    for (const auto& tok : doc.tokens) {
      auto [it, inserted] = rows.try_emplace(tok);
      if (inserted) it->second.assign(n, 0);
      ++it->second[d];
    }
  }
  if (rows.empty()) throw ValidationError("corpus contains no tokens");
  std::vector<std::string> vocab;
  std::vector<std::int64_t> counts;
  vocab.reserve(rows.size());
  counts.reserve(rows.size() * n);
  for (auto& [word, row] : rows) {
    vocab.push_back(word);
    counts.insert(counts.end(), row.begin(), row.end());
  }
  return TermDocumentMatrix(std::move(vocab), std::move(ids), std::move(counts));
}

std::vector<std::string> top_k_stopwords(const TermDocumentMatrix& matrix, int k) {
  if (k < 0) throw ValidationError("k must be >= 0");
  std::vector<std::pair<std::int64_t, std::size_t>> order;
  for (std::size_t w = 0; w < matrix.num_words(); ++w) order.emplace_back(matrix.word_total(w), w);
  // Vocabulary is already lexicographic, so the index breaks ties.
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(matrix.vocabulary()[order[i].second]);
  return out;
}

namespace {

template <typename Keep>
TermDocumentMatrix filter_rows(const TermDocumentMatrix& m, Keep keep) {
  std::vector<std::string> vocab;
  std::vector<std::int64_t> counts;
  for (std::size_t w = 0; w < m.num_words(); ++w) {
    if (!keep(w)) continue;
    vocab.push_back(m.vocabulary()[w]);
    const auto r = m.row(w);
    counts.insert(counts.end(), r.begin(), r.end());
  }
  if (vocab.empty()) throw ValidationError("filter removed the entire vocabulary; nothing left to score");
  return TermDocumentMatrix(std::move(vocab), m.doc_ids(), std::move(counts));
}

}  // namespace

TermDocumentMatrix apply_stoplist(const TermDocumentMatrix& matrix,
                                  std::span<const std::string> words) {
  const std::unordered_set<std::string> stop(words.begin(), words.end());
  return filter_rows(matrix, [&](std::size_t w) { return !stop.contains(matrix.vocabulary()[w]); });
}

TermDocumentMatrix apply_document_frequency_filter(const TermDocumentMatrix& matrix,
                                                   double min_fraction, double max_fraction) {
  const double n = static_cast<double>(matrix.num_docs());
  return filter_rows(matrix, [&](std::size_t w) {
    const auto r = matrix.row(w);
    const auto df = std::count_if(r.begin(), r.end(), [](auto c) { return c > 0; });
    const double frac = static_cast<double>(df) / n;
    return frac >= min_fraction && frac <= max_fraction;
  });
}

void remove_tokens(Corpus& corpus, std::span<const std::string> words) {
  const std::unordered_set<std::string> stop(words.begin(), words.end());
  for (auto& doc : corpus.documents)
    std::erase_if(doc.tokens, [&](const std::string& t) { return stop.contains(t); });
}

std::vector<GroupStoplist> preprocess_corpus(Corpus& corpus, const PreprocessConfig& config) {
  config.validate();
  for (auto& doc : corpus.documents)
    if (doc.tokens.empty() && !doc.text.empty()) {
      doc.tokens = tokenize(doc.text, config);
      doc.text.clear();
    }

  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i)
    groups[{corpus.documents[i].country, corpus.documents[i].year}].push_back(i);

  std::vector<GroupStoplist> lists;
  for (const auto& [key, members] : groups) {
    Corpus group;
    for (auto i : members) group.documents.push_back(corpus.documents[i]);
    GroupStoplist list{key.first, key.second, {}, {}};
    bool any_tokens = std::any_of(group.documents.begin(), group.documents.end(),
                                  [](const Document& d) { return !d.tokens.empty(); });
    if (any_tokens && config.top_k_stopwords > 0) {
      const auto m = build_matrix(group);
      list.words = top_k_stopwords(m, config.top_k_stopwords);
      for (const auto& w : list.words) list.counts.push_back(m.word_total(*m.word_index(w)));
      const std::unordered_set<std::string> stop(list.words.begin(), list.words.end());
      for (auto i : members)
        std::erase_if(corpus.documents[i].tokens,
                      [&](const std::string& t) { return stop.contains(t); });
    }
    lists.push_back(std::move(list));
  }

  if (config.min_doc_fraction) {
    const auto m = build_matrix(corpus);
    const auto kept =
        apply_document_frequency_filter(m, *config.min_doc_fraction, *config.max_doc_fraction);
    std::vector<std::string> dropped;
    std::set_difference(m.vocabulary().begin(), m.vocabulary().end(), kept.vocabulary().begin(),
                        kept.vocabulary().end(), std::back_inserter(dropped));
    remove_tokens(corpus, dropped);
  }
  return lists;
}

// --- statistics -------------------------------------------------------------

namespace {

std::pair<double, double> mean_sample_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

CorpusStats corpus_stats(const TermDocumentMatrix& matrix) {
  if (matrix.num_docs() == 0) throw ValidationError("corpus_stats needs at least one document");
  std::vector<double> totals, unique(matrix.num_docs(), 0.0);
  for (auto t : matrix.totals()) totals.push_back(static_cast<double>(t));
  for (std::size_t w = 0; w < matrix.num_words(); ++w)
    for (std::size_t d = 0; d < matrix.num_docs(); ++d)
      if (matrix.count(w, d) > 0) unique[d] += 1.0;
  CorpusStats s;
  s.documents = matrix.num_docs();
  std::tie(s.mean_total, s.sd_total) = mean_sample_sd(totals);
  std::tie(s.mean_unique, s.sd_unique) = mean_sample_sd(unique);
  s.sd_defined = matrix.num_docs() > 1;
  return s;
}

double skewness(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : values) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

OverlapDiagnostics diagnose_overlap(const TermDocumentMatrix& reference,
                                    const TermDocumentMatrix& virgin) {
  if (reference.num_words() == 0 || virgin.num_words() == 0)
    throw ValidationError("diagnose_overlap needs non-empty matrices");
  OverlapDiagnostics out;
  out.virgin_ids = virgin.doc_ids();
  std::vector<std::int64_t> known(virgin.num_docs(), 0);
  std::size_t shared_types = 0;
  for (std::size_t w = 0; w < virgin.num_words(); ++w) {
    if (!reference.word_index(virgin.vocabulary()[w])) continue;
    ++shared_types;
    for (std::size_t d = 0; d < virgin.num_docs(); ++d) known[d] += virgin.count(w, d);
  }
  for (std::size_t d = 0; d < virgin.num_docs(); ++d) {
    const auto total = virgin.totals()[d];
    out.coverage.push_back(total > 0 ? static_cast<double>(known[d]) / static_cast<double>(total)
                                     : 0.0);
  }
  out.vocabulary_overlap =
      static_cast<double>(shared_types) / static_cast<double>(virgin.num_words());
  auto word_totals = [](const TermDocumentMatrix& m) {
    std::vector<double> v;
    for (std::size_t w = 0; w < m.num_words(); ++w) v.push_back(static_cast<double>(m.word_total(w)));
    return v;
  };
  out.reference_skewness = skewness(word_totals(reference));
  out.virgin_skewness = skewness(word_totals(virgin));
  return out;
}

std::string matrix_to_csv(const TermDocumentMatrix& matrix) {
  std::ostringstream out;
  csv::Row header{"word"};
  header.insert(header.end(), matrix.doc_ids().begin(), matrix.doc_ids().end());
  csv::write_row(out, header);
  for (std::size_t w = 0; w < matrix.num_words(); ++w) {
    csv::Row row{matrix.vocabulary()[w]};
    for (auto c : matrix.row(w)) row.push_back(std::to_string(c));
    csv::write_row(out, row);
  }
  return out.str();
}

}  // namespace wordscores
