// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "wordscores/kernels.hpp"

namespace k = wordscores::kernels;

namespace {

struct Block {
  std::size_t words, docs;
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> totals;
  std::vector<double> weights, positions;
};

/// Sparse-ish words x docs counts, Zipf-like row rates.
Block make_block(std::size_t words, std::size_t docs) {
  std::mt19937_64 rng(7);
  Block b{words, docs, std::vector<std::int64_t>(words * docs), std::vector<std::int64_t>(docs, 0), {}, {}};
  for (std::size_t w = 0; w < words; ++w) {
    std::poisson_distribution<int> pois(50.0 / static_cast<double>(w + 1));
    for (std::size_t d = 0; d < docs; ++d) {
      b.counts[w * docs + d] = pois(rng);
      b.totals[d] += b.counts[w * docs + d];
    }
  }
  std::uniform_real_distribution<double> pos(0.0, 10.0);
  for (std::size_t d = 0; d < docs; ++d) {
    b.weights.push_back(b.totals[d] ? 1.0 / static_cast<double>(b.totals[d]) : 0.0);
    b.positions.push_back(pos(rng));
  }
  return b;
}

template <bool Parallel>
void score_words(benchmark::State& state) {
  const auto b = make_block(static_cast<std::size_t>(state.range(0)), 64);
  std::vector<double> probs(b.words * b.docs), scores(b.words);
  for (auto _ : state) {
    if constexpr (Parallel) k::score_words_parallel(b.counts, b.docs, b.weights, b.positions, probs, scores);
    else k::score_words_serial(b.counts, b.docs, b.weights, b.positions, probs, scores);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.words * b.docs));
}

template <bool Parallel>
void score_documents(benchmark::State& state) {
  const auto b = make_block(20000, static_cast<std::size_t>(state.range(0)));
  std::vector<std::ptrdiff_t> index(b.words);
  std::vector<double> word_scores(b.words);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> s(0.0, 10.0);
  for (std::size_t w = 0; w < b.words; ++w) {
    index[w] = w % 5 == 4 ? -1 : static_cast<std::ptrdiff_t>(w);
    word_scores[w] = s(rng);
  }
  std::vector<k::DocumentScore> out(b.docs);
  for (auto _ : state) {
    if constexpr (Parallel) k::score_documents_parallel(b.counts, b.docs, b.totals, index, word_scores, true, out);
    else k::score_documents_serial(b.counts, b.docs, b.totals, index, word_scores, true, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.words * b.docs));
}

}  // namespace

BENCHMARK(score_words<false>)->Name("score_words/serial")->Arg(5000)->Arg(50000);
BENCHMARK(score_words<true>)->Name("score_words/parallel")->Arg(5000)->Arg(50000);
BENCHMARK(score_documents<false>)->Name("score_documents/serial")->Arg(64)->Arg(512);
BENCHMARK(score_documents<true>)->Name("score_documents/parallel")->Arg(64)->Arg(512);

BENCHMARK_MAIN();
