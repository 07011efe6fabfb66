#include <benchmark/benchmark.h>

#include <random>

#include "chainrec/adapter.hpp"
#include "chainrec/chain_graph.hpp"
#include "chainrec/providers.hpp"
#include "chainrec/retrieval.hpp"
#include "chainrec/synthetic.hpp"

namespace {

using namespace chainrec;

std::vector<EmbeddingVector> random_unit_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  std::vector<EmbeddingVector> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(dim);
    for (auto& x : v) x = normal(rng);
    rows.push_back(normalize_embedding(std::move(v)));
  }
  return rows;
}

void BM_DenseSearch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto rows = random_unit_rows(n, 256, 1);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("e" + std::to_string(i));
  const DenseIndex index(ids, rows);
  const auto query = random_unit_rows(1, 256, 2).front();
  for (auto _ : state) benchmark::DoNotOptimize(dense_search(index, query, 20, 20.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_DenseSearch)->Arg(1000)->Arg(10000);

void BM_Bm25Search(benchmark::State& state) {
  SyntheticParams params;
  params.entities = static_cast<std::size_t>(state.range(0));
  const auto corpus = generate_synthetic(params);
  std::vector<TargetRepresentation> docs;
  for (const auto& e : corpus.entities) docs.push_back({e.id, e.canonical_name + " " + e.description});
  const Bm25Index index(docs);
  const std::string query = corpus.papers.front().abstract;
  for (auto _ : state) benchmark::DoNotOptimize(index.search(query, 20));
}
BENCHMARK(BM_Bm25Search)->Arg(80)->Arg(800);

void BM_MockEmbed(benchmark::State& state) {
  MockProvider mock(256);
  const std::vector<std::string> texts(64, "Graph-Net improves node classification on CoraSet");
  for (auto _ : state) benchmark::DoNotOptimize(mock.embed(texts));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MockEmbed);

void BM_EnumerateChains(benchmark::State& state) {
  SyntheticParams params;
  params.papers = static_cast<std::size_t>(state.range(0));
  params.entities = 80;
  params.density = 0.05;
  const auto corpus = generate_synthetic(params);
  const auto store = CorpusStore::build(corpus.papers, corpus.entities);
  const auto graph = build_graph(store);
  for (auto _ : state) {
    for (const auto& [id, paper] : store.papers()) {
      benchmark::DoNotOptimize(
          enumerate_chains(graph, store, id, ChainDirection::kDatasetToBaseline));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(params.papers));
}
BENCHMARK(BM_EnumerateChains)->Arg(200)->Arg(1000);

void BM_LossGradient(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const std::size_t batch = 16;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrainBatch b{Matrix(batch, dim), Matrix(batch, dim), std::vector<int>(batch, 1)};
  for (auto& v : b.queries.data()) v = u(rng);
  for (auto& v : b.targets.data()) v = u(rng);
  AdapterParams p{Matrix::identity(dim), 20.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradient(p, b));
}
BENCHMARK(BM_LossGradient)->Arg(64)->Arg(256);

}  // namespace
BENCHMARK_MAIN();
