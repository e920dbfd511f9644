#include "gcond/condense.hpp"
#include "gcond/dataio.hpp"
#include "gcond/graph.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace gcond;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

SparseGraph sbm(Index n, Index d) {
  SyntheticSpec s;
  s.n = n;
  s.classes = 7;
  s.d = d;
  s.p_in = 8.0 / static_cast<double>(n);
  s.p_out = 0.5 / static_cast<double>(n);
  return gen_synthetic(s);
}

void BM_spmm(benchmark::State& state) {
  const SparseGraph g = sbm(state.range(0), 16);
  const CsrMatrix a = normalize_sym(g.adjacency, true);
  const Matrix x = random_matrix(g.num_nodes(), 256, 1);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(a, x));
  state.SetItemsProcessed(state.iterations() * a.nnz() * 256);
}
BENCHMARK(BM_spmm)->Arg(1000)->Arg(4000);

void BM_gphi_forward(benchmark::State& state) {
  const Index n = state.range(0);
  const StructureGenerator phi = StructureGenerator::init(1433, 3, 128, 1);
  const Matrix x = random_matrix(n, 1433, 2);
  for (auto _ : state) benchmark::DoNotOptimize(gphi_forward(phi, x));
}
BENCHMARK(BM_gphi_forward)->Arg(35)->Arg(70)->Unit(benchmark::kMillisecond);

void BM_matching_loss(benchmark::State& state) {
  const SparseGraph g = sbm(2000, 256);
  CondenseConfig c;
  c.nodes = state.range(0);
  c.execution = state.range(1) ? Execution::parallel : Execution::serial;
  const CondensedGraph cond = init_condensed(g, c);
  const ModelParams theta = init_params(c.model, g.feature_dim(), g.num_classes, 3);
  std::mt19937_64 rng(4);
  const auto targets = sample_targets(g, cond, c, theta, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matching_loss(cond, c.model, theta, targets, true, c.execution).loss);
  }
}
BENCHMARK(BM_matching_loss)->Args({70, 0})->Args({70, 1})->Args({140, 0})->Unit(benchmark::kMillisecond);

void BM_refresh_theta(benchmark::State& state) {
  const Index n = state.range(0);
  ModelSpec spec{Arch::sgc, 2, 256, 2, 0.1, 0.0, 0.0};
  const Matrix x = random_matrix(n, 1433, 5);
  const Matrix a = normalize_sym_dense(Matrix::Constant(n, n, 0.3));
  std::vector<int> labels;
  for (Index i = 0; i < n; ++i) labels.push_back(static_cast<int>(i % 7));
  const ModelParams theta = init_params(spec, 1433, 7, 6);
  for (auto _ : state) benchmark::DoNotOptimize(refresh_theta(spec, theta, a, x, labels, 50, 0.01));
}
BENCHMARK(BM_refresh_theta)->Arg(70)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
