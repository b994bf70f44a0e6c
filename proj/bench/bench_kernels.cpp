// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "gsc/graph.hpp"
#include "gsc/kernels.hpp"
#include "gsc/ot.hpp"
#include "gsc/ot_ops.hpp"
#include "gsc/synth.hpp"

namespace {

using gsc::kernels::Exec;

gsc::Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  gsc::Matrix m(r, c);
  for (double& x : m.data) x = d(rng);
  return m;
}

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1);
  const auto b = random_matrix(n, 64, 2);
  gsc::Matrix c(n, 64);
  for (auto _ : state) {
    gsc::kernels::matmul(exec_of(state), n, n, 64, a.data, b.data, c.data, false);
    benchmark::DoNotOptimize(c.data.data());
  }
}

void BM_Spmm(benchmark::State& state) {
  gsc::SbmConfig cfg;
  cfg.nodes_per_block = static_cast<std::size_t>(state.range(0)) / cfg.blocks;
  const auto g = gsc::gen_synth_sbm(cfg);
  const auto norm = gsc::normalize_adjacency(g);
  const auto x = random_matrix(g.n_nodes(), 64, 3);
  std::vector<double> y(g.n_nodes() * 64);
  for (auto _ : state) {
    gsc::kernels::spmm(exec_of(state), norm, 64, x.data, y, false);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_BatchedSinkhorn(benchmark::State& state) {
  const auto pairs = static_cast<std::size_t>(state.range(0));
  std::vector<gsc::ad::Tensor> costs;
  for (std::size_t p = 0; p < pairs; ++p) {
    auto m = random_matrix(10, 10, static_cast<unsigned>(p));
    for (double& x : m.data) x = std::exp(x / 0.5);
    costs.push_back(gsc::ad::Tensor::from_matrix(m, true));
  }
  for (auto _ : state) {
    gsc::ad::Tape tape;
    auto plans = gsc::ot::sinkhorn_plans(tape, costs, {}, gsc::ot::PlanGradient::unrolled, nullptr, exec_of(state));
    benchmark::DoNotOptimize(plans.data());
  }
}

}  // namespace

BENCHMARK(BM_Matmul)->ArgsProduct({{128, 512}, {0, 1}});
BENCHMARK(BM_Spmm)->ArgsProduct({{3000, 30000}, {0, 1}});
BENCHMARK(BM_BatchedSinkhorn)->ArgsProduct({{16, 96}, {0, 1}});

BENCHMARK_MAIN();
