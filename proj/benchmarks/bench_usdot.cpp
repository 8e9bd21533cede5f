#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "usdot/cells.hpp"
#include "usdot/ddot.hpp"
#include "usdot/regularization.hpp"
#include "usdot/sliced.hpp"
#include "usdot/solver.hpp"
#include "usdot/tridiag.hpp"

using namespace usdot;

namespace {

SortedDiracs spread_diracs(std::size_t n, double lo, double hi, double total) {
  std::mt19937_64 rng(n);
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    y[k] = lo + (hi - lo) * (static_cast<double>(k) + 0.1 + 0.8 * u) / static_cast<double>(n);
  }
  return SortedDiracs::uniform_weights(y, total);
}

void BM_RegularizedState(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = Density1D::gaussian(0.0, 1.0);
  const auto mu = spread_diracs(n, -1.0, 1.0, 0.5);
  SolverConfig cfg;
  cfg.eps = 0.01;
  const auto psi = solve_regularized(d, mu, cfg).psi;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_regularized(d, mu, psi, cfg.eps));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RegularizedState)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_Hessian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = Density1D::gaussian(0.0, 1.0);
  const auto mu = spread_diracs(n, -1.0, 1.0, 0.5);
  SolverConfig cfg;
  cfg.eps = 0.01;
  const auto psi = solve_regularized(d, mu, cfg).psi;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reg_hessian(d, mu, psi, cfg.eps));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hessian)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_TridiagSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  TridiagSym t(n);
  for (std::size_t i = 0; i < n; ++i) t.diag[i] = 2.5;
  for (auto& v : t.off) v = -1.0;
  const std::vector<double> rhs(n, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tridiag_solve(t, rhs));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TridiagSolve)->RangeMultiplier(8)->Range(64, 1 << 18)->Complexity();

void BM_SolveRegularized(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = Density1D::gaussian(0.0, 1.0);
  const auto mu = spread_diracs(n, -1.0, 1.0, 0.5);
  SolverConfig cfg;
  cfg.eps = 0.05;
  int iterations = 0;
  for (auto _ : state) {
    const auto rep = solve_regularized(d, mu, cfg);
    iterations = rep.iterations;
    benchmark::DoNotOptimize(rep.psi.data());
  }
  state.counters["newton_iterations"] = iterations;
}
BENCHMARK(BM_SolveRegularized)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMillisecond);

void BM_SolveUnregularized(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = Density1D::hat(-1.0, 1.0);
  const auto mu = spread_diracs(n, -1.0, 1.0, 0.75);
  SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_unregularized(d, mu, cfg).psi.data());
  }
}
BENCHMARK(BM_SolveUnregularized)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

// DD side of the semi-discrete vs discrete-discrete timing comparison.
void BM_DdBarycenters(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = Density1D::hat(-1.0, 1.0);
  const auto mu = spread_diracs(100, -1.0, 1.0, 0.75);
  for (auto _ : state) {
    const auto sinks = discretize(d, m);
    benchmark::DoNotOptimize(dd_barycenters(mu.y(), mu.alpha(), d.total_mass(), sinks));
  }
}
BENCHMARK(BM_DdBarycenters)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_FistStep(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> pts(2 * 200);
  for (auto& v : pts) v = g(rng);
  const PointCloud target(2, pts);
  RigidTransform move;
  move.dim = 2;
  move.rotation = {std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3)};
  move.translation = {0.2, -0.1};
  const PointCloud source = move.apply(target);
  const auto dirs = sample_directions(2, static_cast<std::size_t>(state.range(0)), 7);
  FistConfig cfg;
  cfg.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fist_step(source, TargetShape{target}, dirs, cfg).transform);
  }
}
BENCHMARK(BM_FistStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
