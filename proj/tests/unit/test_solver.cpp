#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "usdot/regularization.hpp"
#include "usdot/solver.hpp"

using namespace usdot;
using doctest::Approx;

namespace {

double instance_a_psi(double eps) {
  return oracle::bisect([&](double p) { return oracle::instance_a_mass(p, eps); }, 0.5,
                        eps * eps * (1.0 + 1e-12), 1.0);
}

double max_residual(const Density1D& d, const SortedDiracs& mu, const std::vector<double>& psi,
                    double eps) {
  const auto g = eps > 0 ? reg_masses(d, mu, psi, eps) : layout(d, mu, psi).mass;
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) r = std::max(r, std::abs(g[i] - mu.alpha()[i]));
  return r;
}

SortedDiracs seeded_diracs(std::uint64_t seed, std::size_t n, double lo, double hi, double total) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> y(n);
  for (auto& v : y) v = u(rng);
  std::sort(y.begin(), y.end());
  return SortedDiracs::uniform_weights(y, total);
}

}  // namespace

TEST_CASE("single Dirac matches the scalar oracle") {
  const auto d = Density1D::uniform(0.0, 1.0);
  const SortedDiracs a({0.0}, {0.5});
  SolverConfig cfg;
  cfg.eps = 0.1;
  const auto rep = solve_regularized(d, a, cfg);
  REQUIRE(rep.converged());
  CHECK(std::abs(rep.psi[0] - instance_a_psi(0.1)) < 1e-9);
  CHECK(std::abs(rep.psi[0] - 0.2533423) <= 1e-7);
  CHECK(rep.residual <= 1e-10 * 0.5);
  REQUIRE(rep.diagnostics);
  CHECK(rep.diagnostics->connected);
}

TEST_CASE("symmetric pair") {
  const auto d = Density1D::uniform(0.0, 1.0);
  const SortedDiracs mu({0.25, 0.75}, {0.25, 0.25});
  SolverConfig cfg;
  cfg.eps = 1e-4;
  const auto rep = solve_regularized(d, mu, cfg);
  REQUIRE(rep.converged());
  CHECK(std::abs(rep.psi[0] - 1.0 / 64) < 1e-6);
  CHECK(std::abs(rep.psi[1] - 1.0 / 64) < 1e-6);
  const auto un = solve_unregularized(d, mu, cfg);
  REQUIRE(un.converged());
  CHECK(std::abs(un.psi[0] - 1.0 / 64) < 1e-10);
  CHECK(std::abs(un.psi[1] - 1.0 / 64) < 1e-10);
}

TEST_CASE("truncated gaussian with fifteen Diracs") {
  const auto d = Density1D::gaussian(0.0, 1.0);
  const auto mu = seeded_diracs(42, 15, -1.0, 1.0, 0.5);
  SolverConfig cfg;
  cfg.eps = 0.05;
  const auto rep = solve_regularized(d, mu, cfg);
  REQUIRE(rep.converged());
  CHECK(rep.iterations <= 60);
  CHECK(max_residual(d, mu, rep.psi, 0.05) <= 1e-10 * residual_scale(mu));
}

TEST_CASE("accepted steps ascend and respect the mass floor") {
  const auto d = Density1D::hat(-1.0, 1.0);
  const auto mu = seeded_diracs(8, 10, -0.9, 0.9, 0.7);
  SolverConfig cfg;
  cfg.eps = 0.02;
  // replay the iteration from the recorded step sizes
  const auto rep = solve_regularized(d, mu, cfg);
  REQUIRE(rep.converged());
  CHECK(rep.step_sizes.size() == static_cast<std::size_t>(rep.iterations));
  CHECK(rep.residual_history.size() == static_cast<std::size_t>(rep.iterations) + 1);
  for (double s : rep.step_sizes) CHECK((s > 0.0 && s <= 1.0));
}

TEST_CASE("continuation") {
  const auto d = Density1D::uniform(0.0, 1.0);
  const SortedDiracs a({0.0}, {0.5});
  SolverConfig cfg;
  const std::vector<double> sched{0.2, 0.1, 0.05};
  const auto reps = solve_with_continuation(d, a, cfg, sched);
  REQUIRE(reps.size() == 3);
  double prev = 1.0;
  for (const auto& r : reps) {
    REQUIRE(r.converged());
    CHECK(r.psi[0] < prev);
    CHECK(r.psi[0] > 0.25);
    CHECK(std::abs(r.psi[0] - instance_a_psi(r.eps)) < 1e-9);
    prev = r.psi[0];
  }
  cfg.eps = 0.1;
  const std::vector<double> single{0.1};
  const auto one = solve_with_continuation(d, a, cfg, single);
  const auto direct = solve_regularized(d, a, cfg);
  REQUIRE(one.size() == 1);
  CHECK(one[0].psi == direct.psi);

  const std::vector<double> bad{0.1, 0.2};
  CHECK_THROWS_AS((void)solve_with_continuation(d, a, cfg, bad), std::invalid_argument);
  CHECK(eps_schedule(0.2, 0.05, 0.5) == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(eps_schedule(0.2, 0.03, 0.5).back() == 0.03);
}

TEST_CASE("unregularized solver") {
  const auto d = Density1D::uniform(0.0, 1.0);
  const SortedDiracs a({0.0}, {0.5});
  SolverConfig cfg;
  const auto rep = solve_unregularized(d, a, cfg);
  REQUIRE(rep.converged());
  CHECK(std::abs(rep.psi[0] - 0.25) < 1e-12);

  const auto hat = Density1D::hat(-1.0, 1.0);
  const auto mu = seeded_diracs(31, 10, -0.8, 0.8, 0.6);
  const auto un = solve_unregularized(hat, mu, cfg);
  REQUIRE(un.converged());
  CHECK(max_residual(hat, mu, un.psi, 0.0) <= 1e-10 * residual_scale(mu));
  cfg.eps = 0.1;
  cfg.target_eps = 1e-6;
  const auto stages = solve_with_continuation(hat, mu, cfg);
  REQUIRE(stages.back().converged());
  for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(un.psi[i] - stages.back().psi[i]) < 1e-6);
}

TEST_CASE("a priori bounds at the optimum") {
  const auto d = Density1D::gaussian(0.0, 1.0);
  const auto mu = seeded_diracs(42, 15, -1.0, 1.0, 0.5);
  SolverConfig cfg;
  cfg.eps = 0.01;
  const auto rep = solve_regularized(d, mu, cfg);
  REQUIRE(rep.converged());
  const auto& diag = *rep.diagnostics;
  CHECK(diag.guaranteed());
  CHECK(diag.lambda_min >= diag.fiedler_bound);
  CHECK(diag.q_norm <= diag.q_bound);
  CHECK(diag.psi_bounds_ok);
  CHECK(diag.all_ok());
}

TEST_CASE("ODE residual on the single Dirac") {
  const auto d = Density1D::uniform(0.0, 1.0);
  const SortedDiracs a({0.0}, {0.5});
  SolverConfig cfg;
  cfg.eps = 0.1;
  const auto chk = ode_residual(d, a, cfg, 1e-4);
  REQUIRE(chk.solved);
  CHECK(chk.residual <= 1e-2 * chk.reference);
}

TEST_CASE("initial potential is admissible") {
  const auto d = Density1D::uniform(0.0, 1.0);
  // Dirac far outside the support needs a large potential to reach it.
  const SortedDiracs mu({-3.0, 0.5, 0.6}, {0.1, 0.1, 0.1});
  for (double eps : {0.0, 0.05}) {
    const auto psi = initial_potential(d, mu, eps);
    const auto g = eps > 0 ? reg_masses(d, mu, psi, eps) : layout(d, mu, psi).mass;
    double total = 0.0;
    for (double v : g) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(total < 1.0);
  }
  SolverConfig cfg;
  cfg.eps = 0.05;
  CHECK(solve_regularized(d, mu, cfg).converged());
}

TEST_CASE("crowded Diracs hanging off the support still get a start") {
  const auto d = Density1D::uniform(0.0, 1.0);
  const auto mu = seeded_diracs(11, 120, -0.4, 0.7, 0.5);
  for (double eps : {0.0, 0.01, 0.25}) {
    const auto psi = initial_potential(d, mu, eps);
    const auto g = eps > 0 ? reg_masses(d, mu, psi, eps) : layout(d, mu, psi).mass;
    double total = 0.0;
    for (double v : g) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(total < 1.0);
  }
}

TEST_CASE("near-duplicate Diracs stall at the rounding floor instead of spinning") {
  // Diracs 962 and 963 sit about 1e-7 apart.
  std::mt19937_64 rng(1024);
  std::vector<double> y(1024);
  for (auto& v : y) v = -1.0 + 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  std::sort(y.begin(), y.end());
  const auto mu = SortedDiracs::uniform_weights(y, 0.5);
  const auto d = Density1D::gaussian(0.0, 1.0);
  SolverConfig cfg;
  cfg.eps = 0.05;
  cfg.max_iter = 200;
  const auto rep = solve_regularized(d, mu, cfg);
  CHECK(rep.status != SolverStatus::max_iter);
  CHECK(rep.iterations < 40);
  CHECK(max_residual(d, mu, rep.psi, 0.05) < 1e-12);
}

TEST_CASE("config validation") {
  const auto d = Density1D::uniform(0.0, 1.0);
  const SortedDiracs a({0.0}, {0.5});
  SolverConfig cfg;
  cfg.eps = 0.0;
  CHECK_THROWS_AS((void)solve_regularized(d, a, cfg), std::invalid_argument);
  cfg.eps = 0.1;
  cfg.mass_floor = 1.0;
  CHECK_THROWS_AS((void)solve_regularized(d, a, cfg), std::invalid_argument);
  cfg.mass_floor = 0.1;
  cfg.max_iter = 0;
  const auto rep = solve_regularized(d, a, cfg);
  CHECK(rep.status == SolverStatus::max_iter);
  CHECK(std::string(to_string(rep.status)) == "max_iter");
}
