#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "usdot/ddot.hpp"

using namespace usdot;
using doctest::Approx;

TEST_CASE("quantile discretization") {
  const auto u = Density1D::uniform(0.0, 1.0);
  auto x = discretize(u, 2);
  CHECK(x[0] == Approx(0.25));
  CHECK(x[1] == Approx(0.75));
  x = discretize(u, 4);
  CHECK(x == std::vector<double>{0.125, 0.375, 0.625, 0.875});
  const auto hat = Density1D::hat(-1.0, 1.0);
  x = discretize(hat, 2);
  CHECK(x[0] == Approx(-1.0 + std::sqrt(0.5)).epsilon(1e-14));
  CHECK(x[1] == Approx(1.0 - std::sqrt(0.5)).epsilon(1e-14));
  CHECK_THROWS_AS((void)discretize(u, 0), std::invalid_argument);
}

TEST_CASE("matching examples") {
  const std::vector<double> src{0.0, 1.0};
  const std::vector<double> snk{0.1, 0.5, 0.9};
  auto r = dd_partial_transport(src, snk);
  CHECK(r.assignment == std::vector<std::size_t>{0, 2});
  CHECK(r.cost == Approx(0.02));
  r = dd_partial_transport(snk, snk);
  CHECK(r.assignment == std::vector<std::size_t>{0, 1, 2});
  CHECK(r.cost == 0.0);
  const std::vector<double> one{0.4};
  const std::vector<double> ends{0.0, 1.0};
  r = dd_partial_transport(one, ends);
  CHECK(r.assignment == std::vector<std::size_t>{0});
  CHECK(r.cost == Approx(0.16));
  CHECK_THROWS_AS((void)dd_partial_transport(snk, src), std::invalid_argument);
}

TEST_CASE("dynamic program equals exhaustive search") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t m = 1; m <= 10; ++m) {
    for (std::size_t n = 1; n <= std::min<std::size_t>(m, 6); ++n) {
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> x(n);
        std::vector<double> t(m);
        for (auto& v : x) v = u(rng);
        for (auto& v : t) v = u(rng);
        std::sort(x.begin(), x.end());
        std::sort(t.begin(), t.end());
        const auto r = dd_partial_transport(x, t);
        const double ref = oracle::brute_force_matching(x, t);
        CHECK(r.cost == Approx(ref).epsilon(1e-12));
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i > 0) CHECK(r.assignment[i] > r.assignment[i - 1]);
          c += (x[i] - t[r.assignment[i]]) * (x[i] - t[r.assignment[i]]);
        }
        CHECK(c == Approx(r.cost).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("replication counts") {
  const std::vector<double> alpha(4, 0.1875);  // total 0.75
  auto c = replication_counts(alpha, 1.0, 1000);
  std::size_t total = 0;
  for (auto v : c) total += v;
  CHECK(total == 750);
  c = replication_counts(alpha, 1.0, 2);
  CHECK(c == std::vector<std::size_t>{1, 1, 1, 1});
}

TEST_CASE("discrete barycenters approach cell barycenters") {
  const auto d = Density1D::gaussian(0.0, 1.0);
  const double lo = d.support().lo;
  const double hi = d.support().hi;
  const auto pdf = [](double x) { return std::exp(-0.5 * x * x); };
  const double total = oracle::integrate(pdf, lo, hi);
  // A lone Dirac takes the ball around it holding its mass.
  const double y = 0.5;
  const double alpha = 0.3;
  const double r = oracle::bisect(
      [&](double t) { return oracle::integrate(pdf, y - t, y + t) / total; },
      alpha, 0.0, 1.0);
  const double cell_bary =
      oracle::integrate([&](double x) { return x * pdf(x); }, y - r, y + r) /
      oracle::integrate(pdf, y - r, y + r);
  const std::vector<double> ys{y};
  const std::vector<double> alphas{alpha};
  double prev = 1.0;
  for (std::size_t m : {10u, 100u, 1000u}) {
    const auto sinks = discretize(d, m);
    const auto b = dd_barycenters(ys, alphas, d.total_mass(), sinks);
    const double err = std::abs(b.barycenter[0] - cell_bary);
    CHECK(err < prev);
    // at least first order in 1/M
    if (m > 10u) CHECK(err < 0.2 * prev);
    prev = err;
  }
}
