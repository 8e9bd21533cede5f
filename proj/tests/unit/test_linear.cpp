#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "usdot/spectral.hpp"
#include "usdot/tridiag.hpp"

using namespace usdot;
using doctest::Approx;

namespace {

std::vector<std::vector<double>> dense(const TridiagSym& t) {
  const std::size_t n = t.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] = t.diag[i];
    if (i + 1 < n) m[i][i + 1] = m[i + 1][i] = t.off[i];
  }
  return m;
}

// Random weighted path Laplacian restricted to its first n vertices plus
// nonnegative slack, i.e. a weakly dominant H with nonpositive coupling.
TridiagSym random_dominant(std::mt19937_64& rng, std::size_t n, double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TridiagSym t(n);
  for (std::size_t i = 0; i + 1 < n; ++i) t.off[i] = u(rng) < zero_prob ? 0.0 : -u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += -t.off[i - 1];
    if (i + 1 < n) r += -t.off[i];
    t.diag[i] = r + (u(rng) < 0.5 ? 0.0 : u(rng));
  }
  t.diag[0] += 0.1;
  return t;
}

}  // namespace

TEST_CASE("tridiagonal solve") {
  const TridiagSym id({1.0, 1.0, 1.0}, {0.0, 0.0});
  const std::vector<double> b{3.0, -1.0, 2.5};
  CHECK(tridiag_solve(id, b) == b);
  const TridiagSym t2({2.0, 2.0}, {-1.0});
  const auto x2 = tridiag_solve(t2, std::vector<double>{1.0, 1.0});
  CHECK(x2[0] == Approx(1.0));
  CHECK(x2[1] == Approx(1.0));
  const TridiagSym t3({4.0, 4.0, 4.0}, {1.0, 1.0});
  const std::vector<double> b3{1.0, 2.0, 3.0};
  const auto x3 = tridiag_solve(t3, b3);
  const auto ref = oracle::dense_solve(dense(t3), b3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(x3[i] - ref[i]) < 1e-12);
}

TEST_CASE("tridiagonal solve rejects indefinite input") {
  const TridiagSym t({1.0, 1.0}, {2.0});
  CHECK_THROWS_WITH_AS((void)tridiag_solve(t, std::vector<double>{1.0, 1.0}),
                       doctest::Contains("not positive definite"), NotPositiveDefinite);
  const TridiagSym z({0.0}, {});
  CHECK_THROWS_AS((void)tridiag_solve(z, std::vector<double>{1.0}), NotPositiveDefinite);
}

TEST_CASE("streaming elimination and backward error") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const auto t = random_dominant(rng, 40);
    std::vector<double> b(40);
    for (auto& v : b) v = n(rng);
    const auto x = tridiag_solve(t, b);
    TridiagEliminator e(40);
    for (std::size_t i = 0; i < 40; ++i) e.push_row(t.diag[i], i > 0 ? t.off[i - 1] : 0.0, b[i]);
    const auto y = e.solve();
    CHECK(x == y);
    const auto r = t.multiply(x);
    double err = 0.0;
    double xn = 0.0;
    double bn = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
      err = std::max(err, std::abs(r[i] - b[i]));
      xn = std::max(xn, std::abs(x[i]));
      bn = std::max(bn, std::abs(b[i]));
    }
    CHECK(err <= 1e-12 * (t.norm_inf() * xn + bn));
  }
}

TEST_CASE("laplacian extension") {
  const TridiagSym one({2.0}, {});
  const auto m1 = laplacian_extension(one);
  CHECK(m1.col0[0] == 2.0);
  const auto d1 = m1.dense();
  CHECK(d1[0][0] == 2.0);
  CHECK(d1[0][1] == -2.0);
  CHECK(d1[1][1] == 2.0);
  const TridiagSym two({2.0, 2.0}, {-1.0});
  const auto m2 = laplacian_extension(two);
  CHECK(m2.col0[0] == 1.0);
  CHECK(m2.col0[1] == 1.0);
  const TridiagSym bad({1.0, 2.0}, {-1.5});
  CHECK_THROWS_WITH_AS((void)laplacian_extension(bad), doctest::Contains("not diagonally dominant"),
                       std::invalid_argument);
}

TEST_CASE("eigenvalues match Jacobi") {
  const TridiagSym path({1.0, 1.0}, {-1.0});
  CHECK(eigenvalue(path, 1) == Approx(2.0).epsilon(1e-13));
  CHECK(std::abs(eigenvalue(path, 0)) < 1e-13);
  CHECK(min_eig_sym(TridiagSym({2.0}, {})) == Approx(2.0));
  // Laplacian of K2 has spectrum {0, 2}
  const auto m = laplacian_extension(TridiagSym({1.0}, {}));
  CHECK(min_eig_sym(m, true) == Approx(2.0).epsilon(1e-13));
  CHECK(std::abs(min_eig_sym(m, false)) < 1e-13);

  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const auto t = random_dominant(rng, 12, 0.2);
    const auto ref = oracle::jacobi_eigenvalues(dense(t));
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(eigenvalue(t, i) - ref[i]) <= 1e-10 * t.norm_inf());
    }
    const auto lm = laplacian_extension(t);
    const auto lref = oracle::jacobi_eigenvalues(lm.dense());
    CHECK(std::abs(min_eig_sym(lm, true) - lref[1]) <= 1e-10 * 2.0 * t.norm_inf());
    // row sums vanish
    for (const auto& row : lm.dense()) {
      double s = 0.0;
      for (double v : row) s += v;
      CHECK(std::abs(s) <= 1e-12);
    }
    // submatrix bound
    CHECK(min_eig_sym(t) >= lref[1] / 13.0 - 1e-10);
  }
}

TEST_CASE("fiedler value grows with weights") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::uniform_int_distribution<std::size_t> pick(0, 9);
  for (int k = 0; k < 30; ++k) {
    const auto t = random_dominant(rng, 10);
    auto heavier = t;
    const std::size_t i = pick(rng);
    const double delta = u(rng);
    if (i < 9) {
      heavier.off[i] -= delta;
      heavier.diag[i] += delta;
      heavier.diag[i + 1] += delta;
    } else {
      heavier.diag[i] += delta;  // weight to the auxiliary vertex
    }
    CHECK(min_eig_sym(laplacian_extension(heavier), true) >=
          min_eig_sym(laplacian_extension(t), true) - 1e-12);
  }
}

TEST_CASE("connectivity check") {
  CHECK(fiedler_lower_bound(1, 0.3) == Approx(0.3));
  const auto m = laplacian_extension(TridiagSym({2.0, 2.0, 0.5}, {-1.0, -0.1}));
  const auto rep = connectivity_check(m, 0.4);
  // edges: (0,1) weight 1, (0,aux) 1, (1,aux) 0.9, (2,aux) 0.4
  CHECK(rep.connected);
  CHECK(rep.violations.empty());
  const auto rep2 = connectivity_check(m, 0.95);
  CHECK_FALSE(rep2.connected);
  CHECK(rep2.violations == std::vector<std::size_t>{1});
}
