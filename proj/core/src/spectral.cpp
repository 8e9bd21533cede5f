#include "usdot/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace usdot {
namespace {

double pivot_floor(double scale) {
  return std::numeric_limits<double>::min() * std::max(1.0, scale * scale);
}

double guard(double d, double floor) {
  return std::abs(d) < floor ? -floor : d;
}

double gershgorin_radius(const TridiagSym& t, std::size_t i) {
  double r = 0.0;
  if (i > 0) r += std::abs(t.off[i - 1]);
  if (i + 1 < t.size()) r += std::abs(t.off[i]);
  return r;
}

template <class Matrix>
double bisect_eigenvalue(const Matrix& m, std::size_t k, double lo, double hi,
                         double scale) {
  const double tol = 1e-15 * std::max(scale, std::numeric_limits<double>::min());
  for (int it = 0; it < 300 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(m, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<std::vector<double>> LaplacianExt::dense() const {
  const std::size_t n = base.size();
  std::vector<std::vector<double>> m(n + 1, std::vector<double>(n + 1, 0.0));
  double aux = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] = base.diag[i];
    if (i + 1 < n) m[i][i + 1] = m[i + 1][i] = base.off[i];
    m[i][n] = m[n][i] = -col0[i];
    aux += col0[i];
  }
  m[n][n] = aux;
  return m;
}

LaplacianExt laplacian_extension(const TridiagSym& h) {
  LaplacianExt m;
  m.base = h;
  m.col0.assign(h.size(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double slack = h.diag[i] - gershgorin_radius(h, i);
    if (slack < -1e-12 * std::max(1.0, std::abs(h.diag[i]))) {
      throw std::invalid_argument("laplacian_extension: row " +
                                  std::to_string(i) +
                                  " is not diagonally dominant");
    }
    m.col0[i] = std::max(0.0, slack);
  }
  return m;
}

std::size_t count_below(const TridiagSym& t, double shift) {
  const std::size_t n = t.size();
  const double floor = pivot_floor(t.norm_inf());
  std::size_t count = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = t.diag[i] - shift;
    if (i > 0) d -= t.off[i - 1] * t.off[i - 1] / prev;
    d = guard(d, floor);
    prev = d;
    if (d < 0.0) ++count;
  }
  return count;
}

std::size_t count_below(const LaplacianExt& m, double shift) {
  const std::size_t n = m.base.size();
  const double floor = pivot_floor(m.base.norm_inf() * 2.0);
  std::vector<double> diag = m.base.diag;
  std::vector<double> coupling(n);
  double aux = -shift;
  for (std::size_t i = 0; i < n; ++i) {
    coupling[i] = -m.col0[i];
    aux += m.col0[i];
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = guard(diag[i] - shift, floor);
    if (d < 0.0) ++count;
    if (i + 1 < n) {
      const double o = m.base.off[i];
      diag[i + 1] -= o * o / d;
      coupling[i + 1] -= o * coupling[i] / d;
    }
    aux -= coupling[i] * coupling[i] / d;
  }
  if (guard(aux, floor) < 0.0) ++count;
  return count;
}

double eigenvalue(const TridiagSym& t, std::size_t k) {
  if (k >= t.size()) throw std::out_of_range("eigenvalue: index");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = gershgorin_radius(t, i);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  const double pad = 1e-12 * std::max(1.0, hi - lo);
  return bisect_eigenvalue(t, k, lo - pad, hi + pad,
                           std::max(t.norm_inf(), 1e-300));
}

double eigenvalue(const LaplacianExt& m, std::size_t k) {
  if (k >= m.size()) throw std::out_of_range("eigenvalue: index");
  const auto rows = m.dense();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double scale = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (j != i) r += std::abs(rows[i][j]);
    }
    lo = std::min(lo, rows[i][i] - r);
    hi = std::max(hi, rows[i][i] + r);
    scale = std::max(scale, std::abs(rows[i][i]) + r);
  }
  const double pad = 1e-12 * std::max(1.0, hi - lo);
  return bisect_eigenvalue(m, k, lo - pad, hi + pad,
                           std::max(scale, 1e-300));
}

double min_eig_sym(const TridiagSym& t) { return eigenvalue(t, 0); }

double min_eig_sym(const LaplacianExt& m, bool restrict_to_orthogonal_of_ones) {
  // The ones vector spans the kernel, so the constrained minimum is the
  // second smallest eigenvalue.
  return eigenvalue(m, restrict_to_orthogonal_of_ones ? 1 : 0);
}

double fiedler_lower_bound(std::size_t n, double beta) {
  const double s = std::sin(std::numbers::pi / (2.0 * static_cast<double>(n) + 2.0));
  return 4.0 * beta / (static_cast<double>(n) + 1.0) * s * s;
}

ConnectivityReport connectivity_check(const LaplacianExt& m, double beta) {
  const std::size_t n = m.base.size();
  ConnectivityReport report;
  std::vector<std::size_t> parent(n + 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    report.edges.emplace_back(a, b);
    parent[find(a)] = find(b);
  };

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(m.base.off[i]) >= beta) unite(i, i + 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (m.col0[i] >= beta) unite(i, n);
  }
  const std::size_t root = find(n);
  report.connected = true;
  for (std::size_t v = 0; v < n; ++v) {
    report.connected = report.connected && find(v) == root;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const bool direct = std::abs(m.base.off[i]) >= beta;
    const bool via_aux = m.col0[i] >= beta && m.col0[i + 1] >= beta;
    if (!direct && !via_aux) report.violations.push_back(i);
  }
  report.fiedler_bound = fiedler_lower_bound(n, beta);
  return report;
}

}  // namespace usdot
