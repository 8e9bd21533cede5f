#include "usdot/cells.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace usdot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Comparison slack for the branch tests of the endpoint formulas.
double tie_tolerance(double a, double b) {
  return 8.0 * std::numeric_limits<double>::epsilon() *
         (1.0 + std::abs(a) + std::abs(b));
}

}  // namespace

SortedDiracs::SortedDiracs(std::vector<double> y, std::vector<double> alpha,
                           double density_mass)
    : y_(std::move(y)), alpha_(std::move(alpha)) {
  if (y_.empty()) throw std::invalid_argument("diracs: empty");
  if (y_.size() != alpha_.size()) {
    throw std::invalid_argument("diracs: positions and weights differ in size");
  }
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (!std::isfinite(y_[i])) throw std::invalid_argument("diracs: non-finite position");
    if (i > 0 && !(y_[i] > y_[i - 1])) {
      throw std::invalid_argument("diracs: positions must be strictly increasing");
    }
    if (!(alpha_[i] > 0.0)) throw std::invalid_argument("diracs: weights must be positive");
  }
  alpha_total_ = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
  alpha_min_ = *std::min_element(alpha_.begin(), alpha_.end());
  alpha_inf_ = density_mass - alpha_total_;
  if (!(alpha_inf_ > 0.0)) {
    throw std::invalid_argument(
        "diracs: total weight must be below the density mass");
  }
}

SortedDiracs SortedDiracs::uniform_weights(std::vector<double> y, double total,
                                           double density_mass) {
  const std::size_t n = y.size();
  std::vector<double> alpha(n, n > 0 ? total / static_cast<double>(n) : 0.0);
  return SortedDiracs(std::move(y), std::move(alpha), density_mass);
}

double laguerre_boundary(const SortedDiracs& diracs, std::span<const double> psi,
                         std::size_t i, std::size_t j) {
  const double yi = diracs.y()[i];
  const double yj = diracs.y()[j];
  return 0.5 * (yi + yj) - (psi[j] - psi[i]) / (2.0 * (yj - yi));
}

CellLayout layout(const Density1D& density, const SortedDiracs& diracs,
                  std::span<const double> psi) {
  const std::size_t n = diracs.size();
  if (psi.size() != n) throw std::invalid_argument("layout: psi size mismatch");
  CellLayout c;
  c.z.assign(n + 1, 0.0);
  c.z.front() = -kInf;
  c.z.back() = kInf;
  for (std::size_t i = 1; i < n; ++i) {
    c.z[i] = laguerre_boundary(diracs, psi, i - 1, i);
  }

  // Upper envelope of x -> psi_i - (x - y_i)^2; slopes increase with i.
  c.lag_lo.assign(n, 0.0);
  c.lag_hi.assign(n, 0.0);
  std::vector<std::size_t> stack;
  std::vector<double> start(n, -kInf);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    while (!stack.empty()) {
      const std::size_t j = stack.back();
      const double x = laguerre_boundary(diracs, psi, j, i);
      if (x <= start[j]) {
        alive[j] = false;
        c.lag_lo[j] = c.lag_hi[j] = start[j];
        stack.pop_back();
      } else {
        break;
      }
    }
    start[i] = stack.empty() ? -kInf
                             : laguerre_boundary(diracs, psi, stack.back(), i);
    stack.push_back(i);
  }
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const std::size_t j = stack[k];
    c.lag_lo[j] = start[j];
    c.lag_hi[j] = k + 1 < stack.size() ? start[stack[k + 1]] : kInf;
  }

  c.a.assign(n, 0.0);
  c.b.assign(n, 0.0);
  c.mass.assign(n, 0.0);
  const auto& y = diracs.y();
  double active = 0.0;
  bool all_positive = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(psi[i] > 0.0) || !alive[i]) {
      c.a[i] = c.b[i] = y[i];
    } else {
      const double r = std::sqrt(psi[i]);
      c.a[i] = std::max(c.lag_lo[i], y[i] - r);
      c.b[i] = std::min(c.lag_hi[i], y[i] + r);
    }
    if (c.b[i] > c.a[i]) {
      c.mass[i] = density.cdf(c.b[i]) - density.cdf(c.a[i]);
    }
    all_positive = all_positive && c.mass[i] > 0.0;
    active += c.mass[i];
  }
  c.inactive_mass = density.total_mass() - active;
  c.in_domain = all_positive && c.inactive_mass > 0.0;
  return c;
}

std::vector<double> masses(const Density1D& /*density*/,
                           const CellLayout& cells) {
  return cells.mass;
}

double dual_value(const Density1D& density, const SortedDiracs& diracs,
                  std::span<const double> psi) {
  const CellLayout c = layout(density, diracs, psi);
  double value = 0.0;
  for (std::size_t i = 0; i < diracs.size(); ++i) {
    if (c.b[i] > c.a[i]) {
      const Moments m = density.moments({c.a[i], c.b[i]}, diracs.y()[i]);
      value += m.m2 - psi[i] * m.m0;
    }
    value += diracs.alpha()[i] * psi[i];
  }
  return value;
}

std::vector<std::optional<double>> barycenters(const Density1D& density,
                                               const CellLayout& cells) {
  std::vector<std::optional<double>> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!(cells.b[i] > cells.a[i])) continue;
    const double center = 0.5 * (cells.a[i] + cells.b[i]);
    const Moments m = density.moments({cells.a[i], cells.b[i]}, center);
    if (m.m0 > 0.0) out[i] = center + m.m1 / m.m0;
  }
  return out;
}

DirectionalDerivative directional_derivative(const Density1D& density,
                                             const SortedDiracs& diracs,
                                             std::span<const double> psi,
                                             std::span<const double> v) {
  const std::size_t n = diracs.size();
  if (v.size() != n) {
    throw std::invalid_argument("directional_derivative: size mismatch");
  }
  const CellLayout c = layout(density, diracs, psi);
  // The one-sided formulas stay valid when the inactive part is empty.
  if (std::any_of(c.mass.begin(), c.mass.end(), [](double m) { return !(m > 0.0); })) {
    throw std::domain_error(
        "directional_derivative: outside differentiability domain");
  }
  const auto& y = diracs.y();

  // Coefficients of row i: d(G_i) = lower*v[i-1] + diag*v[i] + upper*v[i+1].
  std::vector<double> lower(n, 0.0);
  std::vector<double> diag(n, 0.0);
  std::vector<double> upper(n, 0.0);
  DirectionalDerivative out;
  out.dG.assign(n, 0.0);

  auto rho_along = [&](double x, double velocity) {
    if (velocity > 0.0) return density.value_right(x);
    if (velocity < 0.0) return density.value_left(x);
    return density.value(x);
  };

  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::sqrt(psi[i]);

    // right endpoint b_i = min{z_i, y_i + r}
    {
      const double ball = v[i] / (2.0 * r);
      bool boundary_branch = false;
      double coef_i = 1.0 / (2.0 * r);
      double coef_next = 0.0;
      if (i + 1 < n) {
        const double delta = y[i + 1] - y[i];
        const double zb = (v[i] - v[i + 1]) / (2.0 * delta);
        const double z = c.z[i + 1];
        const double edge = y[i] + r;
        const double tol = tie_tolerance(z, edge);
        if (z < edge - tol) {
          boundary_branch = true;
        } else if (z <= edge + tol) {
          boundary_branch = zb < ball;  // ties read the ball term
        }
        if (boundary_branch) {
          coef_i = 1.0 / (2.0 * delta);
          coef_next = -1.0 / (2.0 * delta);
        }
      }
      const double db =
          coef_i * v[i] + (i + 1 < n ? coef_next * v[i + 1] : 0.0);
      const double rho_b = rho_along(c.b[i], db);
      diag[i] += rho_b * coef_i;
      upper[i] = rho_b * coef_next;
    }

    // left endpoint a_i = max{z_{i-1}, y_i - r}; dG gets -rho(a) * da
    {
      const double ball = -v[i] / (2.0 * r);
      bool boundary_branch = false;
      double coef_i = -1.0 / (2.0 * r);
      double coef_prev = 0.0;
      if (i > 0) {
        const double delta = y[i] - y[i - 1];
        const double za = -(v[i] - v[i - 1]) / (2.0 * delta);
        const double z = c.z[i];
        const double edge = y[i] - r;
        const double tol = tie_tolerance(z, edge);
        if (z > edge + tol) {
          boundary_branch = true;
        } else if (z >= edge - tol) {
          boundary_branch = za > ball;
        }
        if (boundary_branch) {
          coef_i = -1.0 / (2.0 * delta);
          coef_prev = 1.0 / (2.0 * delta);
        }
      }
      const double da = coef_i * v[i] + (i > 0 ? coef_prev * v[i - 1] : 0.0);
      const double rho_a = rho_along(c.a[i], da);
      diag[i] -= rho_a * coef_i;
      lower[i] = -rho_a * coef_prev;
    }

    double dg = diag[i] * v[i];
    if (i > 0) dg += lower[i] * v[i - 1];
    if (i + 1 < n) dg += upper[i] * v[i + 1];
    out.dG[i] = dg;
  }

  out.H = TridiagSym(n);
  out.H.diag = diag;
  for (std::size_t i = 0; i + 1 < n; ++i) out.H.off[i] = upper[i];
  return out;
}

}  // namespace usdot
