#pragma once

#include <span>
#include <vector>

#include "usdot/cells.hpp"
#include "usdot/density.hpp"
#include "usdot/tridiag.hpp"

namespace usdot {

/// Conjugate of f(t) = t^3 / 3 on [0, 1] and its first two derivatives.
///   order 0: 0 (t <= 0), 2/3 t^{3/2} (0 <= t <= 1), t - 1/3 (t > 1)
///   order 1: min(sqrt(t), 1) for t > 0, else 0
///   order 2: 1 / (2 sqrt(t)) on (0, 1), else 0
[[nodiscard]] double fstar(double t, int order);

/// Thickness and the constants of the a priori bounds on the regularized
/// optimum: r <= sqrt(psi_i) <= R holds when eps < eps0 = min(1, r).
struct RegParams {
  double eps = 0.0;
  double eps0 = 0.0;
  double r = 0.0;  // alpha_min / (2 rho_max)
  double R = 0.0;  // sqrt(1 + diam(support and Diracs)^2)

  static RegParams make(const Density1D& density, const SortedDiracs& diracs,
                        double eps);
  [[nodiscard]] bool below_eps0() const { return eps < eps0; }
};

/// Everything the Newton iteration needs at one potential.
struct RegState {
  CellLayout cells;
  std::vector<double> G;   // regularized masses
  double inactive = 0.0;   // density mass minus the sum of G
  double value = 0.0;      // regularized dual value
};

[[nodiscard]] RegState evaluate_regularized(const Density1D& density,
                                            const SortedDiracs& diracs,
                                            std::span<const double> psi,
                                            double eps);

/// G^eps_i = int over Lag_i of min(s / eps, 1) d rho.
[[nodiscard]] std::vector<double> reg_masses(const Density1D& density,
                                             const SortedDiracs& diracs,
                                             std::span<const double> psi,
                                             double eps);

/// K^eps(psi) = -sum_i int_{Lag_i} f_eps^*(psi_i - (x - y_i)^2) d rho
///              + sum_i alpha_i psi_i.
[[nodiscard]] double reg_dual_value(const Density1D& density,
                                    const SortedDiracs& diracs,
                                    std::span<const double> psi, double eps);

/// Returns -D^2 K^eps: nonnegative diagonal, nonpositive off-diagonal,
/// weakly diagonally dominant.
[[nodiscard]] TridiagSym reg_hessian(const Density1D& density,
                                     const SortedDiracs& diracs,
                                     std::span<const double> psi, double eps);
[[nodiscard]] TridiagSym reg_hessian(const Density1D& density,
                                     const SortedDiracs& diracs,
                                     std::span<const double> psi, double eps,
                                     const CellLayout& cells);

/// Off-diagonal magnitude coupling cells i and i + 1 (0 unless both
/// Laguerre cells are nonempty).
[[nodiscard]] double reg_coupling(const Density1D& density,
                                  const SortedDiracs& diracs,
                                  std::span<const double> psi, double eps,
                                  const CellLayout& cells, std::size_t i);

/// Diagonal slack of the Hessian: int_{Lag_i} (f_eps^*)'' d rho.
[[nodiscard]] double reg_rim_weight(const Density1D& density,
                                    const SortedDiracs& diracs,
                                    std::span<const double> psi, double eps,
                                    const CellLayout& cells, std::size_t i);

/// Partial derivative of G^eps with respect to eps at fixed psi:
/// -eps^{-2} int over Lag_i where s < eps of s d rho. Entries are <= 0.
[[nodiscard]] std::vector<double> eps_derivative(const Density1D& density,
                                                 const SortedDiracs& diracs,
                                                 std::span<const double> psi,
                                                 double eps);

}  // namespace usdot
