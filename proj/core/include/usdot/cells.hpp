#pragma once

#include <optional>
#include <span>
#include <vector>

#include "usdot/density.hpp"
#include "usdot/tridiag.hpp"

namespace usdot {

/// Dual potential, one component per Dirac.
using Potential = std::vector<double>;

/// Dirac masses at strictly increasing positions with positive weights
/// whose total stays below the density mass.
class SortedDiracs {
 public:
  /// Throws std::invalid_argument if positions are not strictly increasing,
  /// a weight is nonpositive, or the total weight is not below
  /// `density_mass`.
  SortedDiracs(std::vector<double> y, std::vector<double> alpha,
               double density_mass = 1.0);

  /// N equal weights summing to `total`.
  static SortedDiracs uniform_weights(std::vector<double> y, double total,
                                      double density_mass = 1.0);

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] const std::vector<double>& y() const { return y_; }
  [[nodiscard]] const std::vector<double>& alpha() const { return alpha_; }
  [[nodiscard]] double alpha_total() const { return alpha_total_; }
  [[nodiscard]] double alpha_min() const { return alpha_min_; }
  /// Mass left untransported: density mass minus total weight.
  [[nodiscard]] double alpha_inf() const { return alpha_inf_; }

 private:
  std::vector<double> y_;
  std::vector<double> alpha_;
  double alpha_total_ = 0.0;
  double alpha_min_ = 0.0;
  double alpha_inf_ = 0.0;
};

/// Laguerre boundaries and restricted cells of a potential.
///
/// z has N + 1 entries: z[0] = -inf, z[N] = +inf and z[i] is the boundary
/// between cells i - 1 and i. The unrestricted cell of i is
/// [lag_lo[i], lag_hi[i]] (taken from the upper envelope, so it is correct
/// even when the z are not increasing); the restricted cell is [a[i], b[i]].
/// Endpoints are not clamped to the support.
struct CellLayout {
  std::vector<double> z;
  std::vector<double> lag_lo;
  std::vector<double> lag_hi;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> mass;
  double inactive_mass = 0.0;
  bool in_domain = false;

  [[nodiscard]] std::size_t size() const { return a.size(); }
  [[nodiscard]] bool lag_empty(std::size_t i) const {
    return !(lag_hi[i] > lag_lo[i]);
  }
  [[nodiscard]] bool empty(std::size_t i) const { return !(b[i] > a[i]); }
};

/// Boundary between Laguerre cells i and j (i < j).
[[nodiscard]] double laguerre_boundary(const SortedDiracs& diracs,
                                       std::span<const double> psi,
                                       std::size_t i, std::size_t j);

[[nodiscard]] CellLayout layout(const Density1D& density,
                                const SortedDiracs& diracs,
                                std::span<const double> psi);

/// Masses of the restricted cells (clamped to the support).
[[nodiscard]] std::vector<double> masses(const Density1D& density,
                                         const CellLayout& cells);

/// Unregularized dual value K(psi).
[[nodiscard]] double dual_value(const Density1D& density,
                                const SortedDiracs& diracs,
                                std::span<const double> psi);

/// Mean position of each restricted cell; nullopt for zero-mass cells.
[[nodiscard]] std::vector<std::optional<double>> barycenters(
    const Density1D& density, const CellLayout& cells);

struct DirectionalDerivative {
  std::vector<double> dG;  // one-sided derivative of the cell masses along v
  TridiagSym H;            // dG = H v
};

/// One-sided derivative of the restricted-cell masses along v, with the
/// generalized Jacobian read from the active branches of the endpoint
/// formulas. Throws std::domain_error when some cell has no mass (the
/// inactive part may be empty).
[[nodiscard]] DirectionalDerivative directional_derivative(
    const Density1D& density, const SortedDiracs& diracs,
    std::span<const double> psi, std::span<const double> v);

}  // namespace usdot
