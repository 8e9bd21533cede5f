#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "usdot/cells.hpp"
#include "usdot/density.hpp"
#include "usdot/tridiag.hpp"

namespace usdot {

struct SolverConfig {
  double eps = 0.1;
  double tol = 1e-10;  // relative to min(alpha_min, alpha_inf)
  int max_iter = 200;
  /// Every accepted iterate keeps G_i >= mass_floor * alpha_i and the
  /// inactive mass >= mass_floor * alpha_inf (or half the starting value
  /// when the start is already below that).
  double mass_floor = 0.1;
  double backtrack_factor = 0.5;
  double min_step = 1.0 / 1048576.0;
  double continuation_factor = 0.5;
  /// Last stage of solve_with_continuation; <= 0 means a single stage.
  double target_eps = 0.0;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

enum class SolverStatus { converged, max_iter, stalled, singular_hessian };

[[nodiscard]] const char* to_string(SolverStatus status);

struct Diagnostics {
  double lambda_min = 0.0;      // smallest eigenvalue of the Hessian
  double lambda_1 = 0.0;        // Fiedler value of the extended Laplacian
  double fiedler_bound = 0.0;   // 4 beta / (N+1) sin^2(pi / (2N+2))
  double beta = 0.0;            // rho_min / (4R)
  double r = 0.0;
  double R = 0.0;
  double eps0 = 0.0;
  double q_norm = 0.0;          // |d_eps G^eps| (Euclidean)
  double q_bound = 0.0;         // 4 rho_max^2 / alpha_min sqrt(N) eps
  bool eps_lt_eps0 = false;
  bool rho_bounded_below = false;
  bool connected = false;
  bool fiedler_ok = false;
  bool psi_bounds_ok = false;
  bool q_ok = false;

  /// The bounds are only claimed for eps < eps0 and rho_min > 0.
  [[nodiscard]] bool guaranteed() const {
    return eps_lt_eps0 && rho_bounded_below;
  }
  /// True when every guaranteed bound holds (vacuously true otherwise).
  [[nodiscard]] bool all_ok() const {
    return !guaranteed() || (fiedler_ok && psi_bounds_ok && q_ok);
  }
};

struct SolverReport {
  Potential psi;
  double eps = 0.0;  // 0 for the unregularized problem
  int iterations = 0;
  double residual = 0.0;  // |G - alpha|_inf at psi
  double tolerance = 0.0;  // absolute threshold the residual was held to
  std::vector<double> residual_history;
  std::vector<double> step_sizes;
  SolverStatus status = SolverStatus::max_iter;
  std::optional<Diagnostics> diagnostics;
  std::string message;

  [[nodiscard]] bool converged() const {
    return status == SolverStatus::converged;
  }
};

/// min(alpha_min, alpha_inf): the scale of the stopping criterion.
[[nodiscard]] double residual_scale(const SortedDiracs& diracs);

/// Starting potential: sqrt(psi_i) = max(alpha_i / (2 rho_max), a quarter of
/// the distance to the nearest other Dirac), grown for cells without mass
/// and shrunk when no inactive mass is left. eps <= 0 selects the
/// unregularized masses.
[[nodiscard]] Potential initial_potential(const Density1D& density,
                                          const SortedDiracs& diracs,
                                          double eps);

/// Damped Newton ascent on the regularized dual.
[[nodiscard]] SolverReport solve_regularized(
    const Density1D& density, const SortedDiracs& diracs,
    const SolverConfig& config, std::optional<Potential> init = std::nullopt);

/// Geometric schedule from `from` down to `to` (both included).
[[nodiscard]] std::vector<double> eps_schedule(double from, double to,
                                               double factor);

/// One regularized solve per eps of `schedule` (strictly decreasing), each
/// warm-started from the previous one. Stops after the first failed stage.
[[nodiscard]] std::vector<SolverReport> solve_with_continuation(
    const Density1D& density, const SortedDiracs& diracs,
    const SolverConfig& config, std::span<const double> schedule);

/// Schedule eps_schedule(config.eps, config.target_eps,
/// config.continuation_factor).
[[nodiscard]] std::vector<SolverReport> solve_with_continuation(
    const Density1D& density, const SortedDiracs& diracs,
    const SolverConfig& config);

/// Semismooth Newton on the unregularized dual with the one-sided Jacobian.
/// Falls back to continuation down to eps = 1e-6 when a step is rejected.
[[nodiscard]] SolverReport solve_unregularized(
    const Density1D& density, const SortedDiracs& diracs,
    const SolverConfig& config, std::optional<Potential> init = std::nullopt);

/// Spectral and a priori bound checks at a regularized solution.
[[nodiscard]] Diagnostics diagnose(const Density1D& density,
                                   const SortedDiracs& diracs,
                                   std::span<const double> psi, double eps);

struct OdeCheck {
  double residual = 0.0;   // |H psi_dot + d_eps G|
  double reference = 0.0;  // |d_eps G|
  bool solved = false;
};

/// Compares H^eps psi_dot with -d_eps G^eps, psi_dot from central
/// differences of solves at eps +- delta.
[[nodiscard]] OdeCheck ode_residual(const Density1D& density,
                                    const SortedDiracs& diracs,
                                    const SolverConfig& config, double delta);

}  // namespace usdot
