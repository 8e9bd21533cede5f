#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "usdot/tridiag.hpp"

namespace usdot {

/// Laplacian of the graph on {0, ..., N-1, inf} whose restriction to the
/// first N vertices is `base`. col0[i] is the weight between i and the
/// auxiliary vertex inf.
struct LaplacianExt {
  TridiagSym base;
  std::vector<double> col0;

  [[nodiscard]] std::size_t size() const { return base.size() + 1; }
  /// Dense (N+1) x (N+1) form, auxiliary vertex last.
  [[nodiscard]] std::vector<std::vector<double>> dense() const;
};

/// Throws std::invalid_argument when a row of H is not weakly diagonally
/// dominant beyond a 1e-12 relative slack.
[[nodiscard]] LaplacianExt laplacian_extension(const TridiagSym& h);

/// Number of eigenvalues strictly below `shift`, from the inertia of
/// T - shift I.
[[nodiscard]] std::size_t count_below(const TridiagSym& t, double shift);
[[nodiscard]] std::size_t count_below(const LaplacianExt& m, double shift);

/// k-th smallest eigenvalue (0-based) by inertia bisection, absolute
/// accuracy 1e-10 * ||T||.
[[nodiscard]] double eigenvalue(const TridiagSym& t, std::size_t k);
[[nodiscard]] double eigenvalue(const LaplacianExt& m, std::size_t k);

[[nodiscard]] double min_eig_sym(const TridiagSym& t);
/// Smallest eigenvalue of the extended Laplacian, or its smallest
/// eigenvalue on the orthogonal complement of the ones vector (the Fiedler
/// value) when `restrict_to_orthogonal_of_ones` is set.
[[nodiscard]] double min_eig_sym(const LaplacianExt& m,
                                 bool restrict_to_orthogonal_of_ones);

/// 4 beta / (N + 1) * sin^2(pi / (2N + 2)).
[[nodiscard]] double fiedler_lower_bound(std::size_t n, double beta);

struct ConnectivityReport {
  /// Thresholded edges; the auxiliary vertex has index N.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  bool connected = false;
  double fiedler_bound = 0.0;
  /// Indices i where neither w(i, i+1) >= beta nor both w(i, inf) and
  /// w(i+1, inf) are >= beta.
  std::vector<std::size_t> violations;
};

[[nodiscard]] ConnectivityReport connectivity_check(const LaplacianExt& m,
                                                    double beta);

}  // namespace usdot
