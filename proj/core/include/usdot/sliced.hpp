#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "usdot/cells.hpp"
#include "usdot/density.hpp"
#include "usdot/solver.hpp"

namespace usdot {

/// Points in dimension 2 or 3, stored row by row.
struct PointCloud {
  int dim = 2;
  std::vector<double> coords;

  PointCloud() = default;
  /// Throws std::invalid_argument for dim outside {2, 3}, a coordinate
  /// count that is not a multiple of dim, or non-finite values.
  PointCloud(int dim, std::vector<double> coords);

  [[nodiscard]] std::size_t size() const { return coords.size() / static_cast<std::size_t>(dim); }
  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  /// Largest distance between two points of the bounding box.
  [[nodiscard]] double diameter() const;
};

/// Segments (2 vertices per element) or triangles (3 vertices per element);
/// each element carries mass proportional to its length or area.
struct SimplexSoup {
  int dim = 2;
  std::vector<double> vertices;
  std::vector<std::vector<std::size_t>> elements;

  [[nodiscard]] std::size_t vertex_count() const {
    return vertices.size() / static_cast<std::size_t>(dim);
  }
  /// Throws std::invalid_argument on bad indices or mixed element sizes.
  void validate() const;
};

using TargetShape = std::variant<PointCloud, SimplexSoup>;

struct ProjectionOptions {
  /// Histogram bins for point-set targets when `thickness` is 0.
  std::size_t bins = 64;
  /// Width given to every projected point or degenerate element; with a
  /// positive value point-set targets become sums of boxes instead of
  /// histograms.
  double thickness = 0.0;
  /// Fraction of the mass spread uniformly over the projected support so
  /// that the density stays positive between separated parts.
  double floor = 1e-3;
};

/// Projected target density along the unit vector theta. Throws
/// std::invalid_argument when the projection collapses to a point and no
/// thickness is given.
[[nodiscard]] Density1D project(const TargetShape& shape,
                                std::span<const double> theta,
                                const ProjectionOptions& options = {});

/// Projected sources: distinct sorted positions, and for every input point
/// the index of the position it landed on (points with coinciding
/// projections share one Dirac).
struct ProjectedSources {
  std::vector<double> positions;
  std::vector<std::size_t> count;  // points merged into each position
  std::vector<std::size_t> owner;  // position index of each input point
};

[[nodiscard]] ProjectedSources project(const PointCloud& cloud,
                                       std::span<const double> theta);

struct RigidTransform {
  int dim = 2;
  std::vector<double> rotation;     // dim x dim, row-major
  std::vector<double> translation;  // dim

  static RigidTransform identity(int dim);
  [[nodiscard]] std::vector<double> apply(std::span<const double> p) const;
  [[nodiscard]] PointCloud apply(const PointCloud& cloud) const;
  /// (this o first): x -> this(first(x)).
  [[nodiscard]] RigidTransform after(const RigidTransform& first) const;
};

/// Rotation and translation minimizing sum |R p_i + t - q_i|^2 with
/// det R = +1.
[[nodiscard]] RigidTransform procrustes(const PointCloud& from,
                                        const PointCloud& to);

struct FistConfig {
  /// Share of the target mass carried by the source.
  double mass_ratio = 0.99;
  /// Regularization relative to the length of the projected support.
  double eps = 1e-2;
  ProjectionOptions projection;
  /// eps is overwritten per direction. The residual floor of the projected
  /// problems sits near 1e-12, above the default tolerance.
  SolverConfig solver{.eps = 0.1, .tol = 1e-8, .max_iter = 1000};
  /// Worker threads for the per-direction solves; 0 reads USDOT_THREADS and
  /// falls back to the hardware concurrency.
  unsigned threads = 0;
};

struct FistStep {
  std::vector<double> displacements;  // one dim-vector per source point
  RigidTransform transform;
  std::size_t directions_used = 0;
  std::size_t directions_failed = 0;
  std::vector<int> newton_iterations;  // per direction, -1 when it failed
};

/// One sliced step: per-direction partial transport from the projected
/// target to the projected sources, barycentric displacement proposals
/// combined as (dim / K) sum_theta delta_theta theta, and a rigid fit.
[[nodiscard]] FistStep fist_step(const PointCloud& source,
                                 const TargetShape& target,
                                 std::span<const std::vector<double>> directions,
                                 const FistConfig& config);

/// K directions uniform on the unit circle or sphere.
[[nodiscard]] std::vector<std::vector<double>> sample_directions(
    int dim, std::size_t k, std::uint64_t seed);

struct RegisterConfig {
  int iterations = 100;
  std::size_t directions = 32;
  std::uint64_t seed = 7;
  FistConfig fist;
};

struct Registration {
  std::vector<RigidTransform> trajectory;  // cumulative transform after each iteration
  std::vector<double> rmse;                // entry k is measured before iteration k
  PointCloud registered;
};

/// Iterates fist_step, composing the fitted transforms. The RMSE is taken
/// against `reference` (one point per source point) when given, and against
/// the nearest target point or vertex otherwise.
[[nodiscard]] Registration register_shapes(
    const PointCloud& source, const TargetShape& target,
    const RegisterConfig& config,
    const std::optional<PointCloud>& reference = std::nullopt);

[[nodiscard]] double rmse(const PointCloud& a, const PointCloud& b);

/// Whitespace-separated coordinates, one point per line; '#' starts a
/// comment. Throws std::runtime_error on malformed input.
[[nodiscard]] PointCloud read_points(std::istream& in);
/// OFF vertex/face listing. Faces with 2 vertices are segments, larger
/// faces are fanned into triangles. `dim` 2 drops the z coordinate.
[[nodiscard]] SimplexSoup read_off(std::istream& in, int dim);

}  // namespace usdot
