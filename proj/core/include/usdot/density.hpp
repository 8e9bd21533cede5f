#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace usdot {

/// Closed interval [lo, hi]; empty when lo > hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double length() const { return hi > lo ? hi - lo : 0.0; }
  [[nodiscard]] bool empty() const { return !(hi > lo); }
};

/// Zeroth, first and second moments of a density about a center.
struct Moments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

enum class PieceKind { constant, affine, gaussian };

/// One smooth piece of a density on [x0, x1].
///
/// constant: value v0. affine: v0 at x0, v1 at x1. gaussian:
/// scale * exp(-(x - center)^2 / (2 sigma^2)).
struct DensityPiece {
  PieceKind kind = PieceKind::constant;
  double x0 = 0.0;
  double x1 = 0.0;
  double v0 = 0.0;
  double v1 = 0.0;
  double center = 0.0;
  double sigma = 1.0;
  double scale = 1.0;

  [[nodiscard]] double value(double x) const;
};

/// Kernel weights integrated against the density over a cell.
///
/// With s(x) = sqrt(psi - (x - y)^2) on the ball |x - y| <= sqrt(psi):
///   mass0: 1 on the ball
///   reg0:  eps^2 f*((psi - (x-y)^2) / eps^2)      (regularized cost term)
///   reg1:  min(s / eps, 1)                         (regularized mass)
///   reg2:  1 / (2 eps s) where s < eps, else 0     (Hessian diagonal)
///   deps:  -s / eps^2 where s < eps, else 0        (d/d eps of reg1)
enum class KernelOrder { mass0, reg0, reg1, reg2, deps };

struct KernelSpec {
  KernelOrder order = KernelOrder::mass0;
  double y = 0.0;
  double psi = 0.0;
  double eps = 1.0;
};

/// Compactly supported piecewise density on the real line.
///
/// Immutable after construction. Pieces are contiguous and cover the
/// support exactly; all queries clamp to the support.
class Density1D {
 public:
  /// Builds a density from contiguous pieces. When `target_mass` > 0 the
  /// pieces are rescaled to that mass. Zero values are accepted only when
  /// `allow_zero_pieces` is set or on the endpoints of affine pieces; such
  /// densities report `bounded_below() == false`.
  static Density1D from_pieces(std::vector<DensityPiece> pieces,
                               double target_mass = 1.0,
                               bool allow_zero_pieces = false);

  static Density1D uniform(double a, double b);
  /// Piecewise affine through (xs[k], values[k]), normalized.
  static Density1D affine(std::span<const double> xs,
                          std::span<const double> values);
  /// Triangle (1 - |x - c| / h)_+ on [a, b], normalized.
  static Density1D hat(double a, double b);
  /// Gaussian truncated to [lo, hi] and renormalized.
  static Density1D gaussian(double mu, double sigma, double lo, double hi);
  static Density1D gaussian(double mu, double sigma) {
    return gaussian(mu, sigma, mu - 4.0 * sigma, mu + 4.0 * sigma);
  }
  /// Histogram with bin edges and per-bin masses, normalized.
  static Density1D histogram(std::span<const double> edges,
                             std::span<const double> masses,
                             bool allow_empty_bins = false);

  /// Parses `uniform a b`, `affine x0 v0 ... xn vn`, `hat a b`,
  /// `gaussian mu sigma [lo hi]`, `histogram x0 .. xn : m1 .. mn`.
  static Density1D parse(std::string_view text);

  [[nodiscard]] Interval support() const { return support_; }
  [[nodiscard]] double total_mass() const { return total_mass_; }
  [[nodiscard]] double rho_min() const { return rho_min_; }
  [[nodiscard]] double rho_max() const { return rho_max_; }
  /// False when the density touches zero somewhere on its support.
  [[nodiscard]] bool bounded_below() const { return rho_min_ > 0.0; }
  [[nodiscard]] const std::vector<DensityPiece>& pieces() const {
    return pieces_;
  }
  [[nodiscard]] std::vector<double> breakpoints() const;

  /// Density value; right-continuous at interior breakpoints, zero outside
  /// the support, closed at both support endpoints.
  [[nodiscard]] double value(double x) const;
  [[nodiscard]] double value_left(double x) const;
  [[nodiscard]] double value_right(double x) const;

  [[nodiscard]] double cdf(double x) const;
  /// Smallest x with cdf(x) = p (p clamped to [0, total_mass]).
  [[nodiscard]] double quantile(double p) const;
  [[nodiscard]] Moments moments(Interval interval, double center) const;
  [[nodiscard]] double integrate_kernel(Interval interval,
                                        const KernelSpec& kernel) const;

 private:
  Density1D() = default;

  [[nodiscard]] std::size_t piece_index(double x) const;

  std::vector<DensityPiece> pieces_;
  std::vector<double> cumulative_;  // mass of pieces [0, k)
  Interval support_;
  double total_mass_ = 0.0;
  double rho_min_ = 0.0;
  double rho_max_ = 0.0;
};

}  // namespace usdot
