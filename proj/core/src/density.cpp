#include "usdot/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "quadrature.hpp"

namespace usdot {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double slope(const DensityPiece& p) { return (p.v1 - p.v0) / (p.x1 - p.x0); }

// Value of the affine extension of a polynomial piece at x.
double poly_value(const DensityPiece& p, double x) {
  if (p.kind == PieceKind::constant) return p.v0;
  return p.v0 + slope(p) * (x - p.x0);
}

double poly_slope(const DensityPiece& p) {
  return p.kind == PieceKind::constant ? 0.0 : slope(p);
}

// Phi(tb) - Phi(ta) for the standard normal, accurate in either tail.
double normal_mass(double ta, double tb) {
  if (ta >= 0.0) {
    return 0.5 * (std::erfc(ta * kInvSqrt2) - std::erfc(tb * kInvSqrt2));
  }
  if (tb <= 0.0) {
    return 0.5 * (std::erfc(-tb * kInvSqrt2) - std::erfc(-ta * kInvSqrt2));
  }
  return 0.5 * (std::erf(tb * kInvSqrt2) - std::erf(ta * kInvSqrt2));
}

double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

Moments piece_moments(const DensityPiece& p, double a, double b, double c) {
  if (!(b > a)) return {};
  if (p.kind == PieceKind::gaussian) {
    const double k = p.scale * p.sigma * std::sqrt(2.0 * std::numbers::pi);
    const double ta = (a - p.center) / p.sigma;
    const double tb = (b - p.center) / p.sigma;
    const double pa = normal_pdf(ta);
    const double pb = normal_pdf(tb);
    const double i0 = normal_mass(ta, tb);
    const double i1 = pa - pb;
    const double i2 = i0 + ta * pa - tb * pb;
    const double d = p.center - c;
    const double s = p.sigma;
    return {k * i0, k * (s * i1 + d * i0),
            k * (s * s * i2 + 2.0 * s * d * i1 + d * d * i0)};
  }
  // density = A + B t with t = x - c
  const double A = poly_value(p, c);
  const double B = poly_slope(p);
  const double ta = a - c;
  const double tb = b - c;
  auto antider = [&](int k) {
    auto f = [&](double t) {
      const double tk1 = std::pow(t, k + 1);
      return A * tk1 / (k + 1) + B * tk1 * t / (k + 2);
    };
    return f(tb) - f(ta);
  };
  if (p.kind == PieceKind::constant) {
    return {A * (tb - ta), A * 0.5 * (tb * tb - ta * ta),
            A * (tb * tb * tb - ta * ta * ta) / 3.0};
  }
  return {antider(0), antider(1), antider(2)};
}

double piece_mass(const DensityPiece& p, double a, double b) {
  if (!(b > a)) return 0.0;
  switch (p.kind) {
    case PieceKind::constant:
      return p.v0 * (b - a);
    case PieceKind::affine: {
      const double va = poly_value(p, a);
      const double vb = poly_value(p, b);
      return 0.5 * (va + vb) * (b - a);
    }
    case PieceKind::gaussian:
      return p.scale * p.sigma * std::sqrt(2.0 * std::numbers::pi) *
             normal_mass((a - p.center) / p.sigma, (b - p.center) / p.sigma);
  }
  return 0.0;
}

// int_0^theta sin^2, with a series near zero to avoid cancellation.
double sin2_integral(double theta) {
  if (theta < 0.25) {
    const double x = 2.0 * theta;
    double term = x * x * x / 6.0;
    double sum = 0.0;
    for (int k = 1; k < 12; ++k) {
      sum += term;
      term *= -x * x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    }
    return 0.25 * sum;
  }
  return 0.25 * (2.0 * theta - std::sin(2.0 * theta));
}

// int_0^theta sin^4, with a series near zero.
double sin4_integral(double theta) {
  if (theta < 0.25) {
    // sum_{k>=2} (-1)^k theta^(2k+1) (4^(2k+1)/32 - 2^(2k+1)/4) / (2k+1)!
    double sum = 0.0;
    double pow_theta = std::pow(theta, 5);
    double fact = 120.0;
    double pow2 = 32.0;
    double pow4 = 1024.0;
    for (int k = 2; k < 14; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      sum += sign * pow_theta * (pow4 / 32.0 - pow2 / 4.0) / fact;
      pow_theta *= theta * theta;
      fact *= (2.0 * k + 2.0) * (2.0 * k + 3.0);
      pow2 *= 4.0;
      pow4 *= 16.0;
    }
    return sum;
  }
  return 0.375 * theta - 0.25 * std::sin(2.0 * theta) +
         std::sin(4.0 * theta) / 32.0;
}

struct RimPoint {
  double w;  // |x - y|
  double s;  // sqrt(psi - w^2)
  [[nodiscard]] double theta() const { return std::atan2(s, w); }
};

// Integral of the rim kernel (the part of the ball where s < eps) over
// x = y + side * w, w in [lo.w, hi.w].
double rim_integral(const DensityPiece& p, KernelOrder order, double y,
                    double radius, double eps, double side, RimPoint lo,
                    RimPoint hi) {
  const double theta_a = lo.theta();
  const double theta_b = hi.theta();
  if (!(theta_a > theta_b)) return 0.0;
  const double R = radius;

  if (p.kind != PieceKind::gaussian) {
    const double A = poly_value(p, y);
    const double B = side * poly_slope(p);
    const double sa = lo.s / R;
    const double sb = hi.s / R;
    switch (order) {
      case KernelOrder::reg1:
      case KernelOrder::deps: {
        const double s2 = sin2_integral(theta_a) - sin2_integral(theta_b);
        const double s3 = (sa * sa * sa - sb * sb * sb) / 3.0;
        const double v = R * R * (A * s2 + B * R * s3);
        return order == KernelOrder::reg1 ? v / eps : -v / (eps * eps);
      }
      case KernelOrder::reg0: {
        const double s4 = sin4_integral(theta_a) - sin4_integral(theta_b);
        const double s5 =
            (std::pow(sa, 5) - std::pow(sb, 5)) / 5.0;
        return 2.0 * std::pow(R, 4) / (3.0 * eps) * (A * s4 + B * R * s5);
      }
      case KernelOrder::reg2:
        return (A * (theta_a - theta_b) + B * R * (sa - sb)) / (2.0 * eps);
      case KernelOrder::mass0:
        break;
    }
    return 0.0;
  }

  auto integrand = [&](double theta) {
    const double s = R * std::sin(theta);
    const double x = y + side * R * std::cos(theta);
    const double rho = p.value(x);
    switch (order) {
      case KernelOrder::reg1:
        return s * s * rho / eps;
      case KernelOrder::deps:
        return -s * s * rho / (eps * eps);
      case KernelOrder::reg0:
        return 2.0 * s * s * s * s * rho / (3.0 * eps);
      case KernelOrder::reg2:
        return rho / (2.0 * eps);
      case KernelOrder::mass0:
        break;
    }
    return 0.0;
  };
  const double max_panel = std::min(0.2, 0.5 * p.sigma / R);
  return detail::gauss_legendre(integrand, theta_b, theta_a, max_panel);
}

std::vector<double> tokens_to_numbers(std::istringstream& in,
                                      const std::string& family) {
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw std::invalid_argument("density '" + family +
                                  "': bad number '" + token + "'");
    }
  }
  return values;
}

}  // namespace

double DensityPiece::value(double x) const {
  if (kind == PieceKind::gaussian) {
    const double t = (x - center) / sigma;
    return scale * std::exp(-0.5 * t * t);
  }
  return poly_value(*this, x);
}

Density1D Density1D::from_pieces(std::vector<DensityPiece> pieces,
                                 double target_mass, bool allow_zero_pieces) {
  if (pieces.empty()) throw std::invalid_argument("density: empty support");
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& p = pieces[k];
    if (!(p.x1 > p.x0) || !std::isfinite(p.x0) || !std::isfinite(p.x1)) {
      throw std::invalid_argument("density: empty or unbounded piece");
    }
    if (k > 0 && pieces[k - 1].x1 != p.x0) {
      throw std::invalid_argument("density: pieces are not contiguous");
    }
    switch (p.kind) {
      case PieceKind::constant:
        if (p.v0 < 0.0 || (p.v0 == 0.0 && !allow_zero_pieces)) {
          throw std::invalid_argument("density: nonpositive value on a piece");
        }
        break;
      case PieceKind::affine:
        if (p.v0 < 0.0 || p.v1 < 0.0 ||
            (p.v0 == 0.0 && p.v1 == 0.0 && !allow_zero_pieces)) {
          throw std::invalid_argument("density: nonpositive value on a piece");
        }
        break;
      case PieceKind::gaussian:
        if (!(p.sigma > 0.0)) throw std::invalid_argument("density: sigma <= 0");
        if (!(p.scale > 0.0)) {
          throw std::invalid_argument("density: nonpositive value on a piece");
        }
        break;
    }
  }

  Density1D d;
  d.pieces_ = std::move(pieces);
  double mass = 0.0;
  for (const auto& p : d.pieces_) mass += piece_mass(p, p.x0, p.x1);
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("density: zero total mass");
  }
  if (target_mass > 0.0) {
    const double f = target_mass / mass;
    for (auto& p : d.pieces_) {
      p.v0 *= f;
      p.v1 *= f;
      p.scale *= f;
    }
  }

  d.cumulative_.assign(d.pieces_.size() + 1, 0.0);
  d.rho_min_ = std::numeric_limits<double>::infinity();
  d.rho_max_ = 0.0;
  for (std::size_t k = 0; k < d.pieces_.size(); ++k) {
    const auto& p = d.pieces_[k];
    d.cumulative_[k + 1] = d.cumulative_[k] + piece_mass(p, p.x0, p.x1);
    double lo = std::min(p.value(p.x0), p.value(p.x1));
    double hi = std::max(p.value(p.x0), p.value(p.x1));
    if (p.kind == PieceKind::gaussian && p.center > p.x0 && p.center < p.x1) {
      hi = p.scale;
    }
    d.rho_min_ = std::min(d.rho_min_, lo);
    d.rho_max_ = std::max(d.rho_max_, hi);
  }
  d.total_mass_ = d.cumulative_.back();
  d.support_ = {d.pieces_.front().x0, d.pieces_.back().x1};
  return d;
}

Density1D Density1D::uniform(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("density: empty support");
  return from_pieces({{PieceKind::constant, a, b, 1.0, 1.0}});
}

Density1D Density1D::affine(std::span<const double> xs,
                            std::span<const double> values) {
  if (xs.size() < 2 || xs.size() != values.size()) {
    throw std::invalid_argument("density 'affine': need >= 2 (x, v) pairs");
  }
  std::vector<DensityPiece> pieces;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    pieces.push_back(
        {PieceKind::affine, xs[k], xs[k + 1], values[k], values[k + 1]});
  }
  return from_pieces(std::move(pieces));
}

Density1D Density1D::hat(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("density: empty support");
  const double c = 0.5 * (a + b);
  const double xs[] = {a, c, b};
  const double vs[] = {0.0, 1.0, 0.0};
  return affine(xs, vs);
}

Density1D Density1D::gaussian(double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0.0)) throw std::invalid_argument("density: sigma <= 0");
  if (!(hi > lo)) throw std::invalid_argument("density: empty support");
  DensityPiece p{PieceKind::gaussian, lo, hi};
  p.center = mu;
  p.sigma = sigma;
  p.scale = 1.0;
  return from_pieces({p});
}

Density1D Density1D::histogram(std::span<const double> edges,
                               std::span<const double> masses,
                               bool allow_empty_bins) {
  if (edges.size() < 2 || masses.size() + 1 != edges.size()) {
    throw std::invalid_argument(
        "density 'histogram': need n+1 edges and n masses");
  }
  std::vector<DensityPiece> pieces;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    const double width = edges[k + 1] - edges[k];
    if (!(width > 0.0)) {
      throw std::invalid_argument("density 'histogram': edges not increasing");
    }
    const double v = masses[k] / width;
    pieces.push_back({PieceKind::constant, edges[k], edges[k + 1], v, v});
  }
  return from_pieces(std::move(pieces), 1.0, allow_empty_bins);
}

Density1D Density1D::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string family;
  if (!(in >> family)) throw std::invalid_argument("density: empty spec");

  if (family == "histogram") {
    std::vector<double> edges;
    std::vector<double> masses;
    std::string token;
    bool after_colon = false;
    while (in >> token) {
      if (token == ":") {
        after_colon = true;
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw std::invalid_argument("density 'histogram': bad number '" +
                                    token + "'");
      }
      (after_colon ? masses : edges).push_back(v);
    }
    if (!after_colon) {
      throw std::invalid_argument("density 'histogram': missing ':'");
    }
    return histogram(edges, masses);
  }

  const auto v = tokens_to_numbers(in, family);
  if (family == "uniform") {
    if (v.size() != 2) throw std::invalid_argument("density 'uniform a b'");
    return uniform(v[0], v[1]);
  }
  if (family == "hat") {
    if (v.size() != 2) throw std::invalid_argument("density 'hat a b'");
    return hat(v[0], v[1]);
  }
  if (family == "gaussian") {
    if (v.size() == 2) return gaussian(v[0], v[1]);
    if (v.size() == 4) return gaussian(v[0], v[1], v[2], v[3]);
    throw std::invalid_argument("density 'gaussian mu sigma [lo hi]'");
  }
  if (family == "affine") {
    if (v.size() < 4 || v.size() % 2 != 0) {
      throw std::invalid_argument("density 'affine x0 v0 x1 v1 ...'");
    }
    std::vector<double> xs;
    std::vector<double> vs;
    for (std::size_t k = 0; k < v.size(); k += 2) {
      xs.push_back(v[k]);
      vs.push_back(v[k + 1]);
    }
    return affine(xs, vs);
  }
  throw std::invalid_argument("density: unknown family '" + family + "'");
}

std::vector<double> Density1D::breakpoints() const {
  std::vector<double> out;
  out.reserve(pieces_.size() + 1);
  for (const auto& p : pieces_) out.push_back(p.x0);
  out.push_back(pieces_.back().x1);
  return out;
}

std::size_t Density1D::piece_index(double x) const {
  // last piece with x0 <= x
  auto it = std::upper_bound(
      pieces_.begin(), pieces_.end(), x,
      [](double v, const DensityPiece& p) { return v < p.x0; });
  if (it == pieces_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(pieces_.begin(), it)) - 1;
}

double Density1D::value(double x) const {
  if (x < support_.lo || x > support_.hi) return 0.0;
  return pieces_[piece_index(x)].value(x);
}

double Density1D::value_right(double x) const {
  if (x < support_.lo || x >= support_.hi) return 0.0;
  return pieces_[piece_index(x)].value(x);
}

double Density1D::value_left(double x) const {
  if (x <= support_.lo || x > support_.hi) return 0.0;
  std::size_t k = piece_index(x);
  if (pieces_[k].x0 == x && k > 0) --k;
  return pieces_[k].value(x);
}

double Density1D::cdf(double x) const {
  if (x <= support_.lo) return 0.0;
  if (x >= support_.hi) return total_mass_;
  const std::size_t k = piece_index(x);
  const auto& p = pieces_[k];
  return cumulative_[k] + piece_mass(p, p.x0, x);
}

double Density1D::quantile(double prob) const {
  const double target = std::clamp(prob, 0.0, total_mass_);
  if (target <= 0.0) return support_.lo;
  if (target >= total_mass_) return support_.hi;
  // first piece whose cumulative upper end reaches the target
  auto it = std::lower_bound(cumulative_.begin() + 1, cumulative_.end(), target);
  const std::size_t k =
      static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
  const auto& p = pieces_[k];
  const double q = target - cumulative_[k];
  switch (p.kind) {
    case PieceKind::constant:
      return std::min(p.x1, p.x0 + q / p.v0);
    case PieceKind::affine: {
      const double m = slope(p);
      const double disc = std::max(0.0, p.v0 * p.v0 + 2.0 * m * q);
      const double denom = p.v0 + std::sqrt(disc);
      const double t = denom > 0.0 ? 2.0 * q / denom : 0.0;
      return std::clamp(p.x0 + t, p.x0, p.x1);
    }
    case PieceKind::gaussian: {
      double lo = p.x0;
      double hi = p.x1;
      double x = 0.5 * (lo + hi);
      for (int it_count = 0; it_count < 200; ++it_count) {
        const double f = piece_mass(p, p.x0, x) - q;
        if (f > 0.0) hi = x; else lo = x;
        const double step = f / p.value(x);
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) {
          x = next;
          break;
        }
        x = next;
      }
      return x;
    }
  }
  return support_.hi;
}

Moments Density1D::moments(Interval interval, double center) const {
  const double lo = std::max(interval.lo, support_.lo);
  const double hi = std::min(interval.hi, support_.hi);
  Moments total;
  if (!(hi > lo)) return total;
  for (std::size_t k = piece_index(lo); k < pieces_.size(); ++k) {
    const auto& p = pieces_[k];
    if (p.x0 >= hi) break;
    const Moments m =
        piece_moments(p, std::max(lo, p.x0), std::min(hi, p.x1), center);
    total.m0 += m.m0;
    total.m1 += m.m1;
    total.m2 += m.m2;
  }
  return total;
}

double Density1D::integrate_kernel(Interval interval,
                                   const KernelSpec& kernel) const {
  if (kernel.order != KernelOrder::mass0 && !(kernel.eps > 0.0)) {
    throw std::invalid_argument("integrate_kernel: eps must be positive");
  }
  if (!(kernel.psi > 0.0)) return 0.0;
  const double y = kernel.y;
  const double R = std::sqrt(kernel.psi);
  const double eps = kernel.eps;
  const double outer_lo = std::max(interval.lo, support_.lo);
  const double outer_hi = std::min(interval.hi, support_.hi);
  const double lo = std::max(outer_lo, y - R);
  const double hi = std::min(outer_hi, y + R);
  if (!(hi > lo)) return 0.0;

  // Inner radius: where s >= eps, the kernel is polynomial in x.
  double inner = R;
  if (kernel.order != KernelOrder::mass0) {
    inner = kernel.psi > eps * eps ? std::sqrt(kernel.psi - eps * eps) : 0.0;
  }
  auto rim_point = [&](double w) {
    if (w >= R) return RimPoint{R, 0.0};
    if (inner > 0.0 && w <= inner) return RimPoint{inner, eps};
    return RimPoint{w, std::sqrt((R - w) * (R + w))};
  };

  double total = 0.0;
  for (std::size_t k = piece_index(lo); k < pieces_.size(); ++k) {
    const auto& p = pieces_[k];
    if (p.x0 >= hi) break;
    const double pa = std::max(lo, p.x0);
    const double pb = std::min(hi, p.x1);
    if (!(pb > pa)) continue;
    // Offsets from y taken before clipping to the ball, so a ball end lands
    // on w = R exactly.
    const double wa = y - std::max(outer_lo, p.x0);
    const double wb = std::min(outer_hi, p.x1) - y;

    const double ia = std::max(pa, y - inner);
    const double ib = std::min(pb, y + inner);
    if (ib > ia) {
      switch (kernel.order) {
        case KernelOrder::mass0:
        case KernelOrder::reg1:
          total += piece_mass(p, ia, ib);
          break;
        case KernelOrder::reg0: {
          const Moments m = piece_moments(p, ia, ib, y);
          total += (kernel.psi - eps * eps / 3.0) * m.m0 - m.m2;
          break;
        }
        case KernelOrder::reg2:
        case KernelOrder::deps:
          break;
      }
    }
    if (kernel.order == KernelOrder::mass0) continue;

    for (const double side : {-1.0, 1.0}) {
      const double w_lo = std::max(inner, side > 0 ? -wa : -wb);
      const double w_hi = std::min(R, side > 0 ? wb : wa);
      if (!(w_hi > w_lo)) continue;
      total += rim_integral(p, kernel.order, y, R, eps, side, rim_point(w_lo),
                            rim_point(w_hi));
    }
  }
  return total;
}

}  // namespace usdot
