#include "usdot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "usdot/regularization.hpp"
#include "usdot/spectral.hpp"

namespace usdot {
namespace {

struct Eval {
  CellLayout cells;
  std::vector<double> G;
  double inactive = 0.0;
  double value = 0.0;
  double magnitude = 0.0;  // size of the terms summed into value
};

double inf_norm_diff(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

double linear_magnitude(const SortedDiracs& diracs, std::span<const double> psi) {
  double m = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) m += std::abs(diracs.alpha()[i] * psi[i]);
  return m;
}

class RegularizedModel {
 public:
  RegularizedModel(const Density1D& density, const SortedDiracs& diracs, double eps)
      : density_(density), diracs_(diracs), eps_(eps) {}

  Eval evaluate(std::span<const double> psi) const {
    RegState s = evaluate_regularized(density_, diracs_, psi, eps_);
    Eval e;
    e.cells = std::move(s.cells);
    e.G = std::move(s.G);
    e.inactive = s.inactive;
    e.value = s.value;
    e.magnitude = linear_magnitude(diracs_, psi) + std::abs(s.value);
    return e;
  }

  // Rows of the Hessian are formed and eliminated in one pass.
  std::vector<double> direction(std::span<const double> psi, const Eval& e) const {
    const std::size_t n = psi.size();
    std::vector<double> coupling(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      coupling[i] = reg_coupling(density_, diracs_, psi, eps_, e.cells, i);
    }
    TridiagEliminator elim(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d = reg_rim_weight(density_, diracs_, psi, eps_, e.cells, i);
      if (i > 0) d += coupling[i - 1];
      if (i + 1 < n) d += coupling[i];
      elim.push_row(d, i > 0 ? -coupling[i - 1] : 0.0,
                    diracs_.alpha()[i] - e.G[i]);
    }
    return elim.solve();
  }

 private:
  const Density1D& density_;
  const SortedDiracs& diracs_;
  double eps_;
};

class UnregularizedModel {
 public:
  UnregularizedModel(const Density1D& density, const SortedDiracs& diracs)
      : density_(density), diracs_(diracs) {}

  Eval evaluate(std::span<const double> psi) const {
    Eval e;
    e.cells = layout(density_, diracs_, psi);
    e.G = e.cells.mass;
    e.inactive = e.cells.inactive_mass;
    e.value = dual_value(density_, diracs_, psi);
    e.magnitude = linear_magnitude(diracs_, psi) + std::abs(e.value);
    return e;
  }

  // The Jacobian depends on the direction through the active branches, so
  // the direction is refined until it reproduces its own branches.
  std::vector<double> direction(std::span<const double> psi, const Eval& e) const {
    if (!e.cells.in_domain) throw NotPositiveDefinite("outside differentiability domain");
    const std::size_t n = psi.size();
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = diracs_.alpha()[i] - e.G[i];
    std::vector<double> v = rhs;
    std::vector<double> d;
    for (int pass = 0; pass < 4; ++pass) {
      const TridiagSym h = directional_derivative(density_, diracs_, psi, v).H;
      d = tridiag_solve(h, rhs);
      if (pass > 0 && inf_norm_diff(d, v) == 0.0) break;
      v = d;
    }
    return d;
  }

 private:
  const Density1D& density_;
  const SortedDiracs& diracs_;
};

template <class Model>
SolverReport newton(const Model& model, const SortedDiracs& diracs,
                    const SolverConfig& config, Potential psi, double eps) {
  SolverReport rep;
  rep.eps = eps;
  rep.tolerance = config.tol * residual_scale(diracs);
  const std::size_t n = diracs.size();
  const auto& alpha = diracs.alpha();

  Eval cur = model.evaluate(psi);
  std::vector<double> floor(n);
  for (std::size_t i = 0; i < n; ++i) {
    floor[i] = std::min(config.mass_floor * alpha[i], 0.5 * cur.G[i]);
  }
  const double floor_inf =
      std::min(config.mass_floor * diracs.alpha_inf(), 0.5 * cur.inactive);

  auto finish = [&](SolverStatus status, std::string message) {
    rep.status = status;
    rep.message = std::move(message);
    rep.psi = psi;
    rep.residual = inf_norm_diff(cur.G, alpha);
    return rep;
  };

  bool feasible_start = floor_inf > 0.0;
  for (double f : floor) feasible_start = feasible_start && f > 0.0;
  if (!feasible_start) {
    return finish(SolverStatus::singular_hessian,
                  "starting potential leaves a cell or the inactive part empty");
  }

  for (int k = 0;; ++k) {
    const double res = inf_norm_diff(cur.G, alpha);
    rep.residual_history.push_back(res);
    if (res <= rep.tolerance) return finish(SolverStatus::converged, "converged");
    if (k >= config.max_iter) {
      return finish(SolverStatus::max_iter, "iteration limit reached");
    }

    std::vector<double> d;
    try {
      d = model.direction(psi, cur);
    } catch (const NotPositiveDefinite& e) {
      return finish(SolverStatus::singular_hessian, e.what());
    }

    double eta = 1.0;
    for (;;) {
      Potential trial(n);
      for (std::size_t i = 0; i < n; ++i) trial[i] = psi[i] + eta * d[i];
      Eval next = model.evaluate(trial);
      bool ok = next.inactive >= floor_inf;
      for (std::size_t i = 0; ok && i < n; ++i) ok = next.G[i] >= floor[i];
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                           std::max(cur.magnitude, next.magnitude);
      ok = ok && next.value >= cur.value - slack;
      if (ok) {
        if (trial == psi) {
          return finish(SolverStatus::stalled, "Newton step below the resolution of psi");
        }
        psi = std::move(trial);
        cur = std::move(next);
        rep.step_sizes.push_back(eta);
        ++rep.iterations;
        break;
      }
      eta *= config.backtrack_factor;
      if (eta < config.min_step) {
        return finish(SolverStatus::stalled, "step size underflow in backtracking");
      }
    }
  }
}

std::vector<double> start_masses(const Density1D& density,
                                 const SortedDiracs& diracs,
                                 std::span<const double> psi, double eps) {
  if (eps > 0.0) return reg_masses(density, diracs, psi, eps);
  return layout(density, diracs, psi).mass;
}

bool start_admissible(const Density1D& density, const SortedDiracs& diracs,
                      std::span<const double> psi, double eps) {
  const std::vector<double> G = start_masses(density, diracs, psi, eps);
  double total = 0.0;
  for (double g : G) {
    if (!(g > 0.0)) return false;
    total += g;
  }
  return density.total_mass() - total > 0.0;
}

// sqrt(psi_i) = max(alpha_i / (2 rho_max), gap / 4), grown for cells without
// mass and shrunk when no inactive mass is left.
Potential radius_start(const Density1D& density, const SortedDiracs& diracs,
                       double eps) {
  const std::size_t n = diracs.size();
  const auto& y = diracs.y();
  std::vector<double> radius(n);
  for (std::size_t i = 0; i < n; ++i) {
    double gap = std::numeric_limits<double>::infinity();
    if (i > 0) gap = std::min(gap, y[i] - y[i - 1]);
    if (i + 1 < n) gap = std::min(gap, y[i + 1] - y[i]);
    radius[i] = diracs.alpha()[i] / (2.0 * density.rho_max());
    if (std::isfinite(gap)) radius[i] = std::max(radius[i], 0.25 * gap);
  }

  Potential psi(n);
  auto fill = [&] {
    for (std::size_t i = 0; i < n; ++i) psi[i] = radius[i] * radius[i];
  };
  for (int round = 0; round < 200; ++round) {
    fill();
    const std::vector<double> G = start_masses(density, diracs, psi, eps);
    bool grew = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(G[i] > 0.0)) {
        radius[i] *= 2.0;
        grew = true;
      }
    }
    if (grew) continue;
    const double inactive =
        density.total_mass() - std::accumulate(G.begin(), G.end(), 0.0);
    if (inactive < 0.1 * diracs.alpha_inf()) {
      for (double& r : radius) r *= 0.5;
      continue;
    }
    break;
  }
  fill();
  return psi;
}

// Laguerre boundaries at the alpha-weighted quantiles of the density fix psi
// up to a constant, which is then chosen above the point where every ball
// reaches its cell.
Potential quantile_start(const Density1D& density, const SortedDiracs& diracs,
                         double eps) {
  const std::size_t n = diracs.size();
  const auto& y = diracs.y();
  const auto& alpha = diracs.alpha();
  const double mass = density.total_mass();
  std::vector<double> z(n + 1);
  z.front() = density.support().lo;
  z.back() = density.support().hi;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc += alpha[i];
    z[i + 1] = density.quantile(acc / diracs.alpha_total() * mass);
  }

  Potential base(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = y[i + 1] - y[i];
    base[i + 1] = base[i] + d * (y[i] + y[i + 1] - 2.0 * z[i + 1]);
  }
  // Smallest shift at which every ball touches its cell.
  double c_low = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = std::max({0.0, z[i] - y[i], y[i] - z[i + 1]});
    c_low = std::max(c_low, dist * dist - base[i]);
  }
  const double len = density.support().length();
  auto shifted = [&](double c) {
    Potential psi(n);
    for (std::size_t i = 0; i < n; ++i) psi[i] = base[i] + c;
    return psi;
  };
  // min_i G_i / alpha_i grows with c and the inactive share shrinks; the
  // start balances the two.
  auto balance = [&](double c) {
    const std::vector<double> G = start_masses(density, diracs, shifted(c), eps);
    double worst = std::numeric_limits<double>::infinity();
    double used = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::min(worst, G[i] / alpha[i]);
      used += G[i];
    }
    return worst - (mass - used) / diracs.alpha_inf();
  };
  double lo = c_low;
  double hi = c_low + len * len;
  for (int k = 0; k < 60 && balance(hi) < 0.0; ++k) hi = lo + 2.0 * (hi - lo);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    (balance(mid) < 0.0 ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);
  return shifted(c);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("solver: eps must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
  if (max_iter < 0) throw std::invalid_argument("solver: max_iter must be nonnegative");
  if (!(mass_floor > 0.0 && mass_floor < 1.0)) {
    throw std::invalid_argument("solver: mass_floor must lie in (0, 1)");
  }
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw std::invalid_argument("solver: backtrack_factor must lie in (0, 1)");
  }
  if (!(min_step > 0.0 && min_step <= 1.0)) {
    throw std::invalid_argument("solver: min_step must lie in (0, 1]");
  }
  if (!(continuation_factor > 0.0 && continuation_factor < 1.0)) {
    throw std::invalid_argument("solver: continuation_factor must lie in (0, 1)");
  }
}

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::stalled: return "stalled";
    case SolverStatus::singular_hessian: return "singular_hessian";
  }
  return "unknown";
}

double residual_scale(const SortedDiracs& diracs) {
  return std::min(diracs.alpha_min(), diracs.alpha_inf());
}

Potential initial_potential(const Density1D& density, const SortedDiracs& diracs,
                            double eps) {
  Potential psi = radius_start(density, diracs, eps);
  if (start_admissible(density, diracs, psi, eps)) return psi;
  Potential alt = quantile_start(density, diracs, eps);
  return start_admissible(density, diracs, alt, eps) ? alt : psi;
}

SolverReport solve_regularized(const Density1D& density,
                               const SortedDiracs& diracs,
                               const SolverConfig& config,
                               std::optional<Potential> init) {
  config.validate();
  const bool warm = init.has_value();
  Potential start = warm ? std::move(*init)
                         : initial_potential(density, diracs, config.eps);
  if (start.size() != diracs.size()) {
    throw std::invalid_argument("solver: initial potential size mismatch");
  }
  const RegularizedModel model(density, diracs, config.eps);
  SolverReport rep = newton(model, diracs, config, std::move(start), config.eps);
  if (rep.status == SolverStatus::singular_hessian && warm) {
    // One retry from the default start.
    SolverReport retry = newton(model, diracs, config,
                                initial_potential(density, diracs, config.eps),
                                config.eps);
    retry.iterations += rep.iterations;
    rep = std::move(retry);
  }
  if (rep.converged()) rep.diagnostics = diagnose(density, diracs, rep.psi, config.eps);
  return rep;
}

std::vector<double> eps_schedule(double from, double to, double factor) {
  if (!(from > 0.0) || !(factor > 0.0 && factor < 1.0)) {
    throw std::invalid_argument("eps_schedule: need from > 0 and factor in (0, 1)");
  }
  std::vector<double> out{from};
  if (!(to > 0.0) || to >= from) return out;
  double e = from;
  while (e * factor > to * (1.0 + 1e-12)) {
    e *= factor;
    out.push_back(e);
  }
  out.push_back(to);
  return out;
}

std::vector<SolverReport> solve_with_continuation(const Density1D& density,
                                                  const SortedDiracs& diracs,
                                                  const SolverConfig& config,
                                                  std::span<const double> schedule) {
  if (schedule.empty()) throw std::invalid_argument("continuation: empty schedule");
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    if (!(schedule[k] < schedule[k - 1])) {
      throw std::invalid_argument("continuation: schedule must be strictly decreasing");
    }
  }
  std::vector<SolverReport> out;
  std::optional<Potential> warm;
  for (double eps : schedule) {
    SolverConfig stage = config;
    stage.eps = eps;
    out.push_back(solve_regularized(density, diracs, stage, warm));
    if (!out.back().converged()) break;
    warm = out.back().psi;
  }
  return out;
}

std::vector<SolverReport> solve_with_continuation(const Density1D& density,
                                                  const SortedDiracs& diracs,
                                                  const SolverConfig& config) {
  const std::vector<double> schedule =
      eps_schedule(config.eps, config.target_eps, config.continuation_factor);
  return solve_with_continuation(density, diracs, config, schedule);
}

SolverReport solve_unregularized(const Density1D& density,
                                 const SortedDiracs& diracs,
                                 const SolverConfig& config,
                                 std::optional<Potential> init) {
  config.validate();
  Potential start = init ? std::move(*init) : initial_potential(density, diracs, 0.0);
  if (start.size() != diracs.size()) {
    throw std::invalid_argument("solver: initial potential size mismatch");
  }
  const UnregularizedModel model(density, diracs);
  SolverReport rep = newton(model, diracs, config, std::move(start), 0.0);
  if (rep.converged()) return rep;

  const std::vector<double> schedule =
      eps_schedule(config.eps, std::min(config.eps, 1e-6), config.continuation_factor);
  const std::vector<SolverReport> stages =
      solve_with_continuation(density, diracs, config, schedule);
  int used = rep.iterations;
  for (const SolverReport& s : stages) used += s.iterations;
  if (stages.empty() || !stages.back().converged()) {
    rep.iterations = used;
    rep.message = "semismooth iteration failed and continuation did not converge";
    return rep;
  }
  SolverReport second = newton(model, diracs, config, stages.back().psi, 0.0);
  second.iterations += used;
  second.message = second.converged() ? "converged after continuation"
                                      : "semismooth iteration failed after continuation";
  return second;
}

Diagnostics diagnose(const Density1D& density, const SortedDiracs& diracs,
                     std::span<const double> psi, double eps) {
  const RegParams params = RegParams::make(density, diracs, eps);
  const std::size_t n = diracs.size();
  Diagnostics d;
  d.r = params.r;
  d.R = params.R;
  d.eps0 = params.eps0;
  d.eps_lt_eps0 = params.below_eps0();
  d.rho_bounded_below = density.bounded_below();
  d.beta = density.rho_min() / (4.0 * params.R);

  const TridiagSym h = reg_hessian(density, diracs, psi, eps);
  d.lambda_min = min_eig_sym(h);
  d.fiedler_bound = fiedler_lower_bound(n, d.beta);
  const double slack = 1e-10 * std::max(1.0, h.norm_inf());
  d.fiedler_ok = d.lambda_min >= d.fiedler_bound - slack;
  try {
    const LaplacianExt m = laplacian_extension(h);
    d.lambda_1 = min_eig_sym(m, true);
    d.connected = connectivity_check(m, d.beta).connected;
  } catch (const std::invalid_argument&) {
    d.lambda_1 = std::numeric_limits<double>::quiet_NaN();
  }

  d.psi_bounds_ok = true;
  for (double p : psi) {
    const double s = std::sqrt(std::max(p, 0.0));
    d.psi_bounds_ok = d.psi_bounds_ok && s >= params.r * (1.0 - 1e-12) &&
                      s <= params.R * (1.0 + 1e-12);
  }

  const std::vector<double> q = eps_derivative(density, diracs, psi, eps);
  d.q_norm = std::sqrt(std::inner_product(q.begin(), q.end(), q.begin(), 0.0));
  d.q_bound = 4.0 * density.rho_max() * density.rho_max() / diracs.alpha_min() *
              std::sqrt(static_cast<double>(n)) * eps;
  d.q_ok = d.q_norm <= d.q_bound;
  return d;
}

OdeCheck ode_residual(const Density1D& density, const SortedDiracs& diracs,
                      const SolverConfig& config, double delta) {
  OdeCheck out;
  if (!(delta > 0.0 && delta < config.eps)) {
    throw std::invalid_argument("ode_residual: need 0 < delta < eps");
  }
  const SolverReport mid = solve_regularized(density, diracs, config);
  if (!mid.converged()) return out;
  SolverConfig up = config;
  up.eps = config.eps + delta;
  SolverConfig down = config;
  down.eps = config.eps - delta;
  const SolverReport hi = solve_regularized(density, diracs, up, mid.psi);
  const SolverReport lo = solve_regularized(density, diracs, down, mid.psi);
  if (!hi.converged() || !lo.converged()) return out;

  const std::size_t n = diracs.size();
  std::vector<double> psi_dot(n);
  for (std::size_t i = 0; i < n; ++i) psi_dot[i] = (hi.psi[i] - lo.psi[i]) / (2.0 * delta);
  const TridiagSym h = reg_hessian(density, diracs, mid.psi, config.eps);
  const std::vector<double> q = eps_derivative(density, diracs, mid.psi, config.eps);
  std::vector<double> hp = h.multiply(psi_dot);
  double res = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res += (hp[i] + q[i]) * (hp[i] + q[i]);
    ref += q[i] * q[i];
  }
  out.residual = std::sqrt(res);
  out.reference = std::sqrt(ref);
  out.solved = true;
  return out;
}

}  // namespace usdot
