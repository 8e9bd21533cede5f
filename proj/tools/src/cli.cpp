#include "usdot_cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "usdot/cells.hpp"
#include "usdot/ddot.hpp"
#include "usdot/regularization.hpp"
#include "usdot/sliced.hpp"
#include "usdot/solver.hpp"
#include "usdot_cli/problem.hpp"

namespace usdot::cli {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header)
      : file_(path), path_(path) {
    if (!file_) throw IoError("cannot write '" + path.string() + "'");
    row_strings(header);
  }

  template <typename... T>
  void row(const T&... cells) {
    std::vector<std::string> text{cell(cells)...};
    row_strings(text);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) file_ << ',';
      file_ << cells[k];
    }
    file_ << '\n';
    if (!file_) throw IoError("write failed on '" + path_.string() + "'");
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::ofstream file_;
  fs::path path_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

// Output file name; a path ending in ".csv" is taken as the file itself.
fs::path output_file(const std::string& out, const std::string& fallback) {
  fs::path p(out);
  if (p.extension() == ".csv") {
    if (p.has_parent_path()) ensure_dir(p.parent_path());
    return p;
  }
  ensure_dir(p);
  return p / fallback;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double l2_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Least-squares slope of log(err) against log(eps), skipping zero errors.
double loglog_slope(std::span<const double> eps, std::span<const double> err) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (err[k] > 0.0) {
      x.push_back(std::log(eps[k]));
      y.push_back(std::log(err[k]));
    }
  }
  if (x.size() < 2) return std::nan("");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

SolverReport solve_problem(const Problem& p, std::optional<double> eps_flag) {
  SolverConfig cfg = p.solver;
  if (!eps_flag && !p.eps && !p.schedule.empty()) {
    auto stages = solve_with_continuation(p.density, p.diracs, cfg, p.schedule);
    return std::move(stages.back());
  }
  const double eps = eps_flag ? *eps_flag : p.eps.value_or(cfg.eps);
  if (eps == 0.0) return solve_unregularized(p.density, p.diracs, cfg);
  cfg.eps = eps;
  return solve_regularized(p.density, p.diracs, cfg);
}

void require_converged(const SolverReport& rep) {
  if (!rep.converged()) {
    std::string msg = std::string("solver did not converge (") + to_string(rep.status) +
                      ", residual " + format_double(rep.residual) + ")";
    if (!rep.message.empty()) msg += ": " + rep.message;
    throw SolveError(msg);
  }
}

// solve ----------------------------------------------------------------------

struct SolveArgs {
  std::string problem;
  std::optional<double> eps;
  std::string out = "out";
};

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  const Problem p = load_problem(a.problem);
  const SolverReport rep = solve_problem(p, a.eps);
  const fs::path dir(a.out);
  ensure_dir(dir);

  const auto& y = p.diracs.y();
  const auto& alpha = p.diracs.alpha();
  const std::size_t n = y.size();
  const CellLayout cells = layout(p.density, p.diracs, rep.psi);
  const std::vector<double> g =
      rep.eps > 0.0 ? reg_masses(p.density, p.diracs, rep.psi, rep.eps) : cells.mass;

  {
    Csv csv(dir / "psi.csv", {"i", "y", "alpha", "psi"});
    for (std::size_t i = 0; i < n; ++i) csv.row(i, y[i], alpha[i], rep.psi[i]);
  }
  {
    Csv csv(dir / "cells.csv", {"i", "lag_lo", "lag_hi", "a", "b"});
    for (std::size_t i = 0; i < n; ++i) {
      csv.row(i, cells.lag_lo[i], cells.lag_hi[i], cells.a[i], cells.b[i]);
    }
  }
  {
    Csv csv(dir / "masses.csv", {"i", "alpha", "mass", "cell_mass"});
    for (std::size_t i = 0; i < n; ++i) csv.row(i, alpha[i], g[i], cells.mass[i]);
  }
  {
    Csv csv(dir / "history.csv", {"iteration", "residual", "step"});
    for (std::size_t k = 0; k < rep.residual_history.size(); ++k) {
      const double step = k < rep.step_sizes.size() ? rep.step_sizes[k] : 0.0;
      csv.row(k, rep.residual_history[k], step);
    }
  }

  std::ostringstream report;
  report << "status " << to_string(rep.status) << '\n'
         << "eps " << format_double(rep.eps) << '\n'
         << "iterations " << rep.iterations << '\n'
         << "residual " << format_double(rep.residual) << '\n'
         << "tolerance " << format_double(rep.tolerance) << '\n'
         << "diracs " << n << '\n';
  if (!rep.message.empty()) report << "message " << rep.message << '\n';
  {
    std::ofstream f(dir / "report.txt");
    if (!f) throw IoError("cannot write '" + (dir / "report.txt").string() + "'");
    f << report.str();
  }
  out << report.str();
  require_converged(rep);
  return kOk;
}

// convergence ----------------------------------------------------------------

struct ConvergenceArgs {
  std::string problem;
  double eps_from = 0.2;
  double eps_to = 1e-3;
  double factor = 0.5;
  std::optional<double> ref_eps;
  std::string out = "rate.csv";
};

int cmd_convergence(const ConvergenceArgs& a, std::ostream& out) {
  const Problem p = load_problem(a.problem);
  const double ref = a.ref_eps.value_or(a.eps_to / 10.0);
  if (!(a.eps_to > 0.0 && a.eps_from > a.eps_to && ref > 0.0 && ref < a.eps_to)) {
    throw CLI::ValidationError("need eps-from > eps-to > ref-eps > 0");
  }
  std::vector<double> schedule = eps_schedule(a.eps_from, a.eps_to, a.factor);
  schedule.push_back(ref);
  const auto stages = solve_with_continuation(p.density, p.diracs, p.solver, schedule);
  if (stages.size() != schedule.size()) require_converged(stages.back());
  require_converged(stages.back());

  const auto& psi_ref = stages.back().psi;
  std::vector<double> eps(schedule.begin(), schedule.end() - 1);
  std::vector<double> err;
  for (std::size_t k = 0; k < eps.size(); ++k) err.push_back(l2_diff(stages[k].psi, psi_ref));

  Csv csv(output_file(a.out, "rate.csv"), {"eps", "err", "slope"});
  for (std::size_t k = 0; k < eps.size(); ++k) {
    std::string local;
    if (k > 0 && err[k] > 0.0 && err[k - 1] > 0.0) {
      local = format_double(std::log(err[k] / err[k - 1]) / std::log(eps[k] / eps[k - 1]));
    }
    csv.row(eps[k], err[k], local);
  }
  out << "reference eps " << format_double(ref) << '\n'
      << "slope " << format_double(loglog_slope(eps, err)) << '\n';
  return kOk;
}

// diagnose -------------------------------------------------------------------

struct DiagnoseArgs {
  std::string problem;
  std::optional<double> eps;
  double delta = 1e-4;
  double ode_tol = 1e-2;
  std::string out;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const Problem p = load_problem(a.problem);
  SolverConfig cfg = p.solver;
  cfg.eps = a.eps ? *a.eps : p.eps.value_or(cfg.eps);
  if (!(cfg.eps > 0.0)) throw CLI::ValidationError("diagnose needs eps > 0");
  const SolverReport rep = solve_regularized(p.density, p.diracs, cfg);
  require_converged(rep);
  const Diagnostics& d = *rep.diagnostics;

  double smin = INFINITY;
  double smax = 0.0;
  for (double v : rep.psi) {
    smin = std::min(smin, std::sqrt(std::max(v, 0.0)));
    smax = std::max(smax, std::sqrt(std::max(v, 0.0)));
  }
  const OdeCheck ode = ode_residual(p.density, p.diracs, cfg, a.delta);

  struct Check {
    std::string name;
    double value;
    double bound;
    bool ok;
    bool guaranteed;
  };
  const bool g = d.guaranteed();
  const std::vector<Check> checks = {
      {"residual", rep.residual, rep.tolerance, rep.residual <= rep.tolerance, true},
      {"lambda_min", d.lambda_min, d.fiedler_bound, d.fiedler_ok, g},
      {"sqrt_psi_min", smin, d.r, d.psi_bounds_ok, g},
      {"sqrt_psi_max", smax, d.R, d.psi_bounds_ok, g},
      {"q_norm", d.q_norm, d.q_bound, d.q_ok, g},
      {"connected", d.connected ? 1.0 : 0.0, 1.0, d.connected, g},
      {"ode_residual", ode.residual, a.ode_tol * ode.reference,
       ode.solved && ode.residual <= a.ode_tol * ode.reference, true},
  };

  out << "eps " << format_double(cfg.eps) << "  eps0 " << format_double(d.eps0)
      << "  rho_min " << format_double(p.density.rho_min()) << '\n';
  if (!g) out << "bounds not guaranteed (needs eps < eps0 and rho_min > 0)\n";
  bool all = true;
  for (const auto& c : checks) {
    const char* status = !c.guaranteed ? "n/a" : (c.ok ? "PASS" : "FAIL");
    if (c.guaranteed && !c.ok) all = false;
    out << std::left << std::setw(14) << c.name << ' ' << std::setw(24)
        << format_double(c.value) << ' ' << std::setw(24) << format_double(c.bound)
        << ' ' << status << '\n';
  }
  if (!a.out.empty()) {
    Csv csv(output_file(a.out, "diagnostics.csv"), {"check", "value", "bound", "status"});
    for (const auto& c : checks) {
      csv.row(c.name, c.value, c.bound,
              std::string(!c.guaranteed ? "n/a" : (c.ok ? "PASS" : "FAIL")));
    }
  }
  return all ? kOk : kDiagnosticsFailure;
}

// dd-compare -----------------------------------------------------------------

struct DdArgs {
  std::string problem;
  std::vector<std::size_t> m_list{100, 1000, 10000};
  std::string out = "dd.csv";
};

int cmd_dd_compare(const DdArgs& a, std::ostream& out) {
  const Problem p = load_problem(a.problem);
  const auto t0 = std::chrono::steady_clock::now();
  const SolverReport rep = solve_unregularized(p.density, p.diracs, p.solver);
  require_converged(rep);
  const auto sd = barycenters(p.density, layout(p.density, p.diracs, rep.psi));
  const double sd_time = seconds_since(t0);
  for (const auto& b : sd) {
    if (!b) throw SolveError("semi-discrete solution has an empty cell");
  }

  Csv csv(output_file(a.out, "dd.csv"), {"m", "max_err", "rms_err"});
  out << "sd_seconds " << format_double(sd_time) << '\n';
  const std::size_t n = p.diracs.size();
  for (const std::size_t m : a.m_list) {
    if (m < n) throw CLI::ValidationError("each M must be at least the number of Diracs");
    const auto t1 = std::chrono::steady_clock::now();
    const auto sinks = discretize(p.density, m);
    const auto dd = dd_barycenters(p.diracs.y(), p.diracs.alpha(), p.density.total_mass(), sinks);
    const double dd_time = seconds_since(t1);
    double max_err = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::abs(dd.barycenter[i] - *sd[i]);
      max_err = std::max(max_err, e);
      sq += e * e;
    }
    csv.row(m, max_err, std::sqrt(sq / static_cast<double>(n)));
    out << "m " << m << " dd_seconds " << format_double(dd_time) << '\n';
  }
  return kOk;
}

// register -------------------------------------------------------------------

struct RegisterArgs {
  std::string source;
  std::string target;
  std::optional<std::string> reference;
  int iters = 100;
  std::size_t k = 32;
  std::uint64_t seed = 7;
  double mass_ratio = 0.99;
  double eps = 1e-2;
  unsigned threads = 0;
  std::string out = "register";
};

PointCloud load_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return read_points(in);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

TargetShape load_target(const std::string& path, int dim) {
  if (fs::path(path).extension() != ".off") return load_points(path);
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return read_off(in, dim);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

int cmd_register(const RegisterArgs& a, std::ostream& out) {
  const PointCloud source = load_points(a.source);
  const TargetShape target = load_target(a.target, source.dim);
  std::optional<PointCloud> reference;
  if (a.reference) {
    reference = load_points(*a.reference);
    if (reference->dim != source.dim || reference->size() != source.size()) {
      throw ParseError("reference must match the source point count and dimension");
    }
  }
  if (const auto* cloud = std::get_if<PointCloud>(&target); cloud && cloud->dim != source.dim) {
    throw ParseError("source and target dimensions differ");
  }

  RegisterConfig cfg;
  cfg.iterations = a.iters;
  cfg.directions = a.k;
  cfg.seed = a.seed;
  cfg.fist.mass_ratio = a.mass_ratio;
  cfg.fist.eps = a.eps;
  cfg.fist.threads = a.threads;
  const Registration reg = register_shapes(source, target, cfg, reference);

  const fs::path dir(a.out);
  ensure_dir(dir);
  const auto dim = static_cast<std::size_t>(source.dim);
  {
    std::vector<std::string> header{"iteration"};
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) header.push_back("r" + std::to_string(r) + std::to_string(c));
    }
    for (std::size_t c = 0; c < dim; ++c) header.push_back("t" + std::to_string(c));
    Csv csv(dir / "transform.csv", header);
    for (std::size_t k = 0; k < reg.trajectory.size(); ++k) {
      std::vector<std::string> row{std::to_string(k + 1)};
      for (double v : reg.trajectory[k].rotation) row.push_back(format_double(v));
      for (double v : reg.trajectory[k].translation) row.push_back(format_double(v));
      csv.row_strings(row);
    }
  }
  {
    Csv csv(dir / "rmse.csv", {"iteration", "rmse"});
    for (std::size_t k = 0; k < reg.rmse.size(); ++k) csv.row(k, reg.rmse[k]);
  }
  {
    std::ofstream f(dir / "registered.pts");
    if (!f) throw IoError("cannot write '" + (dir / "registered.pts").string() + "'");
    for (std::size_t i = 0; i < reg.registered.size(); ++i) {
      const auto pt = reg.registered.point(i);
      for (std::size_t c = 0; c < dim; ++c) f << (c ? " " : "") << format_double(pt[c]);
      f << '\n';
    }
  }
  out << "iterations " << reg.trajectory.size() << '\n'
      << "rmse_initial " << format_double(reg.rmse.front()) << '\n'
      << "rmse_final " << format_double(reg.rmse.back()) << '\n';
  return kOk;
}

std::vector<std::size_t> parse_m_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  for (std::string tok; std::getline(in, tok, ',');) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || v == 0) {
      throw CLI::ValidationError("--m-list", "expected positive integers, got '" + tok + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("--m-list", "empty list");
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-discrete partial optimal transport in 1D", "usdot"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve one problem and write potentials, cells and masses");
  s->add_option("problem", solve.problem, "Problem file")->required();
  s->add_option("--eps", solve.eps, "Regularization (0 selects the unregularized solver)")
      ->check(CLI::NonNegativeNumber);
  s->add_option("-o,--out", solve.out, "Output directory");

  ConvergenceArgs conv;
  auto* c = app.add_subcommand("convergence", "Error of psi^eps against a small-eps reference");
  c->add_option("problem", conv.problem, "Problem file")->required();
  c->add_option("--eps-from", conv.eps_from)->check(CLI::PositiveNumber);
  c->add_option("--eps-to", conv.eps_to)->check(CLI::PositiveNumber);
  c->add_option("--factor", conv.factor)->check(CLI::Range(0.0, 1.0));
  c->add_option("--ref-eps", conv.ref_eps, "Reference eps (default eps-to / 10)")
      ->check(CLI::PositiveNumber);
  c->add_option("-o,--out", conv.out, "CSV file or directory");

  DiagnoseArgs diag;
  auto* d = app.add_subcommand("diagnose", "Check the spectral and a priori bounds at psi^eps");
  d->add_option("problem", diag.problem, "Problem file")->required();
  d->add_option("--eps", diag.eps)->check(CLI::PositiveNumber);
  d->add_option("--delta", diag.delta, "Step of the eps finite difference")
      ->check(CLI::PositiveNumber);
  d->add_option("-o,--out", diag.out, "CSV file or directory");

  DdArgs dd;
  std::string m_list;
  auto* e = app.add_subcommand("dd-compare", "Discrete-discrete barycenters against semi-discrete ones");
  e->add_option("problem", dd.problem, "Problem file")->required();
  e->add_option("--m-list", m_list, "Comma separated sink counts");
  e->add_option("-o,--out", dd.out, "CSV file or directory");

  RegisterArgs reg;
  auto* r = app.add_subcommand("register", "Rigid registration of a point set to a shape");
  r->add_option("source", reg.source, "Source points")->required();
  r->add_option("target", reg.target, "Target points or OFF mesh")->required();
  r->add_option("--reference", reg.reference, "Ground-truth positions of the source points");
  r->add_option("--iters", reg.iters)->check(CLI::NonNegativeNumber);
  r->add_option("--k", reg.k, "Directions per iteration")->check(CLI::PositiveNumber);
  r->add_option("--seed", reg.seed);
  r->add_option("--mass-ratio", reg.mass_ratio, "Share of the target mass carried by the source")->check(CLI::Range(0.0, 1.0));
  r->add_option("--eps", reg.eps, "Regularization relative to the projected length")
      ->check(CLI::PositiveNumber);
  r->add_option("--threads", reg.threads, "Worker threads (0: USDOT_THREADS or all cores)");
  r->add_option("-o,--out", reg.out, "Output directory");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (!m_list.empty()) dd.m_list = parse_m_list(m_list);
    if (*s) return cmd_solve(solve, out);
    if (*c) return cmd_convergence(conv, out);
    if (*d) return cmd_diagnose(diag, out);
    if (*e) return cmd_dd_compare(dd, out);
    if (*r) return cmd_register(reg, out);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kParseError;
  } catch (const ParseError& ex) {
    err << "usdot: " << ex.what() << '\n';
    return kParseError;
  } catch (const IoError& ex) {
    err << "usdot: " << ex.what() << '\n';
    return kParseError;
  } catch (const SolveError& ex) {
    err << "usdot: " << ex.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& ex) {
    err << "usdot: " << ex.what() << '\n';
    return kSolverFailure;
  }
  return kParseError;
}

}  // namespace usdot::cli
