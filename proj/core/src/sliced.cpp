#include "usdot/sliced.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace usdot {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void check_direction(std::span<const double> theta, int dim) {
  if (theta.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("project: direction has the wrong dimension");
  }
  if (std::abs(dot(theta, theta) - 1.0) > 1e-9) {
    throw std::invalid_argument("project: direction must be a unit vector");
  }
}

// Linear piece of a projected element: value v0 at x0, v1 at x1.
struct Ramp {
  double x0, x1, v0, v1;
};

// Area of a triangle or length of a segment in any dimension.
double element_measure(const SimplexSoup& soup, const std::vector<std::size_t>& e) {
  const auto d = static_cast<std::size_t>(soup.dim);
  auto vertex = [&](std::size_t k) { return soup.vertices.data() + e[k] * d; };
  std::array<double, 3> u{};
  std::array<double, 3> v{};
  for (std::size_t c = 0; c < d; ++c) u[c] = vertex(1)[c] - vertex(0)[c];
  if (e.size() == 2) return std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  for (std::size_t c = 0; c < d; ++c) v[c] = vertex(2)[c] - vertex(0)[c];
  const double cx = u[1] * v[2] - u[2] * v[1];
  const double cy = u[2] * v[0] - u[0] * v[2];
  const double cz = u[0] * v[1] - u[1] * v[0];
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

void add_box(std::vector<Ramp>& ramps, double center, double width, double mass) {
  const double h = mass / width;
  ramps.push_back({center - 0.5 * width, center + 0.5 * width, h, h});
}

Density1D assemble(const std::vector<Ramp>& ramps, double floor) {
  std::vector<double> xs;
  xs.reserve(2 * ramps.size());
  for (const Ramp& r : ramps) {
    xs.push_back(r.x0);
    xs.push_back(r.x1);
  }
  std::sort(xs.begin(), xs.end());
  const double span = xs.back() - xs.front();
  const double merge = 1e-12 * std::max(1.0, std::abs(xs.front()) + std::abs(xs.back()));
  std::vector<double> breaks;
  for (double x : xs) {
    if (breaks.empty() || x - breaks.back() > merge) breaks.push_back(x);
  }
  if (breaks.size() < 2 || !(span > 0.0)) {
    throw std::invalid_argument(
        "project: projection collapses to a point; set a positive thickness");
  }
  auto index_of = [&](double x) {
    auto it = std::lower_bound(breaks.begin(), breaks.end(), x - merge);
    return static_cast<std::size_t>(std::distance(breaks.begin(), it));
  };

  const std::size_t m = breaks.size();
  std::vector<double> right(m, 0.0);  // value just right of breaks[k]
  std::vector<double> left(m, 0.0);   // value just left of breaks[k]
  for (const Ramp& r : ramps) {
    const std::size_t k0 = index_of(r.x0);
    const std::size_t k1 = index_of(r.x1);
    const double slope = r.x1 > r.x0 ? (r.v1 - r.v0) / (r.x1 - r.x0) : 0.0;
    auto at = [&](std::size_t k) {
      if (k == k0) return r.v0;
      if (k == k1) return r.v1;
      return r.v0 + slope * (breaks[k] - r.x0);
    };
    for (std::size_t k = k0; k < k1; ++k) {
      right[k] += at(k);
      left[k + 1] += at(k + 1);
    }
  }

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    total += 0.5 * (right[k] + left[k + 1]) * (breaks[k + 1] - breaks[k]);
  }
  const double lift = floor > 0.0 ? floor * total / span : 0.0;
  std::vector<DensityPiece> pieces;
  pieces.reserve(m - 1);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    DensityPiece p;
    p.x0 = breaks[k];
    p.x1 = breaks[k + 1];
    p.v0 = std::max(0.0, right[k]) + lift;
    p.v1 = std::max(0.0, left[k + 1]) + lift;
    p.kind = p.v0 == p.v1 ? PieceKind::constant : PieceKind::affine;
    pieces.push_back(p);
  }
  return Density1D::from_pieces(std::move(pieces), 1.0, !(lift > 0.0));
}

Density1D project_points(const PointCloud& cloud, std::span<const double> theta,
                         const ProjectionOptions& opt) {
  const std::size_t n = cloud.size();
  if (n == 0) throw std::invalid_argument("project: empty point set");
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = dot(cloud.point(i), theta);
  const double mass = 1.0 / static_cast<double>(n);
  std::vector<Ramp> ramps;
  if (opt.thickness > 0.0) {
    for (double p : proj) add_box(ramps, p, opt.thickness, mass);
    return assemble(ramps, opt.floor);
  }
  const auto [lo_it, hi_it] = std::minmax_element(proj.begin(), proj.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi)))) {
    throw std::invalid_argument(
        "project: projection collapses to a point; set a positive thickness");
  }
  const std::size_t bins = std::max<std::size_t>(opt.bins, 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> count(bins, 0.0);
  for (double p : proj) {
    auto b = static_cast<std::size_t>((p - lo) / width);
    count[std::min(b, bins - 1)] += mass;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    const double x0 = lo + width * static_cast<double>(b);
    const double x1 = b + 1 == bins ? hi : x0 + width;
    const double h = count[b] / (x1 - x0);
    ramps.push_back({x0, x1, h, h});
  }
  return assemble(ramps, opt.floor);
}

Density1D project_soup(const SimplexSoup& soup, std::span<const double> theta,
                       const ProjectionOptions& opt) {
  soup.validate();
  const auto d = static_cast<std::size_t>(soup.dim);
  std::vector<double> proj(soup.vertex_count());
  for (std::size_t v = 0; v < proj.size(); ++v) {
    proj[v] = dot({soup.vertices.data() + v * d, d}, theta);
  }
  double scale = 0.0;
  for (double p : proj) scale = std::max(scale, std::abs(p));
  const double tiny = 1e-12 * std::max(1.0, scale);

  std::vector<Ramp> ramps;
  for (const auto& e : soup.elements) {
    const double mass = element_measure(soup, e);
    if (!(mass > 0.0)) continue;
    std::vector<double> p;
    for (std::size_t v : e) p.push_back(proj[v]);
    std::sort(p.begin(), p.end());
    const double w = p.back() - p.front();
    if (!(w > tiny)) {
      if (!(opt.thickness > 0.0)) {
        throw std::invalid_argument(
            "project: an element projects to a point; set a positive thickness");
      }
      add_box(ramps, 0.5 * (p.front() + p.back()), opt.thickness, mass);
      continue;
    }
    if (e.size() == 2) {
      add_box(ramps, 0.5 * (p[0] + p[1]), w, mass);
      continue;
    }
    // The chord length of a triangle is piecewise linear in the projected
    // coordinate, peaking at the middle vertex.
    const double peak = 2.0 * mass / w;
    if (p[1] - p[0] > tiny) ramps.push_back({p[0], p[1], 0.0, peak});
    if (p[2] - p[1] > tiny) ramps.push_back({p[1], p[2], peak, 0.0});
  }
  if (ramps.empty()) throw std::invalid_argument("project: shape has no mass");
  return assemble(ramps, opt.floor);
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("USDOT_THREADS")) {
      n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

std::vector<std::vector<double>> sample_with(int dim, std::size_t k,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out;
  out.reserve(k);
  while (out.size() < k) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& c : v) c = normal(rng);
    const double len = std::sqrt(dot(v, v));
    if (len < 1e-12) continue;
    for (double& c : v) c /= len;
    out.push_back(std::move(v));
  }
  return out;
}

struct DirectionResult {
  bool ok = false;
  int iterations = -1;
  std::vector<double> delta;  // per source point
};

DirectionResult solve_direction(const PointCloud& source, const TargetShape& target,
                                std::span<const double> theta, const FistConfig& config) {
  DirectionResult out;
  try {
    const Density1D dens = project(target, theta, config.projection);
    const ProjectedSources src = project(source, theta);
    std::vector<double> alpha(src.positions.size());
    const double per_point = config.mass_ratio / static_cast<double>(source.size());
    for (std::size_t g = 0; g < alpha.size(); ++g) {
      alpha[g] = per_point * static_cast<double>(src.count[g]);
    }
    const SortedDiracs diracs(src.positions, alpha, dens.total_mass());

    SolverConfig cfg = config.solver;
    cfg.eps = config.eps * dens.support().length();
    SolverReport rep = solve_regularized(dens, diracs, cfg);
    int iterations = rep.iterations;
    if (!rep.converged()) {
      const std::vector<double> schedule =
          eps_schedule(0.25 * dens.support().length(), cfg.eps, cfg.continuation_factor);
      const auto stages = solve_with_continuation(dens, diracs, cfg, schedule);
      for (const auto& s : stages) iterations += s.iterations;
      if (stages.empty() || !stages.back().converged()) return out;
      rep = stages.back();
    }
    const auto bary = barycenters(dens, layout(dens, diracs, rep.psi));
    out.delta.assign(source.size(), 0.0);
    for (std::size_t i = 0; i < source.size(); ++i) {
      const std::size_t g = src.owner[i];
      if (bary[g]) out.delta[i] = *bary[g] - src.positions[g];
    }
    out.ok = true;
    out.iterations = iterations;
  } catch (const std::exception&) {
    out.ok = false;
  }
  return out;
}

double nearest_rmse(const PointCloud& cloud, const std::vector<double>& pts, int dim) {
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t m = pts.size() / d;
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = p[c] - pts[j * d + c];
        s += diff * diff;
      }
      best = std::min(best, s);
    }
    sum += best;
  }
  return std::sqrt(sum / static_cast<double>(cloud.size()));
}

std::vector<std::string> content_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& line) {
  std::istringstream ss(line);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::runtime_error("not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

PointCloud::PointCloud(int d, std::vector<double> c) : dim(d), coords(std::move(c)) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("point cloud: dim must be 2 or 3");
  if (coords.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("point cloud: coordinate count not a multiple of dim");
  }
  for (double v : coords) {
    if (!std::isfinite(v)) throw std::invalid_argument("point cloud: non-finite coordinate");
  }
}

double PointCloud::diameter() const {
  if (coords.empty()) return 0.0;
  const auto d = static_cast<std::size_t>(dim);
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double lo = coords[c];
    double hi = coords[c];
    for (std::size_t i = 0; i < size(); ++i) {
      lo = std::min(lo, coords[i * d + c]);
      hi = std::max(hi, coords[i * d + c]);
    }
    s += (hi - lo) * (hi - lo);
  }
  return std::sqrt(s);
}

void SimplexSoup::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("soup: dim must be 2 or 3");
  if (vertices.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("soup: coordinate count not a multiple of dim");
  }
  if (elements.empty()) throw std::invalid_argument("soup: no elements");
  const std::size_t k = elements.front().size();
  if (k != 2 && k != 3) throw std::invalid_argument("soup: elements must be segments or triangles");
  for (const auto& e : elements) {
    if (e.size() != k) throw std::invalid_argument("soup: mixed element sizes");
    for (std::size_t v : e) {
      if (v >= vertex_count()) throw std::invalid_argument("soup: vertex index out of range");
    }
  }
}

Density1D project(const TargetShape& shape, std::span<const double> theta,
                  const ProjectionOptions& options) {
  return std::visit(
      [&](const auto& s) -> Density1D {
        check_direction(theta, s.dim);
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PointCloud>) {
          return project_points(s, theta, options);
        } else {
          return project_soup(s, theta, options);
        }
      },
      shape);
}

ProjectedSources project(const PointCloud& cloud, std::span<const double> theta) {
  check_direction(theta, cloud.dim);
  const std::size_t n = cloud.size();
  if (n == 0) throw std::invalid_argument("project: empty point set");
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = dot(cloud.point(i), theta);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });

  ProjectedSources out;
  out.owner.assign(n, 0);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = proj[order[k]];
    const double tol = 1e-12 * std::max(1.0, std::abs(p));
    if (out.positions.empty() || p - proj[order[k - 1]] > tol) {
      if (!out.positions.empty()) out.positions.back() = sum / static_cast<double>(out.count.back());
      out.positions.push_back(p);
      out.count.push_back(0);
      sum = 0.0;
    }
    sum += p;
    ++out.count.back();
    out.owner[order[k]] = out.positions.size() - 1;
  }
  out.positions.back() = sum / static_cast<double>(out.count.back());
  return out;
}

RigidTransform RigidTransform::identity(int dim) {
  RigidTransform t;
  t.dim = dim;
  const auto d = static_cast<std::size_t>(dim);
  t.rotation.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) t.rotation[i * d + i] = 1.0;
  t.translation.assign(d, 0.0);
  return t;
}

std::vector<double> RigidTransform::apply(std::span<const double> p) const {
  const auto d = static_cast<std::size_t>(dim);
  std::vector<double> out(translation);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r] += rotation[r * d + c] * p[c];
  }
  return out;
}

PointCloud RigidTransform::apply(const PointCloud& cloud) const {
  std::vector<double> coords;
  coords.reserve(cloud.coords.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto q = apply(cloud.point(i));
    coords.insert(coords.end(), q.begin(), q.end());
  }
  return PointCloud(cloud.dim, std::move(coords));
}

RigidTransform RigidTransform::after(const RigidTransform& first) const {
  const auto d = static_cast<std::size_t>(dim);
  RigidTransform out = identity(dim);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += rotation[r * d + k] * first.rotation[k * d + c];
      out.rotation[r * d + c] = s;
    }
  }
  out.translation = apply(first.translation);
  return out;
}

RigidTransform procrustes(const PointCloud& from, const PointCloud& to) {
  if (from.dim != to.dim || from.size() != to.size() || from.size() == 0) {
    throw std::invalid_argument("procrustes: point sets must match in size and dimension");
  }
  const int d = from.dim;
  const auto n = static_cast<Eigen::Index>(from.size());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      p(from.coords.data(), n, d);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      q(to.coords.data(), n, d);
  const Eigen::RowVectorXd pc = p.colwise().mean();
  const Eigen::RowVectorXd qc = q.colwise().mean();
  const Eigen::MatrixXd cov = (p.rowwise() - pc).transpose() * (q.rowwise() - qc);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(d);
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) sign(d - 1) = -1.0;
  const Eigen::MatrixXd r = svd.matrixV() * sign.asDiagonal() * svd.matrixU().transpose();
  const Eigen::VectorXd t = qc.transpose() - r * pc.transpose();

  RigidTransform out = RigidTransform::identity(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out.rotation[static_cast<std::size_t>(i * d + j)] = r(i, j);
    out.translation[static_cast<std::size_t>(i)] = t(i);
  }
  return out;
}

FistStep fist_step(const PointCloud& source, const TargetShape& target,
                   std::span<const std::vector<double>> directions,
                   const FistConfig& config) {
  if (directions.size() < static_cast<std::size_t>(source.dim)) {
    throw std::invalid_argument("fist_step: need at least dim directions");
  }
  if (!(config.mass_ratio > 0.0 && config.mass_ratio < 1.0)) {
    throw std::invalid_argument("fist_step: mass_ratio must lie in (0, 1)");
  }
  if (!(config.eps > 0.0)) throw std::invalid_argument("fist_step: eps must be positive");

  std::vector<DirectionResult> results(directions.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < directions.size(); k = next++) {
      results[k] = solve_direction(source, target, directions[k], config);
    }
  };
  const unsigned workers = worker_count(config.threads, directions.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  FistStep out;
  const auto d = static_cast<std::size_t>(source.dim);
  out.displacements.assign(source.size() * d, 0.0);
  for (std::size_t k = 0; k < directions.size(); ++k) {
    out.newton_iterations.push_back(results[k].iterations);
    if (!results[k].ok) {
      ++out.directions_failed;
      continue;
    }
    ++out.directions_used;
    for (std::size_t i = 0; i < source.size(); ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        out.displacements[i * d + c] += results[k].delta[i] * directions[k][c];
      }
    }
  }
  if (out.directions_used == 0) throw std::runtime_error("fist_step: every direction failed");
  const double factor = static_cast<double>(d) / static_cast<double>(out.directions_used);
  for (double& v : out.displacements) v *= factor;

  std::vector<double> moved(source.coords);
  for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += out.displacements[k];
  out.transform = procrustes(source, PointCloud(source.dim, std::move(moved)));
  return out;
}

std::vector<std::vector<double>> sample_directions(int dim, std::size_t k,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_with(dim, k, rng);
}

double rmse(const PointCloud& a, const PointCloud& b) {
  if (a.dim != b.dim || a.size() != b.size()) {
    throw std::invalid_argument("rmse: point sets must match in size and dimension");
  }
  if (a.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.coords.size(); ++k) {
    const double diff = a.coords[k] - b.coords[k];
    s += diff * diff;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

Registration register_shapes(const PointCloud& source, const TargetShape& target,
                             const RegisterConfig& config,
                             const std::optional<PointCloud>& reference) {
  if (config.iterations < 0) throw std::invalid_argument("register: negative iteration count");
  const std::vector<double>& target_points = std::visit(
      [](const auto& s) -> const std::vector<double>& {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PointCloud>) {
          return s.coords;
        } else {
          return s.vertices;
        }
      },
      target);
  auto error = [&](const PointCloud& cur) {
    return reference ? rmse(cur, *reference) : nearest_rmse(cur, target_points, cur.dim);
  };

  std::mt19937_64 rng(config.seed);
  Registration out;
  PointCloud current = source;
  RigidTransform total = RigidTransform::identity(source.dim);
  for (int it = 0; it < config.iterations; ++it) {
    out.rmse.push_back(error(current));
    const auto dirs = sample_with(source.dim, config.directions, rng);
    const FistStep step = fist_step(current, target, dirs, config.fist);
    current = step.transform.apply(current);
    total = step.transform.after(total);
    out.trajectory.push_back(total);
  }
  out.rmse.push_back(error(current));
  out.registered = std::move(current);
  return out;
}

PointCloud read_points(std::istream& in) {
  std::vector<double> coords;
  int dim = 0;
  std::size_t lineno = 0;
  for (const std::string& line : content_lines(in)) {
    ++lineno;
    std::vector<double> v;
    try {
      v = parse_numbers(line);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("points: point " + std::to_string(lineno) + ": " + e.what());
    }
    const int cols = static_cast<int>(v.size());
    if (dim == 0) dim = cols;
    if (cols != dim || (dim != 2 && dim != 3)) {
      throw std::runtime_error("points: point " + std::to_string(lineno) +
                               " has " + std::to_string(cols) + " coordinates");
    }
    coords.insert(coords.end(), v.begin(), v.end());
  }
  if (coords.empty()) throw std::runtime_error("points: no points");
  return PointCloud(dim, std::move(coords));
}

SimplexSoup read_off(std::istream& in, int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("off: dim must be 2 or 3");
  const std::vector<std::string> lines = content_lines(in);
  std::size_t k = 0;
  auto next_line = [&]() -> const std::string& {
    if (k >= lines.size()) throw std::runtime_error("off: unexpected end of file");
    return lines[k++];
  };
  std::string header = next_line();
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "OFF") throw std::runtime_error("off: missing OFF header");
  std::string rest;
  std::getline(hs, rest);
  std::vector<double> counts = parse_numbers(rest);
  if (counts.empty()) counts = parse_numbers(next_line());
  if (counts.size() < 2) throw std::runtime_error("off: bad count line");
  const auto nv = static_cast<std::size_t>(counts[0]);
  const auto nf = static_cast<std::size_t>(counts[1]);

  SimplexSoup soup;
  soup.dim = dim;
  for (std::size_t v = 0; v < nv; ++v) {
    const std::vector<double> xyz = parse_numbers(next_line());
    if (xyz.size() < 3) throw std::runtime_error("off: vertex needs 3 coordinates");
    soup.vertices.insert(soup.vertices.end(), xyz.begin(), xyz.begin() + dim);
  }
  for (std::size_t f = 0; f < nf; ++f) {
    const std::vector<double> face = parse_numbers(next_line());
    if (face.empty()) throw std::runtime_error("off: empty face");
    const auto m = static_cast<std::size_t>(face[0]);
    if (m < 2 || face.size() < m + 1) throw std::runtime_error("off: bad face");
    std::vector<std::size_t> idx(m);
    for (std::size_t j = 0; j < m; ++j) idx[j] = static_cast<std::size_t>(face[j + 1]);
    if (m == 2) {
      soup.elements.push_back(idx);
    } else {
      for (std::size_t j = 1; j + 1 < m; ++j) soup.elements.push_back({idx[0], idx[j], idx[j + 1]});
    }
  }
  soup.validate();
  return soup;
}

}  // namespace usdot
