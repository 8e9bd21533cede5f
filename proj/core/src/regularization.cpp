#include "usdot/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace usdot {
namespace {

void require_eps(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

double cell_kernel(const Density1D& density, const SortedDiracs& diracs,
                   std::span<const double> psi, double eps,
                   const CellLayout& cells, std::size_t i, KernelOrder order) {
  if (cells.lag_empty(i)) return 0.0;
  return density.integrate_kernel(
      {cells.lag_lo[i], cells.lag_hi[i]},
      {order, diracs.y()[i], psi[i], eps});
}

// Cells i < j share the boundary lag_hi[i] = lag_lo[j].
double neighbour_coupling(const Density1D& density, const SortedDiracs& diracs,
                          std::span<const double> psi, double eps,
                          const CellLayout& cells, std::size_t i,
                          std::size_t j) {
  const double z = cells.lag_hi[i];
  const double y = diracs.y()[i];
  const double t = psi[i] - (z - y) * (z - y);
  const double weight = std::min(t > 0.0 ? std::sqrt(t) / eps : 0.0, 1.0);
  if (weight == 0.0) return 0.0;
  return weight * density.value(z) / (2.0 * (diracs.y()[j] - y));
}

}  // namespace

double fstar(double t, int order) {
  switch (order) {
    case 0:
      if (t <= 0.0) return 0.0;
      if (t <= 1.0) return 2.0 / 3.0 * t * std::sqrt(t);
      return t - 1.0 / 3.0;
    case 1:
      if (t <= 0.0) return 0.0;
      return std::min(std::sqrt(t), 1.0);
    case 2:
      if (t > 0.0 && t < 1.0) return 0.5 / std::sqrt(t);
      return 0.0;
    default:
      throw std::invalid_argument("fstar: order must be 0, 1 or 2");
  }
}

RegParams RegParams::make(const Density1D& density, const SortedDiracs& diracs,
                          double eps) {
  require_eps(eps);
  RegParams p;
  p.eps = eps;
  p.r = diracs.alpha_min() / (2.0 * density.rho_max());
  p.eps0 = std::min(1.0, p.r);
  const double lo = std::min(density.support().lo, diracs.y().front());
  const double hi = std::max(density.support().hi, diracs.y().back());
  p.R = std::sqrt(1.0 + (hi - lo) * (hi - lo));
  return p;
}

RegState evaluate_regularized(const Density1D& density,
                              const SortedDiracs& diracs,
                              std::span<const double> psi, double eps) {
  require_eps(eps);
  RegState s;
  s.cells = layout(density, diracs, psi);
  const std::size_t n = diracs.size();
  s.G.assign(n, 0.0);
  double total = 0.0;
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.G[i] = cell_kernel(density, diracs, psi, eps, s.cells, i,
                         KernelOrder::reg1);
    cost += cell_kernel(density, diracs, psi, eps, s.cells, i,
                        KernelOrder::reg0);
    total += s.G[i];
    s.value += diracs.alpha()[i] * psi[i];
  }
  s.value -= cost;
  s.inactive = density.total_mass() - total;
  return s;
}

std::vector<double> reg_masses(const Density1D& density,
                               const SortedDiracs& diracs,
                               std::span<const double> psi, double eps) {
  require_eps(eps);
  const CellLayout cells = layout(density, diracs, psi);
  std::vector<double> G(diracs.size(), 0.0);
  for (std::size_t i = 0; i < G.size(); ++i) {
    G[i] = cell_kernel(density, diracs, psi, eps, cells, i, KernelOrder::reg1);
  }
  return G;
}

double reg_dual_value(const Density1D& density, const SortedDiracs& diracs,
                      std::span<const double> psi, double eps) {
  require_eps(eps);
  const CellLayout cells = layout(density, diracs, psi);
  double value = 0.0;
  for (std::size_t i = 0; i < diracs.size(); ++i) {
    value += diracs.alpha()[i] * psi[i] -
             cell_kernel(density, diracs, psi, eps, cells, i, KernelOrder::reg0);
  }
  return value;
}

double reg_coupling(const Density1D& density, const SortedDiracs& diracs,
                    std::span<const double> psi, double eps,
                    const CellLayout& cells, std::size_t i) {
  if (cells.lag_empty(i) || cells.lag_empty(i + 1)) return 0.0;
  return neighbour_coupling(density, diracs, psi, eps, cells, i, i + 1);
}

double reg_rim_weight(const Density1D& density, const SortedDiracs& diracs,
                      std::span<const double> psi, double eps,
                      const CellLayout& cells, std::size_t i) {
  return cell_kernel(density, diracs, psi, eps, cells, i, KernelOrder::reg2);
}

TridiagSym reg_hessian(const Density1D& density, const SortedDiracs& diracs,
                       std::span<const double> psi, double eps,
                       const CellLayout& cells) {
  require_eps(eps);
  const std::size_t n = diracs.size();
  TridiagSym h(n);
  for (std::size_t i = 0; i < n; ++i) {
    h.diag[i] = reg_rim_weight(density, diracs, psi, eps, cells, i);
  }
  // Couplings run between envelope neighbours. When an empty Laguerre cell
  // sits between them the entry falls outside the band and only its
  // diagonal share is kept.
  std::size_t prev = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (cells.lag_empty(i)) continue;
    if (prev < n) {
      const double c = neighbour_coupling(density, diracs, psi, eps, cells, prev, i);
      h.diag[prev] += c;
      h.diag[i] += c;
      if (i == prev + 1) h.off[prev] = -c;
    }
    prev = i;
  }
  return h;
}

TridiagSym reg_hessian(const Density1D& density, const SortedDiracs& diracs,
                       std::span<const double> psi, double eps) {
  return reg_hessian(density, diracs, psi, eps,
                     layout(density, diracs, psi));
}

std::vector<double> eps_derivative(const Density1D& density,
                                   const SortedDiracs& diracs,
                                   std::span<const double> psi, double eps) {
  require_eps(eps);
  const CellLayout cells = layout(density, diracs, psi);
  std::vector<double> q(diracs.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = cell_kernel(density, diracs, psi, eps, cells, i, KernelOrder::deps);
  }
  return q;
}

}  // namespace usdot
