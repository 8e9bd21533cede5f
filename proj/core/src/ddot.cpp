#include "usdot/ddot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace usdot {

std::vector<double> discretize(const Density1D& density, std::size_t m) {
  if (m == 0) throw std::invalid_argument("discretize: M must be positive");
  std::vector<double> out(m);
  const double mass = density.total_mass();
  for (std::size_t k = 0; k < m; ++k) {
    const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    out[k] = density.quantile(p * mass);
  }
  return out;
}

AssignmentResult dd_partial_transport(std::span<const double> sources,
                                      std::span<const double> sinks) {
  const std::size_t n = sources.size();
  const std::size_t m = sinks.size();
  if (n > m) throw std::invalid_argument("dd_partial_transport: more sources than sinks");
  if (!std::is_sorted(sources.begin(), sources.end()) ||
      !std::is_sorted(sinks.begin(), sinks.end())) {
    throw std::invalid_argument("dd_partial_transport: inputs must be sorted");
  }
  AssignmentResult out;
  if (n == 0) return out;

  // Source i (1-based) can only land on sinks i .. i + width - 1.
  const std::size_t width = m - n + 1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> take(n * width, 0);
  std::vector<double> prev(m + 1, 0.0);  // cost[i-1][j]
  std::vector<double> cur(m + 1, kInf);
  for (std::size_t i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), kInf);
    for (std::size_t j = i; j < i + width; ++j) {
      const double skip = j > i ? cur[j - 1] : kInf;
      const double diff = sources[i - 1] - sinks[j - 1];
      const double match = prev[j - 1] + diff * diff;
      if (match <= skip) {
        cur[j] = match;
        take[(i - 1) * width + (j - i)] = 1;
      } else {
        cur[j] = skip;
      }
    }
    std::swap(prev, cur);
  }
  out.cost = prev[m];
  out.assignment.assign(n, 0);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0) {
    if (take[(i - 1) * width + (j - i)]) {
      out.assignment[i - 1] = j - 1;
      --i;
    }
    --j;
  }
  return out;
}

std::vector<std::size_t> replication_counts(std::span<const double> alpha,
                                            double total_mass, std::size_t m) {
  const std::size_t n = alpha.size();
  const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  const auto wanted = static_cast<std::size_t>(
      std::llround(total / total_mass * static_cast<double>(m)));
  std::vector<std::size_t> counts(n, 0);
  std::vector<double> remainder(n, 0.0);
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = alpha[i] / total_mass * static_cast<double>(m);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    used += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t k = 0; used < wanted && k < n; ++k, ++used) ++counts[order[k]];
  for (auto& c : counts) c = std::max<std::size_t>(c, 1);
  return counts;
}

DdBarycenters dd_barycenters(std::span<const double> y,
                             std::span<const double> alpha, double total_mass,
                             std::span<const double> sinks) {
  if (y.size() != alpha.size()) {
    throw std::invalid_argument("dd_barycenters: size mismatch");
  }
  DdBarycenters out;
  out.copies = replication_counts(alpha, total_mass, sinks.size());
  std::vector<double> sources;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sources.insert(sources.end(), out.copies[i], y[i]);
    owner.insert(owner.end(), out.copies[i], i);
  }
  const AssignmentResult match = dd_partial_transport(sources, sinks);
  out.cost = match.cost;
  out.barycenter.assign(y.size(), 0.0);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    out.barycenter[owner[k]] += sinks[match.assignment[k]];
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.barycenter[i] /= static_cast<double>(out.copies[i]);
  }
  return out;
}

}  // namespace usdot
