#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "usdot/density.hpp"

namespace usdot {

/// Optimal injective monotone matching of sources into sinks. Indices are
/// 0-based: assignment[i] is the sink matched to source i.
struct AssignmentResult {
  std::vector<std::size_t> assignment;
  double cost = 0.0;
};

/// Quantile points x_k = F^{-1}((k + 1/2) / M) for k = 0..M-1, each standing
/// for a mass total_mass / M.
[[nodiscard]] std::vector<double> discretize(const Density1D& density,
                                             std::size_t m);

/// Minimizes sum (x_i - t_sigma(i))^2 over strictly increasing injections
/// sigma by dynamic programming over the band j - i in [0, M - N].
/// Both inputs must be sorted; throws std::invalid_argument if N > M.
[[nodiscard]] AssignmentResult dd_partial_transport(
    std::span<const double> sources, std::span<const double> sinks);

/// Number of copies of each Dirac when its weight is spread over sinks of
/// mass total_mass / M: largest-remainder rounding of alpha_i M / total_mass
/// with at least one copy each.
[[nodiscard]] std::vector<std::size_t> replication_counts(
    std::span<const double> alpha, double total_mass, std::size_t m);

struct DdBarycenters {
  std::vector<double> barycenter;   // mean of the sinks matched to each Dirac
  std::vector<std::size_t> copies;  // sinks matched to each Dirac
  double cost = 0.0;
};

/// Discrete counterpart of the cell barycenters: each Dirac is repeated
/// according to replication_counts and the copies are matched to the sinks.
[[nodiscard]] DdBarycenters dd_barycenters(std::span<const double> y,
                                           std::span<const double> alpha,
                                           double total_mass,
                                           std::span<const double> sinks);

}  // namespace usdot
