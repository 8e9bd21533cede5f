#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "usdot/cells.hpp"
#include "usdot/density.hpp"
#include "usdot/solver.hpp"

namespace usdot::cli {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Contents of a `usdot-problem v1` file.
///
///   usdot-problem v1
///   density uniform 0 1
///   dirac 0 0.5                      (repeatable)
///   random-diracs 15 -1 1 0.5        (n lo hi total weight, uses seed)
///   eps 0.1
///   schedule 0.2 0.1 0.05
///   tol 1e-10 | max-iter 200 | mass-floor 0.1 | continuation-factor 0.5
///   seed 7
///
/// '#' starts a comment; blank lines are ignored.
struct Problem {
  Density1D density;
  SortedDiracs diracs;
  std::optional<double> eps;
  std::vector<double> schedule;
  SolverConfig solver;
  std::uint64_t seed = 7;
};

/// Throws ParseError with the offending line number.
[[nodiscard]] Problem parse_problem(std::istream& in);
[[nodiscard]] Problem load_problem(const std::string& path);

/// n sorted positions drawn uniformly in [lo, hi) from mt19937_64(seed),
/// using the top 53 bits of each draw so the sequence is portable.
[[nodiscard]] std::vector<double> random_positions(std::size_t n, double lo,
                                                   double hi,
                                                   std::uint64_t seed);

}  // namespace usdot::cli
