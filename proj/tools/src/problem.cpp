#include "usdot_cli/problem.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>

namespace usdot::cli {
namespace {

std::string trim(std::string s) {
  if (const auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& token, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    fail(line, "not a number: '" + token + "'");
  }
  if (used != token.size()) fail(line, "not a number: '" + token + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& token, int line) {
  std::uint64_t v = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(line, "not a nonnegative integer: '" + token + "'");
  }
  return v;
}

std::vector<std::string> words(const std::string& rest) {
  std::istringstream in(rest);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct RandomBlock {
  std::size_t n;
  double lo;
  double hi;
  double total;
  int line;
};

}  // namespace

std::vector<double> random_positions(std::size_t n, double lo, double hi,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = lo + (hi - lo) * u;
  }
  std::sort(out.begin(), out.end());
  return out;
}

Problem parse_problem(std::istream& in) {
  std::string raw;
  int line = 0;
  bool header = false;
  std::optional<Density1D> density;
  std::vector<std::pair<double, double>> diracs;
  std::vector<RandomBlock> random;
  std::optional<double> eps;
  std::vector<double> schedule;
  SolverConfig solver;
  std::uint64_t seed = 7;

  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty()) continue;
    if (!header) {
      if (words(text) != std::vector<std::string>{"usdot-problem", "v1"}) {
        fail(line, "expected header 'usdot-problem v1'");
      }
      header = true;
      continue;
    }
    const auto space = text.find_first_of(" \t");
    const std::string key = text.substr(0, space);
    const std::string rest = space == std::string::npos ? "" : text.substr(space + 1);
    const auto args = words(rest);
    auto want = [&](std::size_t n) {
      if (args.size() != n) {
        fail(line, "'" + key + "' takes " + std::to_string(n) + " value(s)");
      }
    };

    if (key == "density") {
      if (density) fail(line, "density given twice");
      try {
        density = Density1D::parse(rest);
      } catch (const std::exception& e) {
        fail(line, e.what());
      }
    } else if (key == "dirac") {
      want(2);
      diracs.emplace_back(to_double(args[0], line), to_double(args[1], line));
    } else if (key == "random-diracs") {
      want(4);
      const auto n = to_unsigned(args[0], line);
      if (n == 0) fail(line, "random-diracs needs at least one Dirac");
      random.push_back({static_cast<std::size_t>(n), to_double(args[1], line),
                        to_double(args[2], line), to_double(args[3], line), line});
    } else if (key == "eps") {
      want(1);
      eps = to_double(args[0], line);
      if (!(*eps >= 0.0)) fail(line, "eps must be nonnegative");
    } else if (key == "schedule") {
      if (args.empty()) fail(line, "schedule needs at least one value");
      for (const auto& a : args) schedule.push_back(to_double(a, line));
      for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0) || (k > 0 && !(schedule[k] < schedule[k - 1]))) {
          fail(line, "schedule must be positive and strictly decreasing");
        }
      }
    } else if (key == "tol") {
      want(1);
      solver.tol = to_double(args[0], line);
    } else if (key == "max-iter") {
      want(1);
      solver.max_iter = static_cast<int>(to_unsigned(args[0], line));
    } else if (key == "mass-floor") {
      want(1);
      solver.mass_floor = to_double(args[0], line);
    } else if (key == "continuation-factor") {
      want(1);
      solver.continuation_factor = to_double(args[0], line);
    } else if (key == "seed") {
      want(1);
      seed = to_unsigned(args[0], line);
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }

  if (!header) throw ParseError("empty problem file");
  if (!density) throw ParseError("missing 'density' line");
  if (!diracs.empty() && !random.empty()) {
    throw ParseError("'dirac' and 'random-diracs' cannot be mixed");
  }
  if (random.size() > 1) {
    fail(random[1].line, "random-diracs given twice");
  }
  if (diracs.empty() && random.empty()) throw ParseError("no Diracs given");

  std::vector<double> y;
  std::vector<double> alpha;
  if (!random.empty()) {
    const auto& r = random.front();
    if (!(r.hi > r.lo)) fail(r.line, "random-diracs needs lo < hi");
    if (!(r.total > 0.0)) fail(r.line, "random-diracs needs a positive total");
    y = random_positions(r.n, r.lo, r.hi, seed);
    alpha.assign(r.n, r.total / static_cast<double>(r.n));
  } else {
    std::sort(diracs.begin(), diracs.end());
    for (const auto& [pos, w] : diracs) {
      y.push_back(pos);
      alpha.push_back(w);
    }
  }

  try {
    SortedDiracs mu(std::move(y), std::move(alpha), density->total_mass());
    solver.validate();
    return Problem{*density, std::move(mu), eps, std::move(schedule), solver, seed};
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return parse_problem(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace usdot::cli
