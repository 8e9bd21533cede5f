#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "usdot_cli/cli.hpp"
#include "usdot_cli/problem.hpp"

namespace fs = std::filesystem;
using namespace usdot;

namespace {

const fs::path kData = USDOT_TEST_DATA_DIR;
const fs::path kGolden = USDOT_TEST_GOLDEN_DIR;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "usdot");
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const std::string& name) { return (kData / name).string(); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "usdot_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file " << p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> fields(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\n' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool as_number(const std::string& s, double& v) {
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Numbers agree to 1e-9 relative, everything else verbatim. Setting
// USDOT_UPDATE_GOLDEN rewrites the golden copy instead.
void check_golden(const fs::path& produced, const std::string& golden_name) {
  const fs::path golden = kGolden / golden_name;
  const std::string got = slurp(produced);
  if (std::getenv("USDOT_UPDATE_GOLDEN") != nullptr) {
    fs::create_directories(golden.parent_path());
    std::ofstream(golden, std::ios::binary) << got;
    return;
  }
  const auto a = fields(got);
  const auto b = fields(slurp(golden));
  CAPTURE(golden_name);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    double x = 0.0;
    double y = 0.0;
    if (as_number(a[k], x) && as_number(b[k], y) && std::isfinite(y)) {
      CHECK_MESSAGE(std::abs(x - y) <= 1e-9 * std::max(std::abs(y), 1e-3),
                    "field " << k << ": " << a[k] << " vs " << b[k]);
    } else {
      CHECK(a[k] == b[k]);
    }
  }
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(row);
  }
  return rows;
}

void same_bytes(const fs::path& a, const fs::path& b) {
  CAPTURE(a.string());
  CHECK(slurp(a) == slurp(b));
}

}  // namespace

TEST_CASE("solve on the single Dirac instance") {
  const auto dir = scratch("solve_a");
  const Run r = run({"solve", data("instance_a.problem"), "-o", dir.string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("status converged") != std::string::npos);

  const auto rows = csv_rows(dir / "psi.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"i", "y", "alpha", "psi"});
  const double psi = std::stod(rows[1][3]);
  const double oracle = oracle::bisect(
      [](double p) { return oracle::instance_a_mass(p, 0.1); }, 0.5, 0.01 * (1 + 1e-12), 1.0);
  CHECK(std::abs(psi - oracle) <= 1e-9);
  CHECK(std::abs(psi - 0.2533423) <= 1e-7);

  for (const char* f : {"psi.csv", "cells.csv", "masses.csv", "history.csv", "report.txt"}) {
    check_golden(dir / f, std::string("solve_a/") + f);
  }
}

TEST_CASE("solve variants") {
  SUBCASE("eps on the command line overrides the file") {
    const auto dir = scratch("solve_a_eps");
    REQUIRE(run({"solve", data("instance_a.problem"), "--eps", "0.2", "-o", dir.string()}).code ==
            cli::kOk);
    const double psi = std::stod(csv_rows(dir / "psi.csv")[1][3]);
    const double oracle = oracle::bisect(
        [](double p) { return oracle::instance_a_mass(p, 0.2); }, 0.5, 0.04 * (1 + 1e-12), 1.0);
    CHECK(std::abs(psi - oracle) <= 1e-9);
  }
  SUBCASE("eps 0 selects the unregularized solver") {
    const auto dir = scratch("solve_a_exact");
    REQUIRE(run({"solve", data("instance_a.problem"), "--eps", "0", "-o", dir.string()}).code ==
            cli::kOk);
    CHECK(std::stod(csv_rows(dir / "psi.csv")[1][3]) == doctest::Approx(0.25).epsilon(1e-12));
    check_golden(dir / "psi.csv", "solve_a_exact/psi.csv");
  }
  SUBCASE("a schedule runs continuation") {
    const auto dir = scratch("solve_pair");
    const Run r = run({"solve", data("pair_schedule.problem"), "-o", dir.string()});
    REQUIRE(r.code == cli::kOk);
    check_golden(dir / "psi.csv", "solve_pair/psi.csv");
    check_golden(dir / "masses.csv", "solve_pair/masses.csv");
  }
  SUBCASE("truncated gaussian with seeded Diracs") {
    const auto dir = scratch("solve_gauss");
    REQUIRE(run({"solve", data("gauss15.problem"), "-o", dir.string()}).code == cli::kOk);
    for (const char* f : {"psi.csv", "cells.csv", "masses.csv"}) {
      check_golden(dir / f, std::string("solve_gauss/") + f);
    }
  }
}

TEST_CASE("convergence on the single Dirac instance") {
  const auto dir = scratch("convergence");
  const Run r = run({"convergence", data("instance_a.problem"), "--eps-from", "0.2", "--eps-to",
                     "1e-3", "--factor", "0.5", "-o", (dir / "rate.csv").string()});
  REQUIRE(r.code == cli::kOk);
  const auto rows = csv_rows(dir / "rate.csv");
  REQUIRE(rows.size() > 3);
  CHECK(rows[0] == std::vector<std::string>{"eps", "err", "slope"});
  CHECK(rows[1][2].empty());
  for (std::size_t k = 2; k < rows.size(); ++k) {
    const double slope = std::stod(rows[k][2]);
    CHECK(slope >= 1.9);
    CHECK(slope <= 2.1);
  }
  const auto at = r.out.find("slope ");
  REQUIRE(at != std::string::npos);
  const double fit = std::stod(r.out.substr(at + 6));
  CHECK(fit >= 1.9);
  CHECK(fit <= 2.1);
  check_golden(dir / "rate.csv", "convergence/rate.csv");
}

TEST_CASE("diagnose") {
  SUBCASE("all checks pass on the single Dirac instance") {
    const auto dir = scratch("diagnose");
    const Run r = run({"diagnose", data("instance_a.problem"), "-o", dir.string()});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("FAIL") == std::string::npos);
    const auto rows = csv_rows(dir / "diagnostics.csv");
    REQUIRE(rows.size() > 1);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].back() == "PASS");
    check_golden(dir / "diagnostics.csv", "diagnose/diagnostics.csv");
  }
  SUBCASE("a loose solve fails the ODE check") {
    const auto dir = scratch("diagnose_loose");
    const Run r = run({"diagnose", data("loose_tol.problem"), "-o", dir.string()});
    CHECK(r.code == cli::kDiagnosticsFailure);
    CHECK(r.out.find("FAIL") != std::string::npos);
  }
}

TEST_CASE("dd-compare") {
  const auto dir = scratch("dd");
  const Run r = run({"dd-compare", data("hat_dd.problem"), "--m-list", "100,1000,10000", "-o",
                     (dir / "dd.csv").string()});
  REQUIRE(r.code == cli::kOk);
  const auto rows = csv_rows(dir / "dd.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"m", "max_err", "rms_err"});
  for (std::size_t k = 2; k < rows.size(); ++k) {
    CHECK(std::stod(rows[k][1]) < std::stod(rows[k - 1][1]));
  }
  check_golden(dir / "dd.csv", "dd/dd.csv");
}

TEST_CASE("register") {
  SUBCASE("point target with known correspondence") {
    const auto dir = scratch("register_points");
    const Run r = run({"register", data("spiral_source.pts"), data("spiral_target.pts"),
                       "--reference", data("spiral_target.pts"), "--iters", "10", "--k", "16",
                       "--seed", "7", "-o", dir.string()});
    REQUIRE(r.code == cli::kOk);
    const auto rmse = csv_rows(dir / "rmse.csv");
    REQUIRE(rmse.size() == 12);
    CHECK(std::stod(rmse.back()[1]) < 0.5 * std::stod(rmse[1][1]));
    for (const char* f : {"transform.csv", "rmse.csv", "registered.pts"}) {
      check_golden(dir / f, std::string("register_points/") + f);
    }
  }
  SUBCASE("triangle soup target") {
    const auto dir = scratch("register_mesh");
    const Run r = run({"register", data("l_source.pts"), data("l_shape.off"), "--iters", "5",
                       "--k", "8", "-o", dir.string()});
    REQUIRE(r.code == cli::kOk);
    // the source grid was shifted by (0.05, -0.04) off the L shape
    const auto last = csv_rows(dir / "transform.csv").back();
    CHECK(std::abs(std::stod(last[5]) + 0.05) < 0.01);
    CHECK(std::abs(std::stod(last[6]) - 0.04) < 0.01);
    for (const char* f : {"transform.csv", "rmse.csv"}) {
      check_golden(dir / f, std::string("register_mesh/") + f);
    }
  }
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    REQUIRE(run({"solve", data("gauss15.problem"), "-o", (dir / "solve").string()}).code == 0);
    REQUIRE(run({"dd-compare", data("hat_dd.problem"), "--m-list", "100,1000", "-o",
                 (dir / "dd.csv").string()})
                .code == 0);
    REQUIRE(run({"register", data("spiral_source.pts"), data("spiral_target.pts"), "--iters",
                 "3", "--k", "8", "--threads", dir == a ? "1" : "3", "-o",
                 (dir / "reg").string()})
                .code == 0);
  }
  for (const char* f : {"solve/psi.csv", "solve/cells.csv", "solve/masses.csv",
                        "solve/history.csv", "solve/report.txt", "dd.csv", "reg/transform.csv",
                        "reg/rmse.csv", "reg/registered.pts"}) {
    same_bytes(a / f, b / f);
  }
}

TEST_CASE("exit codes") {
  SUBCASE("parse errors") {
    for (const char* f : {"bad_header.problem", "bad_key.problem", "too_heavy.problem"}) {
      const Run r = run({"solve", data(f), "-o", scratch("parse_error").string()});
      CAPTURE(f);
      CHECK(r.code == cli::kParseError);
      CHECK(r.err.find("usdot:") != std::string::npos);
    }
    CHECK(run({"solve", data("does_not_exist.problem")}).code == cli::kParseError);
    CHECK(run({"frobnicate"}).code == cli::kParseError);
    CHECK(run({"solve"}).code == cli::kParseError);
    CHECK(run({"solve", data("instance_a.problem"), "--eps", "-1"}).code == cli::kParseError);
  }
  SUBCASE("solver failure") {
    const auto dir = scratch("no_iterations");
    const Run r = run({"solve", data("no_iterations.problem"), "-o", dir.string()});
    CHECK(r.code == cli::kSolverFailure);
    CHECK(r.err.find("did not converge") != std::string::npos);
    CHECK(slurp(dir / "report.txt").find("status max_iter") != std::string::npos);
  }
  SUBCASE("help") { CHECK(run({"--help"}).code == cli::kOk); }
}

TEST_CASE("problem file parsing") {
  std::istringstream in(
      "usdot-problem v1\n"
      "  # comment line\n"
      "density uniform 0 2   # trailing comment\n"
      "dirac 1.5 0.25\n"
      "dirac 0.5 0.5\n"
      "schedule 0.2 0.1\n"
      "tol 1e-9\n"
      "max-iter 50\n");
  const auto p = cli::parse_problem(in);
  CHECK(p.diracs.y() == std::vector<double>{0.5, 1.5});
  CHECK(p.diracs.alpha() == std::vector<double>{0.5, 0.25});
  CHECK(!p.eps);
  CHECK(p.schedule == std::vector<double>{0.2, 0.1});
  CHECK(p.solver.tol == 1e-9);
  CHECK(p.solver.max_iter == 50);

  auto fails = [](const std::string& text, const std::string& needle) {
    std::istringstream s(text);
    try {
      (void)cli::parse_problem(s);
    } catch (const cli::ParseError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  CHECK(fails("", "empty"));
  CHECK(fails("usdot-problem v1\ndirac 0 1\n", "density"));
  CHECK(fails("usdot-problem v1\ndensity uniform 0 1\n", "no Diracs"));
  CHECK(fails("usdot-problem v1\ndensity uniform 0 1\ndirac 0 x\n", "line 3"));
  CHECK(fails("usdot-problem v1\ndensity uniform 0 1\ndirac 0 0.1\nschedule 0.1 0.2\n",
              "decreasing"));
  CHECK(fails("usdot-problem v1\ndensity uniform 0 1\ndirac 0 0.1\nrandom-diracs 3 0 1 0.1\n",
              "mixed"));
}

TEST_CASE("random Diracs are reproducible") {
  const auto a = cli::random_positions(5, -1.0, 1.0, 3);
  const auto b = cli::random_positions(5, -1.0, 1.0, 3);
  CHECK(a == b);
  CHECK(std::is_sorted(a.begin(), a.end()));
  for (double v : a) {
    CHECK(v >= -1.0);
    CHECK(v < 1.0);
  }
  CHECK(cli::random_positions(5, -1.0, 1.0, 4) != a);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-300, -7.0, 0.2533422565416030}) {
    CHECK(std::stod(cli::format_double(v)) == v);
  }
}
