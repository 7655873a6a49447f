#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <map>
#include <set>
#include <sstream>

#include "confspec/cli.hpp"
#include "confspec/config.hpp"
#include "confspec/error.hpp"

using namespace confspec;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    return e.what();
  }
  FAIL("config accepted: " << text);
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("confspec_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::vector<std::vector<std::string>> rows(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.starts_with("#")) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

const char* flat8 = R"({"grid": {"resolution": [8, 8, 8]}, "metric": {"recipe": "flat"}})";

} // namespace

TEST_CASE("config defaults and recipes") {
  const ExperimentConfig c = parse_config(R"({
    "grid": {"resolution": [8, 10, 12], "period": [2, 1, 1]},
    "scheme": "fd4",
    "metric": {"recipe": "conformal_fourier", "terms": [{"k": [1, 0, 0], "cos": 0.1}]},
    "coupling": 0.2,
    "seed": 99
  })");
  CHECK(c.require_grid().resolution == std::vector<int>{8, 10, 12});
  CHECK(c.scheme == Scheme::FD4);
  CHECK(c.metric.kind == MetricRecipe::Kind::ConformalFourier);
  CHECK(c.coupling_for(3) == 0.2);
  CHECK(c.perturb.direction.seed == 99);
  const MetricField g = c.metric.build(c.require_grid().make());
  CHECK(g(0, 0, 0) == doctest::Approx(std::exp(0.2)));

  const ExperimentConfig d = parse_config(R"({"coupling": "conformal"})");
  CHECK_FALSE(d.grid.has_value());
  CHECK(d.coupling_for(3) == doctest::Approx(0.125));
  CHECK(d.product.ks == std::vector<int>{1, 3, 10});
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK(config_error(R"({"grid": {"resolution": [8, 8, 8], "spacing": 1}})").find("grid.spacing") !=
        std::string::npos);
  CHECK(config_error(R"({"colour": 1})").find("colour") != std::string::npos);
  CHECK(config_error(R"({"metric": {"recipe": "round"}})").find("metric.recipe") != std::string::npos);
  CHECK(config_error(R"({"grid": {"resolution": [2, 8, 8]}})").find("grid.resolution") !=
        std::string::npos);
  CHECK(config_error(R"({"eigen": {"k": 0}})").find("eigen.k") != std::string::npos);
  CHECK(config_error(R"({"coupling": "yamabe"})").find("coupling") != std::string::npos);
  CHECK(config_error(R"({"product": {"eps": 0.2}})").find("product.eps") != std::string::npos);
  CHECK(config_error(R"({"scheme": "fd8"})").find("scheme") != std::string::npos);
  CHECK(config_error("{not json").find("JSON") != std::string::npos);
  CHECK(config_error(R"({"seed": -1})").find("seed") != std::string::npos);
  CHECK(config_error(R"({"perturb": {"fixture": {"direction": {"recipe": "zero", "sed": 1}}}})")
            .find("perturb.fixture.direction.sed") != std::string::npos);
  CHECK_THROWS_AS(parse_config("{}").require_grid(), Error);
}

TEST_CASE("canonical form and hash") {
  const ExperimentConfig a = parse_config(R"({"seed": 3, "grid": {"resolution": [8, 8, 8]}})");
  const ExperimentConfig b = parse_config(R"({"grid": {"resolution": [8,8,8]},   "seed": 3})");
  CHECK(a.canonical == b.canonical);
  CHECK(a.hash == b.hash);
  Overrides ov;
  ov.seed = 4;
  const ExperimentConfig c = parse_config(R"({"seed": 3, "grid": {"resolution": [8, 8, 8]}})", ov);
  CHECK(c.seed == 4);
  CHECK(c.hash != a.hash);
  ov = {};
  ov.tol = 1e-6;
  ov.dense = true;
  const ExperimentConfig d = parse_config("{}", ov);
  CHECK(d.eigen.kernel_tol == 1e-6);
  CHECK(d.eigen.dense);
  // Reference value of FNV-1a 64.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("exit codes are distinct per error class") {
  using namespace cli;
  const std::set<int> codes = {exit_code(ErrorKind::ConfigError),
                               exit_code(ErrorKind::SingularMetric),
                               exit_code(ErrorKind::ConvergenceFailure),
                               exit_code(ErrorKind::EmptyKernel),
                               exit_code(ErrorKind::FirstOrderDegenerate),
                               exit_code(ErrorKind::LineSearchFailure),
                               exit_code(ErrorKind::NoSignChange),
                               exit_code(ErrorKind::TruncationInadequate),
                               exit_code(ErrorKind::FormatError)};
  CHECK(codes.size() == 9);
  CHECK(codes.count(0) == 0);
  CHECK(exit_code(ErrorKind::DisallowedCoupling) == exit_code(ErrorKind::ConfigError));
}

TEST_CASE("spectrum command on a flat torus") {
  const fs::path dir = scratch("spectrum");
  const fs::path cfg = write_config(dir, flat8);
  const int rc = cli::run({"spectrum", "--config", cfg.string(), "--out", (dir / "out").string()});
  REQUIRE(rc == 0);
  const std::string text = slurp(dir / "out" / "spectrum.csv");
  CHECK(text.starts_with("# confspec "));
  CHECK(text.find("config=") != std::string::npos);
  const auto r = rows(dir / "out" / "spectrum.csv");
  CHECK(r[0] == std::vector<std::string>{"index", "eigenvalue", "residual", "in_kernel"});
  CHECK(std::abs(std::stod(r[1][1])) < 1e-10);
  CHECK(std::stod(r[2][1]) == doctest::Approx(4 * std::numbers::pi * std::numbers::pi));

  // Same config with --dense must agree with the automatic solve to 1e-8.
  const int rd = cli::run({"spectrum", "--config", cfg.string(), "--out", (dir / "dense").string(),
                           "--dense"});
  REQUIRE(rd == 0);
  const auto s = rows(dir / "dense" / "spectrum.csv");
  for (std::size_t i = 1; i < r.size(); ++i)
    CHECK(std::abs(std::stod(s[i][1]) - std::stod(r[i][1])) < 1e-8);
}

TEST_CASE("break-kernel rejects excluded couplings and degenerate kernels") {
  const fs::path dir = scratch("break");
  const fs::path c0 = write_config(
      dir, R"({"grid": {"resolution": [6, 6, 6]}, "metric": {"recipe": "flat"}, "coupling": 0.5})");
  CHECK(cli::run({"break-kernel", "--config", c0.string(), "--out", (dir / "a").string()}) ==
        cli::bad_config);
  const std::string err = slurp(dir / "a" / "error.json");
  CHECK(err.find("c \\u2260 0") == std::string::npos);  // stored as UTF-8, not escaped
  CHECK(err.find("c ≠ 0, c ≠ 1/2") != std::string::npos);
  CHECK(err.find("DisallowedCoupling") != std::string::npos);

  const fs::path c1 = write_config(dir, R"({"grid": {"resolution": [6, 6, 6]}, "metric": {"recipe": "flat"}})");
  CHECK(cli::run({"break-kernel", "--config", c1.string(), "--out", (dir / "b").string()}) ==
        cli::degenerate);
  CHECK(slurp(dir / "b" / "error.json").find("FirstOrderDegenerate") != std::string::npos);
}

TEST_CASE("break-kernel with an empty kernel succeeds with trace 0") {
  const fs::path dir = scratch("break_empty");
  const fs::path c = write_config(dir, R"({
    "grid": {"resolution": [6, 6, 6]},
    "metric": {"recipe": "random_traceless", "t": 0.3, "seed": 2, "max_mode": 1},
    "eigen": {"kernel_tol": 1e-8}})");
  REQUIRE(cli::run({"break-kernel", "--config", c.string(), "--out", (dir / "o").string()}) == 0);
  const auto r = rows(dir / "o" / "trace.csv");
  REQUIRE(r.size() == 2);
  CHECK(r[1] == std::vector<std::string>{"0", "0"});
}

TEST_CASE("perturb with h = 0 gives a zero Q and flat branches") {
  const fs::path dir = scratch("perturb");
  const fs::path c = write_config(dir, R"({
    "grid": {"resolution": [6, 6, 6]}, "metric": {"recipe": "flat"},
    "perturb": {"direction": {"recipe": "zero"}, "t_grid": [0, 0.5, 1.0], "window": 7,
                "slope_steps": [0.001]}})");
  REQUIRE(cli::run({"perturb", "--config", c.string(), "--out", (dir / "o").string()}) == 0);
  const auto q = rows(dir / "o" / "q_matrix.csv");
  REQUIRE(q.size() == 2);
  CHECK(std::stod(q[1][2]) == 0.0);
  const auto b = rows(dir / "o" / "branches.csv");
  REQUIRE(b.size() == 1 + 3 * 7);
  std::map<std::string, double> at_zero;
  for (std::size_t i = 1; i <= 7; ++i) at_zero[b[i][1]] = std::stod(b[i][2]);
  for (std::size_t i = 8; i < b.size(); ++i) {
    REQUIRE(at_zero.count(b[i][1]) == 1);
    CHECK(std::stod(b[i][2]) == doctest::Approx(at_zero[b[i][1]]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("product command flags the rows") {
  const fs::path dir = scratch("product");
  const fs::path c = write_config(dir, R"({"product": {"k": [3], "t_range": [1, 12], "t_samples": 12}})");
  REQUIRE(cli::run({"product", "--config", c.string(), "--out", (dir / "o").string()}) == 0);
  const auto s = rows(dir / "o" / "sweep.csv");
  CHECK(s[0] == std::vector<std::string>{"k", "t", "negative_designated", "admissible",
                                         "printed_interval", "corrected_bound"});
  CHECK(s[1][1] == "1");  // t = R_G / 2
  CHECK(s[1][3] == "0");
  CHECK(s.back()[3] == "1");
  const auto r = rows(dir / "o" / "rescaled.csv");
  CHECK(std::stod(r[1][2]) == doctest::Approx(-1.0 / 6.0));
}

TEST_CASE("usage errors") {
  CHECK(cli::run({"spectrum"}) == cli::bad_config);
  CHECK(cli::run({"frobnicate", "--config", "x"}) == cli::bad_config);
  const fs::path dir = scratch("usage");
  const fs::path c = write_config(dir, R"({"grid": {"resolution": [6, 6, 6]}, "typo": 1})");
  CHECK(cli::run({"spectrum", "--config", c.string(), "--out", (dir / "o").string()}) ==
        cli::bad_config);
  CHECK(slurp(dir / "o" / "error.json").find("typo") != std::string::npos);
}
