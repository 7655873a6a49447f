#include "confspec/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "confspec/error.hpp"
#include "confspec/geometry.hpp"
#include "confspec/operators.hpp"

namespace confspec {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::ConfigError, path + ": " + what);
}

/// Object reader that remembers which keys were consumed so that leftovers
/// can be rejected.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string at_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T required(const std::string& key) {
    if (!has(key)) config_error(at_path(key), "missing required key");
    return convert<T>(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) config_error(at_path(item.key()), "unknown key");
  }

private:
  template <class T>
  T convert(const std::string& key) {
    seen_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) config_error(at_path(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) config_error(at_path(key), "expected a finite number");
        return d;
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer()) config_error(at_path(key), "expected an integer");
        if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (v.is_number_unsigned()) return v.get<std::uint64_t>();
          if (v.get<long long>() < 0) config_error(at_path(key), "expected a non-negative integer");
        }
        return v.get<T>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) config_error(at_path(key), "expected true or false");
        return v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) config_error(at_path(key), "expected a string");
        return v.get<std::string>();
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) config_error(at_path(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
          if (!x.is_number() || !std::isfinite(x.get<double>()))
            config_error(at_path(key), "expected an array of finite numbers");
          out.push_back(x.get<double>());
        }
        return out;
      } else if constexpr (std::is_same_v<T, std::vector<int>>) {
        if (!v.is_array()) config_error(at_path(key), "expected an array of integers");
        std::vector<int> out;
        for (const auto& x : v) {
          if (!x.is_number_integer()) config_error(at_path(key), "expected an array of integers");
          out.push_back(x.get<int>());
        }
        return out;
      } else {
        static_assert(sizeof(T) == 0, "unsupported config type");
      }
    } catch (const json::exception& e) {
      config_error(at_path(key), e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) config_error(path, what);
}

std::vector<FourierTerm> read_terms(const json& arr, const std::string& path) {
  if (!arr.is_array()) config_error(path, "expected an array of Fourier terms");
  std::vector<FourierTerm> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Reader r(arr[i], path + "[" + std::to_string(i) + "]");
    FourierTerm t;
    t.k = r.required<std::vector<int>>("k");
    t.cos_coeff = r.get<double>("cos", 0.0);
    t.sin_coeff = r.get<double>("sin", 0.0);
    r.finish();
    out.push_back(std::move(t));
  }
  return out;
}

MetricRecipe read_metric(const json& j, const std::string& path, std::uint64_t seed) {
  Reader r(j, path);
  MetricRecipe m;
  const std::string recipe = r.required<std::string>("recipe");
  if (recipe == "flat") {
    m.kind = MetricRecipe::Kind::Flat;
    m.scale = r.get<double>("scale", 1.0);
    check(m.scale > 0, r.at_path("scale"), "must be positive");
  } else if (recipe == "constant_conformal") {
    m.kind = MetricRecipe::Kind::ConstantConformal;
    m.factor = r.get<double>("factor", 1.0);
    check(m.factor > 0, r.at_path("factor"), "must be positive");
  } else if (recipe == "conformal_fourier") {
    m.kind = MetricRecipe::Kind::ConformalFourier;
    m.constant = r.get<double>("constant", 0.0);
    if (r.has("terms")) m.terms = read_terms(r.raw("terms"), r.at_path("terms"));
  } else if (recipe == "random_traceless") {
    m.kind = MetricRecipe::Kind::RandomTraceless;
    m.scale = r.get<double>("scale", 1.0);
    m.seed = r.get<std::uint64_t>("seed", seed);
    m.max_mode = r.get<int>("max_mode", 2);
    m.t = r.get<double>("t", 0.0);
    check(m.scale > 0, r.at_path("scale"), "must be positive");
    check(m.max_mode >= 1 && m.max_mode <= 8, r.at_path("max_mode"), "must lie in [1, 8]");
  } else {
    config_error(r.at_path("recipe"),
                 "unknown recipe '" + recipe +
                     "' (flat, constant_conformal, conformal_fourier, random_traceless)");
  }
  r.finish();
  return m;
}

DirectionRecipe read_direction(const json& j, const std::string& path, std::uint64_t seed) {
  Reader r(j, path);
  DirectionRecipe d;
  const std::string recipe = r.required<std::string>("recipe");
  if (recipe == "zero")
    d.kind = DirectionRecipe::Kind::Zero;
  else if (recipe == "homothety")
    d.kind = DirectionRecipe::Kind::Homothety;
  else if (recipe == "random_traceless")
    d.kind = DirectionRecipe::Kind::RandomTraceless;
  else
    config_error(r.at_path("recipe"),
                 "unknown direction '" + recipe + "' (zero, homothety, random_traceless)");
  d.seed = r.get<std::uint64_t>("seed", seed);
  d.max_mode = r.get<int>("max_mode", 2);
  d.scale = r.get<double>("scale", 1.0);
  check(d.max_mode >= 1 && d.max_mode <= 8, r.at_path("max_mode"), "must lie in [1, 8]");
  r.finish();
  return d;
}

FixtureSpec read_fixture(const json& j, const std::string& path, std::uint64_t seed) {
  Reader r(j, path);
  FixtureSpec f;
  f.enabled = true;
  if (r.has("direction")) f.direction = read_direction(r.raw("direction"), r.at_path("direction"), seed);
  f.branch = r.get<int>("branch", 1);
  f.tolerance = r.get<double>("tolerance", 1e-10);
  f.scan = r.get<std::vector<double>>("scan", {});
  f.window = r.get<int>("window", 8);
  check(f.branch >= 0, r.at_path("branch"), "must be non-negative");
  check(f.tolerance > 0, r.at_path("tolerance"), "must be positive");
  check(f.window >= 1, r.at_path("window"), "must be at least 1");
  check(f.scan.empty() || f.scan.size() >= 2, r.at_path("scan"), "needs at least two points");
  r.finish();
  return f;
}

} // namespace

MetricField MetricRecipe::build(const Grid& grid) const {
  switch (kind) {
  case Kind::Flat: return MetricField::flat(grid, scale);
  case Kind::ConstantConformal: return MetricField::flat(grid, factor * factor);
  case Kind::ConformalFourier: return conformal_fourier_metric(grid, terms, constant);
  case Kind::RandomTraceless: {
    const MetricField g0 = MetricField::flat(grid, scale);
    return MetricField(g0.tensor() + t * random_traceless(g0, seed, max_mode));
  }
  }
  fail(ErrorKind::ConfigError, "unknown metric recipe");
}

SymTensorField DirectionRecipe::build(const MetricField& g) const {
  switch (kind) {
  case Kind::Zero: return SymTensorField(g.grid());
  case Kind::Homothety: return scale * g.tensor();
  case Kind::RandomTraceless: return scale * random_traceless(g, seed, max_mode);
  }
  fail(ErrorKind::ConfigError, "unknown direction recipe");
}

EigenOptions EigenSettings::options(std::uint64_t seed) const {
  EigenOptions o;
  o.max_iterations = max_iterations;
  o.tolerance = tolerance;
  o.seed = seed;
  o.dense = dense;
  return o;
}

const GridSpec& ExperimentConfig::require_grid() const {
  if (!grid) fail(ErrorKind::ConfigError, "grid: missing required section");
  return *grid;
}

double ExperimentConfig::coupling_for(int dim) const {
  return coupling ? *coupling : coupling_constant(dim);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const std::string& text, const Overrides& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorKind::ConfigError, "config must be a JSON object");
  if (overrides.seed) root["seed"] = *overrides.seed;
  if (overrides.tol || overrides.dense) {
    if (!root.contains("eigen")) root["eigen"] = json::object();
    if (!root["eigen"].is_object()) fail(ErrorKind::ConfigError, "eigen: expected an object");
    if (overrides.tol) root["eigen"]["kernel_tol"] = *overrides.tol;
    if (overrides.dense) root["eigen"]["dense"] = true;
  }

  ExperimentConfig cfg;
  Reader top(root, "");
  cfg.seed = top.get<std::uint64_t>("seed", cfg.seed);
  cfg.metric.seed = cfg.seed;
  cfg.perturb.direction.seed = cfg.seed;
  cfg.perturb.fixture.direction.seed = cfg.seed;
  cfg.break_kernel.fixture.direction.seed = cfg.seed;

  if (top.has("grid")) {
    Reader r(top.raw("grid"), "grid");
    GridSpec g;
    g.resolution = r.required<std::vector<int>>("resolution");
    g.period = r.get<std::vector<double>>("period", std::vector<double>(g.resolution.size(), 1.0));
    check(!g.resolution.empty() && g.resolution.size() <= static_cast<std::size_t>(Grid::max_dim),
          "grid.resolution", "needs between 1 and 8 axes");
    for (int n : g.resolution) check(n >= 4, "grid.resolution", "every axis needs at least 4 points");
    check(g.period.size() == g.resolution.size(), "grid.period", "must match grid.resolution");
    for (double p : g.period) check(p > 0, "grid.period", "periods must be positive");
    r.finish();
    cfg.grid = g;
  }
  if (top.has("scheme")) {
    const std::string s = top.get<std::string>("scheme", "spectral");
    try {
      cfg.scheme = parse_scheme(s);
    } catch (const Error&) {
      config_error("scheme", "unknown scheme '" + s + "' (spectral, fd4, fd2)");
    }
  }
  if (top.has("metric")) cfg.metric = read_metric(top.raw("metric"), "metric", cfg.seed);
  if (top.has("coupling")) {
    const json& c = top.raw("coupling");
    if (c.is_string() && c.get<std::string>() == "conformal") {
      cfg.coupling.reset();
    } else if (c.is_number() && std::isfinite(c.get<double>())) {
      cfg.coupling = c.get<double>();
    } else {
      config_error("coupling", "expected a number or \"conformal\"");
    }
  }
  if (top.has("eigen")) {
    Reader r(top.raw("eigen"), "eigen");
    auto& e = cfg.eigen;
    e.k = r.get<int>("k", e.k);
    e.tolerance = r.get<double>("tolerance", e.tolerance);
    e.max_iterations = r.get<int>("max_iterations", e.max_iterations);
    e.kernel_tol = r.get<double>("kernel_tol", e.kernel_tol);
    e.dense = r.get<bool>("dense", e.dense);
    check(e.k >= 1, "eigen.k", "must be at least 1");
    check(e.tolerance > 0 && e.tolerance < 1, "eigen.tolerance", "must lie in (0, 1)");
    check(e.max_iterations >= 1, "eigen.max_iterations", "must be at least 1");
    check(e.kernel_tol >= 0, "eigen.kernel_tol", "must be non-negative");
    r.finish();
  }
  if (top.has("spectrum")) {
    Reader r(top.raw("spectrum"), "spectrum");
    cfg.spectrum.count_below = r.get<std::vector<double>>("count_below", {});
    cfg.spectrum.save_vectors = r.get<bool>("save_vectors", false);
    r.finish();
  }
  if (top.has("perturb")) {
    Reader r(top.raw("perturb"), "perturb");
    auto& p = cfg.perturb;
    if (r.has("direction")) p.direction = read_direction(r.raw("direction"), "perturb.direction", cfg.seed);
    if (r.has("fixture")) p.fixture = read_fixture(r.raw("fixture"), "perturb.fixture", cfg.seed);
    p.t_grid = r.get<std::vector<double>>("t_grid", p.t_grid);
    p.window = r.get<int>("window", p.window);
    p.slope_steps = r.get<std::vector<double>>("slope_steps", p.slope_steps);
    check(!p.t_grid.empty(), "perturb.t_grid", "must not be empty");
    check(p.window >= 1, "perturb.window", "must be at least 1");
    for (double s : p.slope_steps) check(s > 0, "perturb.slope_steps", "steps must be positive");
    r.finish();
  }
  if (top.has("break_kernel")) {
    Reader r(top.raw("break_kernel"), "break_kernel");
    auto& b = cfg.break_kernel;
    b.eps = r.get<double>("eps", b.eps);
    b.levels = r.get<int>("levels", b.levels);
    if (r.has("fixture")) b.fixture = read_fixture(r.raw("fixture"), "break_kernel.fixture", cfg.seed);
    check(b.eps > 0, "break_kernel.eps", "must be positive");
    check(b.levels >= 1 && b.levels <= 60, "break_kernel.levels", "must lie in [1, 60]");
    r.finish();
  }
  if (top.has("product")) {
    Reader r(top.raw("product"), "product");
    auto& p = cfg.product;
    p.d = r.get<int>("d", p.d);
    p.l_max = r.get<int>("l_max", p.l_max);
    p.eps = r.get<double>("eps", p.eps);
    p.genus = r.get<int>("genus", p.genus);
    p.ks = r.get<std::vector<int>>("k", p.ks);
    p.tail_bound = r.get<double>("tail_bound", p.tail_bound);
    p.t = r.get<double>("t", p.t);
    if (r.has("t_range")) {
      const auto range = r.get<std::vector<double>>("t_range", {});
      check(range.size() == 2 && range[0] > 0 && range[1] >= range[0], "product.t_range",
            "expected [t_lo, t_hi] with 0 < t_lo <= t_hi");
      p.t_lo = range[0];
      p.t_hi = range[1];
    }
    p.t_samples = r.get<int>("t_samples", p.t_samples);
    p.family = r.get<std::vector<int>>("family", p.family);
    p.r0 = r.get<double>("r0", p.r0);
    p.d0 = r.get<double>("d0", p.d0);
    if (r.has("bounds")) {
      Reader b(r.raw("bounds"), "product.bounds");
      p.bounds.volume = b.get<double>("volume", p.bounds.volume);
      p.bounds.injectivity = b.get<double>("injectivity", p.bounds.injectivity);
      p.bounds.a_squared = b.get<double>("a_squared", p.bounds.a_squared);
      p.bounds.diameter = b.get<double>("diameter", p.bounds.diameter);
      b.finish();
    }
    check(p.d >= 2, "product.d", "must be at least 2");
    check(p.l_max >= 0, "product.l_max", "must be non-negative");
    check(p.eps > 0 && p.eps < 1.0 / 12.0, "product.eps", "must lie in (0, 1/12)");
    check(p.genus >= 2, "product.genus", "must be at least 2");
    check(!p.ks.empty(), "product.k", "must not be empty");
    for (int k : p.ks) check(k >= 1, "product.k", "entries must be at least 1");
    for (int k : p.family) check(k >= 1, "product.family", "entries must be at least 1");
    check(p.t > 0, "product.t", "must be positive");
    check(p.t_samples >= 1, "product.t_samples", "must be at least 1");
    check(p.r0 > 0, "product.r0", "must be positive");
    r.finish();
  }
  if (top.has("curvature_check")) {
    Reader r(top.raw("curvature_check"), "curvature_check");
    if (r.has("psi")) cfg.curvature.psi = read_terms(r.raw("psi"), "curvature_check.psi");
    cfg.curvature.psi_constant = r.get<double>("psi_constant", 0.0);
    r.finish();
  }
  top.finish();

  cfg.canonical = root.dump();
  cfg.hash = fnv1a64(cfg.canonical);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::ConfigError, "cannot read config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config(os.str(), overrides);
}

} // namespace confspec
