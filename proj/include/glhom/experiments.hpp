#pragma once

// Scaling studies over an ε schedule: configuration, measurement channels,
// predicted Γ-limits and CSV/JSON reports.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "glhom/cell_problem.hpp"
#include "glhom/flat_distance.hpp"
#include "glhom/coefficients.hpp"
#include "glhom/gl_solver.hpp"
#include "glhom/singularity_cost.hpp"
#include "glhom/vortex_analysis.hpp"

namespace glhom {

inline constexpr const char* version = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Regime { delta_proportional, power_law, log_slow };
enum class Channel { proxy, recovery, minimize };

struct SolverSettings {
  int cell_n = 128;            // cell-problem grid for A^hom
  int annulus_n_theta = 256;   // angular nodes of the annulus solves
  double grid_per_epsilon = 4.0;  // Cartesian cells per ε (recovery and minimize channels)
  std::optional<double> s;     // recovery exponent; default 1 − 1/log|log ε|
  double eta = 0.1;
  int max_iterations = 2000;
  std::optional<bool> shift_cores;  // default: on for power_law and log_slow
};

struct ExperimentConfig {
  nlohmann::json echo;  // normalized input with defaults filled in
  PeriodicCoefficient coefficient = PeriodicCoefficient::constant(1.0);
  VortexMeasure measure;
  Regime regime = Regime::delta_proportional;
  double c = 1.0;
  double lambda = 1.0;
  std::vector<double> epsilons;  // strictly decreasing
  Channel channel = Channel::proxy;
  SolverSettings solver;
  std::string out_dir = ".";
  std::string stem = "scaling";
  std::uint64_t seed = 0;
  int threads = 1;

  double delta_for(double eps) const {
    switch (regime) {
      case Regime::delta_proportional:
        return c * eps;
      case Regime::power_law:
        return c * std::pow(eps, lambda);
      case Regime::log_slow:
        return c / std::abs(std::log(eps));
    }
    return eps;
  }
  /// λ entering the predicted limit.
  double limit_lambda() const {
    switch (regime) {
      case Regime::delta_proportional:
        return 1.0;
      case Regime::power_law:
        return lambda;
      case Regime::log_slow:
        return 0.0;
    }
    return 1.0;
  }
  bool shift_cores() const { return solver.shift_cores.value_or(regime != Regime::delta_proportional); }
};

namespace detail {

class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) throw ConfigError("config: unknown key '" + k + "' at " + where());
  }
  bool has(const char* key) const { return j_.contains(key); }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) return required(key, fallback);
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("config: " + at(key) + " must be a number");
    return v.get<double>();
  }
  int integer(const char* key, std::optional<int> fallback = std::nullopt) const {
    if (!has(key)) return static_cast<int>(required(key, fallback ? std::optional<double>(*fallback) : std::nullopt));
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError("config: " + at(key) + " must be an integer");
    return v.get<int>();
  }
  std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (!fallback) throw ConfigError("config: missing key " + at(key));
      return *fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError("config: " + at(key) + " must be a string");
    return v.get<std::string>();
  }
  bool boolean(const char* key) const {
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError("config: " + at(key) + " must be a boolean");
    return v.get<bool>();
  }
  JsonReader child(const char* key) const {
    if (!has(key)) throw ConfigError("config: missing key " + at(key));
    return JsonReader(j_.at(key), at(key));
  }
  const nlohmann::json& raw(const char* key) const { return j_.at(key); }
  const nlohmann::json& raw_required(const char* key) const {
    if (!has(key)) throw ConfigError("config: missing key " + at(key));
    return j_.at(key);
  }
  std::string at(const char* key) const { return path_ + "/" + key; }
  std::string where() const { return path_.empty() ? "/" : path_; }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError("config: " + where() + ": " + msg); }

 private:
  double required(const char* key, std::optional<double> fallback) const {
    if (!fallback) throw ConfigError("config: missing key " + at(key));
    return *fallback;
  }
  const nlohmann::json& j_;
  std::string path_;
};

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path q(p);
  return (q.is_absolute() || base.empty() ? q : base / q).string();
}

}  // namespace detail

/// Strict reader over one JSON object of a config document.
using ConfigReader = detail::JsonReader;

/// Builds a coefficient from its JSON description at `path`; `echo`
/// receives the normalized form.
inline PeriodicCoefficient parse_coefficient(const nlohmann::json& j, const std::string& path,
                                             const std::filesystem::path& base_dir, nlohmann::json& echo) {
  const detail::JsonReader r(j, path);
  PeriodicCoefficient out = PeriodicCoefficient::constant(1.0);
  const std::string kind = r.string("kind");
  nlohmann::json e{{"kind", kind}};
  try {
    if (kind == "constant") {
      r.allow({"kind", "value"});
      out = PeriodicCoefficient::constant(r.number("value"));
      e["value"] = r.number("value");
    } else if (kind == "checkerboard") {
      r.allow({"kind", "low", "high"});
      out = PeriodicCoefficient::checkerboard(r.number("low"), r.number("high"));
      e["low"] = r.number("low");
      e["high"] = r.number("high");
    } else if (kind == "laminate") {
      r.allow({"kind", "first", "second", "normal_axis", "fraction"});
      const int axis = r.integer("normal_axis", 0);
      const double f = r.number("fraction", 0.5);
      out = PeriodicCoefficient::laminate(r.number("first"), r.number("second"), axis, f);
      e.update({{"first", r.number("first")}, {"second", r.number("second")}, {"normal_axis", axis}, {"fraction", f}});
    } else if (kind == "smooth") {
      r.allow({"kind", "mean", "amplitude"});
      out = PeriodicCoefficient::smooth_trig(r.number("mean"), r.number("amplitude"));
      e["mean"] = r.number("mean");
      e["amplitude"] = r.number("amplitude");
    } else if (kind == "raster") {
      r.allow({"kind", "path"});
      out = load_raster(detail::resolve(base_dir, r.string("path")));
      e["path"] = r.string("path");
    } else {
      throw ConfigError("config: " + path + "/kind: unknown kind '" + kind + "'");
    }
  } catch (const PreconditionError& ex) {
    throw ConfigError(std::string("config: " + path + ": ") + ex.what());
  }
  echo = e;
  return out;
}

inline VortexMeasure parse_measure(const nlohmann::json& j, const std::string& path,
                                   const std::filesystem::path& base_dir, nlohmann::json& echo) {
  const detail::JsonReader r(j, path);
  VortexMeasure out;
  r.allow({"atoms", "csv"});
  if (r.has("atoms") == r.has("csv")) r.fail("give exactly one of 'atoms' or 'csv'");
  try {
    if (r.has("csv")) {
      std::ifstream in(detail::resolve(base_dir, r.string("csv")));
      if (!in) throw ConfigError("config: " + path + "/csv: cannot open '" + r.string("csv") + "'");
      out = read_measure_csv(in);
      echo = {{"csv", r.string("csv")}};
    } else {
      const auto& list = r.raw("atoms");
      if (!list.is_array() || list.empty()) r.fail("'atoms' must be a nonempty array");
      nlohmann::json atoms = nlohmann::json::array();
      for (std::size_t k = 0; k < list.size(); ++k) {
        const detail::JsonReader a(list[k], r.at("atoms") + "/" + std::to_string(k));
        a.allow({"x", "y", "z"});
        out.add({a.number("x"), a.number("y")}, a.integer("z"));
        atoms.push_back({{"x", a.number("x")}, {"y", a.number("y")}, {"z", a.integer("z")}});
      }
      echo = {{"atoms", atoms}};
    }
  } catch (const PreconditionError& ex) {
    throw ConfigError(std::string("config: " + path + ": ") + ex.what());
  }
  return out;
}

/// Validates a parsed JSON document against the config schema; relative
/// file references are resolved against `base_dir`.
inline ExperimentConfig parse_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig cfg;
  const detail::JsonReader root(j, "");
  root.allow({"coefficient", "measure", "regime", "epsilon", "channel", "solver", "output", "seed", "threads"});
  nlohmann::json echo;

  cfg.coefficient = parse_coefficient(root.raw_required("coefficient"), "/coefficient", base_dir, echo["coefficient"]);
  cfg.measure = parse_measure(root.raw_required("measure"), "/measure", base_dir, echo["measure"]);

  {
    const auto r = root.child("regime");
    const std::string kind = r.string("kind");
    nlohmann::json e{{"kind", kind}};
    if (kind == "delta_proportional") {
      r.allow({"kind", "c"});
      cfg.regime = Regime::delta_proportional;
    } else if (kind == "power_law") {
      r.allow({"kind", "c", "lambda"});
      cfg.regime = Regime::power_law;
      cfg.lambda = r.number("lambda");
      if (!(cfg.lambda >= 0.0 && cfg.lambda < 1.0))
        throw ConfigError("config: /regime/lambda must lie in [0,1), got " + std::to_string(cfg.lambda));
      e["lambda"] = cfg.lambda;
    } else if (kind == "log_slow") {
      r.allow({"kind", "c"});
      cfg.regime = Regime::log_slow;
    } else {
      throw ConfigError("config: /regime/kind: unknown regime '" + kind + "'");
    }
    cfg.c = r.number("c", 1.0);
    if (!(cfg.c > 0.0)) throw ConfigError("config: /regime/c must be positive");
    e["c"] = cfg.c;
    echo["regime"] = e;
  }

  {
    const auto r = root.child("epsilon");
    r.allow({"values", "base", "k_min", "k_max"});
    if (r.has("values")) {
      if (r.has("base") || r.has("k_min") || r.has("k_max")) r.fail("give either 'values' or base/k_min/k_max");
      const auto& list = r.raw("values");
      if (!list.is_array() || list.empty()) r.fail("'values' must be a nonempty array");
      for (const auto& v : list) {
        if (!v.is_number()) r.fail("'values' must hold numbers");
        cfg.epsilons.push_back(v.get<double>());
      }
      echo["epsilon"] = {{"values", cfg.epsilons}};
    } else {
      const double base = r.number("base", 2.0);
      const int k0 = r.integer("k_min"), k1 = r.integer("k_max");
      if (!(base > 1.0)) throw ConfigError("config: /epsilon/base must exceed 1");
      if (k1 < k0) throw ConfigError("config: /epsilon: k_max must not be below k_min");
      for (int k = k0; k <= k1; ++k) cfg.epsilons.push_back(std::pow(base, -k));
      echo["epsilon"] = {{"base", base}, {"k_min", k0}, {"k_max", k1}};
    }
    for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
      const double e = cfg.epsilons[k];
      if (!(e > 0.0 && e < 1.0)) throw ConfigError("config: /epsilon: values must lie in (0,1), got " + std::to_string(e));
      if (k > 0 && !(e < cfg.epsilons[k - 1])) throw ConfigError("config: /epsilon: schedule must strictly decrease");
    }
  }

  {
    const std::string ch = root.string("channel", "proxy");
    if (ch == "proxy") cfg.channel = Channel::proxy;
    else if (ch == "recovery") cfg.channel = Channel::recovery;
    else if (ch == "minimize") cfg.channel = Channel::minimize;
    else throw ConfigError("config: /channel: unknown channel '" + ch + "'");
    echo["channel"] = ch;
  }

  {
    SolverSettings& s = cfg.solver;
    if (root.has("solver")) {
      const auto r = root.child("solver");
      r.allow({"cell_n", "annulus_n_theta", "grid_per_epsilon", "s", "eta", "max_iterations", "shift_cores"});
      s.cell_n = r.integer("cell_n", s.cell_n);
      s.annulus_n_theta = r.integer("annulus_n_theta", s.annulus_n_theta);
      s.grid_per_epsilon = r.number("grid_per_epsilon", s.grid_per_epsilon);
      if (r.has("s")) s.s = r.number("s");
      s.eta = r.number("eta", s.eta);
      s.max_iterations = r.integer("max_iterations", s.max_iterations);
      if (r.has("shift_cores")) s.shift_cores = r.boolean("shift_cores");
    }
    if (s.cell_n < 16) throw ConfigError("config: /solver/cell_n must be at least 16");
    if (s.annulus_n_theta < 16 || s.annulus_n_theta % 4 != 0)
      throw ConfigError("config: /solver/annulus_n_theta must be a multiple of 4, at least 16");
    if (s.grid_per_epsilon < 4.0) throw ConfigError("config: /solver/grid_per_epsilon must be at least 4");
    if (s.s && !(*s.s > 0.0 && *s.s < 1.0)) throw ConfigError("config: /solver/s must lie in (0,1)");
    if (!(s.eta > 0.0 && s.eta < 1.0)) throw ConfigError("config: /solver/eta must lie in (0,1)");
    if (s.max_iterations < 1) throw ConfigError("config: /solver/max_iterations must be positive");
    nlohmann::json e{{"cell_n", s.cell_n},           {"annulus_n_theta", s.annulus_n_theta},
                     {"grid_per_epsilon", s.grid_per_epsilon}, {"eta", s.eta},
                     {"max_iterations", s.max_iterations}, {"shift_cores", cfg.shift_cores()}};
    e["s"] = s.s ? nlohmann::json(*s.s) : nlohmann::json(nullptr);
    echo["solver"] = e;
  }

  if (root.has("output")) {
    const auto r = root.child("output");
    r.allow({"dir", "stem"});
    cfg.out_dir = r.string("dir", cfg.out_dir);
    cfg.stem = r.string("stem", cfg.stem);
    if (cfg.stem.empty()) throw ConfigError("config: /output/stem must not be empty");
  }
  echo["output"] = {{"dir", cfg.out_dir}, {"stem", cfg.stem}};
  if (root.has("seed")) {
    const auto& v = root.raw("seed");
    if (!v.is_number_unsigned()) throw ConfigError("config: /seed must be a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.threads = root.integer("threads", 1);
  if (cfg.threads < 1) throw ConfigError("config: /threads must be positive");
  echo["seed"] = cfg.seed;
  echo["threads"] = cfg.threads;
  cfg.echo = echo;
  return cfg;
}

/// JSON text to a document; syntax errors report line and column.
inline nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config: malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": " + e.what());
  }
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {}) {
  return parse_config_json(parse_json_text(text), base_dir);
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Measurement channels

/// Cores moved to δ⌊x/δ⌋ + δ·y_min, with y_min a minimum point of a.
inline VortexMeasure shifted_cores(const VortexMeasure& mu, const PeriodicCoefficient& a, double delta) {
  const Point y = a.argmin();
  VortexMeasure out(mu.domain(), {});
  for (const Atom& at : mu.atoms())
    out.add({delta * std::floor(at.position.x / delta) + delta * y.x,
             delta * std::floor(at.position.y / delta) + delta * y.y},
            at.charge);
  return out;
}

struct ProxyResult {
  double energy = 0.0;
  double resolved_fraction = 1.0;  // smallest over the annuli
};

/// Σ_i of the fixed-degree annulus minimum on A_{ε,R_i}(x_i) with
/// R_i = min(½ distance to the nearest other core, boundary distance), for
/// a(x/δ) with A^hom closing rings coarser than δ/6.
inline ProxyResult core_radius_proxy(const VortexMeasure& mu, double eps, double delta, const PeriodicCoefficient& a,
                                     const HomogenizedTensor& closure, int n_theta) {
  require(!mu.empty(), "core_radius_proxy: empty measure");
  require(eps > 0.0 && delta > 0.0, "core_radius_proxy: eps and delta must be positive");
  CoefficientMode mode;
  if (a.alpha() == a.beta()) mode = HomogenizedTensor::analytic(Sym2::identity(a.alpha()));
  else mode = OscillatingCoefficient{a, delta, closure};
  const PsiResolution res{n_theta, 0.0, 16};
  ProxyResult out;
  for (const Atom& at : mu.atoms()) {
    double R = mu.domain().boundary_distance(at.position);
    for (const Atom& o : mu.atoms())
      if (&o != &at) R = std::min(R, 0.5 * dist(o.position, at.position));
    require(R >= 1.5 * eps, "core_radius_proxy: core radius exceeds the available annulus");
    const PolarGrid g(at.position, eps, R, res.n_r_for(std::log(R / eps)), n_theta);
    const auto sol = min_annulus_energy({g, mode, at.charge, TraceMode::fixed_degree});
    out.energy += sol.energy;
    out.resolved_fraction = std::min(out.resolved_fraction, sol.resolved_fraction);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling study

struct ScalingRow {
  double epsilon = 0.0;
  double delta = 0.0;
  double lambda_effective = 0.0;  // |log δ|/|log ε| clamped to [0,1]
  double energy = 0.0;
  double energy_per_log = 0.0;
  double predicted = 0.0;
  std::optional<double> rel_gap;
  bool flagged = false;
  std::string note;
  double seconds = 0.0;
};

struct ScalingSummary {
  HomogenizedTensor ahom;
  double limit_lambda = 1.0;
  std::optional<double> trend_slope;  // of (energy/|log ε| − predicted) against 1/|log ε|
  std::optional<double> trend_intercept;
  int flagged = 0;
  double seconds = 0.0;
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;  // sorted by decreasing ε
  ScalingSummary summary;
};

inline double lambda_effective(double eps, double delta) {
  return std::clamp(std::abs(std::log(delta)) / std::abs(std::log(eps)), 0.0, 1.0);
}

inline ScalingRow measure_row(const ExperimentConfig& cfg, const HomogenizedTensor& ahom, double eps) {
  ScalingRow row;
  row.epsilon = eps;
  row.delta = cfg.delta_for(eps);
  row.lambda_effective = lambda_effective(eps, row.delta);
  row.predicted = predicted_gamma_limit(cfg.coefficient, ahom, cfg.limit_lambda(), cfg.measure);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const VortexMeasure cores =
        cfg.shift_cores() ? shifted_cores(cfg.measure, cfg.coefficient, row.delta) : cfg.measure;
    if (cfg.channel == Channel::proxy) {
      const auto pr = core_radius_proxy(cores, eps, row.delta, cfg.coefficient, ahom, cfg.solver.annulus_n_theta);
      row.energy = pr.energy;
    } else {
      GLParameters p;
      p.epsilon = eps;
      p.delta = row.delta;
      p.coefficient = cfg.coefficient;
      p.domain = cfg.measure.domain();
      p.nx = static_cast<int>(std::ceil(cfg.solver.grid_per_epsilon * p.domain.width() / eps));
      RecoveryOptions opt;
      opt.shift_cores = cfg.shift_cores();
      opt.annulus_n_theta = cfg.solver.annulus_n_theta;
      opt.closure = ahom;
      const double s = cfg.solver.s.value_or(default_s(eps));
      const auto rec = recovery_field(cfg.measure, p, s, cfg.solver.eta, opt);
      if (cfg.channel == Channel::recovery) {
        row.energy = gl_energy(rec.field, p).total;
      } else {
        MinimizeBudget b;
        b.max_iterations = cfg.solver.max_iterations;
        const auto rep = minimize_gl(rec.field, p, b);
        row.energy = rep.energy.total;
        if (!rep.converged) row.note = rep.message;
      }
    }
    row.energy_per_log = row.energy / std::abs(std::log(eps));
    row.rel_gap = std::abs(row.energy_per_log - row.predicted) / row.predicted;
  } catch (const std::exception& e) {
    row.flagged = true;
    row.note = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// Runs every ε of the schedule, `threads` rows at a time.
inline ScalingStudy run_scaling_study(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ScalingStudy st;
  st.summary.ahom = homogenized_tensor(cfg.coefficient, cfg.solver.cell_n);
  st.summary.limit_lambda = cfg.limit_lambda();
  st.rows.resize(cfg.epsilons.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < st.rows.size(); k = next++)
      st.rows[k] = measure_row(cfg, st.summary.ahom, cfg.epsilons[k]);
  };
  const int nthreads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(st.rows.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::sort(st.rows.begin(), st.rows.end(), [](const ScalingRow& a, const ScalingRow& b) { return a.epsilon > b.epsilon; });

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : st.rows) {
    if (r.flagged) {
      ++st.summary.flagged;
      continue;
    }
    const double x = 1.0 / std::abs(std::log(r.epsilon)), y = r.energy_per_log - r.predicted;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 2 && m * sxx - sx * sx > 0.0) {
    st.summary.trend_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    st.summary.trend_intercept = (sy - *st.summary.trend_slope * sx) / m;
  }
  st.summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return st;
}

// ---------------------------------------------------------------------------
// Reports

inline void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows) {
  os << "epsilon,delta,lambda,energy,energy_per_log,predicted,rel_gap,flag\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", r.epsilon, r.delta, r.lambda_effective);
    os << buf;
    if (r.flagged) {
      std::snprintf(buf, sizeof buf, ",,%.17g,,1\n", r.predicted);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,0\n", r.energy, r.energy_per_log, r.predicted,
                    *r.rel_gap);
    }
    os << buf;
  }
}

inline nlohmann::json summary_json(const ScalingStudy& st, const ExperimentConfig& cfg) {
  const auto& s = st.summary;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : st.rows)
    rows.push_back({{"epsilon", r.epsilon}, {"flagged", r.flagged}, {"note", r.note}, {"seconds", r.seconds}});
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"config", cfg.echo},
          {"versions", {{"glhom", version}, {"nlohmann_json", NLOHMANN_JSON_VERSION_MAJOR * 10000 +
                                                                  NLOHMANN_JSON_VERSION_MINOR * 100 +
                                                                  NLOHMANN_JSON_VERSION_PATCH},
                        {"cplusplus", static_cast<long>(__cplusplus)}}},
          {"ahom", {{"a11", s.ahom.entries.a11}, {"a12", s.ahom.entries.a12}, {"a22", s.ahom.entries.a22},
                    {"n", s.ahom.n}, {"sqrt_det", std::sqrt(s.ahom.det())}}},
          {"ess_inf", cfg.coefficient.ess_inf().value},
          {"limit_lambda", s.limit_lambda},
          {"trend_slope", opt(s.trend_slope)},
          {"trend_intercept", opt(s.trend_intercept)},
          {"flagged", s.flagged},
          {"timings", {{"total_seconds", s.seconds}, {"rows", rows}}}};
}

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json.
inline void emit_report(const ScalingStudy& st, const ExperimentConfig& cfg, const std::string& dir) {
  require(!st.rows.empty(), "emit_report: no rows");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto base = std::filesystem::path(dir) / cfg.stem;
  std::ofstream csv(base.string() + ".csv", std::ios::binary);
  if (!csv) throw std::runtime_error("emit_report: cannot write " + base.string() + ".csv");
  write_scaling_csv(csv, st.rows);
  std::ofstream js(base.string() + ".json", std::ios::binary);
  if (!js) throw std::runtime_error("emit_report: cannot write " + base.string() + ".json");
  js << summary_json(st, cfg).dump(2) << "\n";
  if (!csv || !js) throw std::runtime_error("emit_report: write failed under " + dir);
}

// ---------------------------------------------------------------------------
// JSON views of solver results

inline nlohmann::json as_json(const Sym2& a) { return {{"a11", a.a11}, {"a12", a.a12}, {"a22", a.a22}}; }

inline nlohmann::json as_json(const HomogenizedTensor& t) {
  auto j = as_json(t.entries);
  j.update({{"n", t.n}, {"residual", t.residual}, {"sqrt_det", std::sqrt(t.det())}});
  return j;
}

inline nlohmann::json as_json(const RefinementResult& r) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : r.table) {
    auto e = as_json(row.entries);
    e.update({{"n", row.n}, {"residual", row.residual}});
    table.push_back(e);
  }
  nlohmann::json order = nlohmann::json::array();
  for (const auto& o : r.order) order.push_back(o ? nlohmann::json(*o) : nlohmann::json(nullptr));
  nlohmann::json j{{"tensor", as_json(r.tensor)}, {"table", table}, {"order", order}, {"extrapolated", r.extrapolated}};
  j["warning"] = r.warning ? nlohmann::json(*r.warning) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json as_json(const PsiEstimate& e) {
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& row : e.schedule) {
    nlohmann::json r{{"r_inner", row.r_inner}, {"r_outer", row.r_outer}, {"energy", row.energy}, {"per_log", row.per_log}};
    r["delta"] = row.delta ? nlohmann::json(*row.delta) : nlohmann::json(nullptr);
    schedule.push_back(r);
  }
  return {{"z", e.z},         {"value", e.value},     {"slope", e.slope}, {"fit_residual", e.fit_residual},
          {"warning", e.warning}, {"note", e.note}, {"schedule", schedule}};
}

inline nlohmann::json as_json(const VortexMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : mu.atoms()) atoms.push_back({{"x", a.position.x}, {"y", a.position.y}, {"z", a.charge}});
  return atoms;
}

inline nlohmann::json as_json(const FlatDistanceResult& r) {
  auto ref = [](const std::optional<AtomRef>& a) {
    return a ? nlohmann::json{{"measure", a->measure}, {"index", a->index}} : nlohmann::json(nullptr);
  };
  nlohmann::json plan = nlohmann::json::array();
  for (const auto& e : r.plan)
    plan.push_back({{"from", ref(e.from)}, {"to", ref(e.to)}, {"mass", e.mass}, {"unit_cost", e.unit_cost}});
  return {{"value", r.value},
          {"plan", plan},
          {"certificate", {{"transport_cost", r.certificate.transport_cost},
                           {"discharge_cost", r.certificate.discharge_cost},
                           {"units", r.certificate.units},
                           {"exhaustive", r.certificate.exhaustive}}}};
}

inline nlohmann::json as_json(const MinimizationReport& r) {
  return {{"energy", {{"total", r.energy.total}, {"gradient", r.energy.gradient}, {"potential", r.energy.potential}}},
          {"trace", r.trace},
          {"vortices", as_json(r.vortices)},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"message", r.message}};
}

}  // namespace glhom
