#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "glhom/glhom.hpp"

namespace fs = std::filesystem;
using namespace glhom;
using nlohmann::json;

namespace {

constexpr int exit_config = 2;
constexpr int exit_solver = 3;

struct Globals {
  std::string config;
  std::string out = ".";
  int threads = 0;  // 0: take the config value
  std::uint64_t seed = 0;
};

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str());
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  return f;
}

void write_json(const fs::path& dir, const std::string& name, const json& j) {
  auto f = open_out(dir, name);
  f << j.dump(2) << "\n";
}

std::vector<double> number_list(const ConfigReader& r, const char* key) {
  const auto& v = r.raw_required(key);
  if (!v.is_array() || v.empty()) throw ConfigError("config: " + r.at(key) + " must be a nonempty array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("config: " + r.at(key) + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

int run_threads(const Globals& g, int fallback) { return g.threads > 0 ? g.threads : std::max(1, fallback); }

// ---------------------------------------------------------------------------

int cmd_cell(const Globals& g) {
  const json j = load_json(g.config);
  const ConfigReader r(j, "");
  r.allow({"coefficient", "n", "levels"});
  json echo;
  const auto a = parse_coefficient(r.raw_required("coefficient"), "/coefficient", fs::path(g.config).parent_path(), echo);
  json out{{"coefficient", echo}};
  if (r.has("levels")) {
    std::vector<int> ns;
    for (double v : number_list(r, "levels")) ns.push_back(static_cast<int>(v));
    const auto res = refine_tensor(a, ns);
    out["refinement"] = as_json(res);
    out["tensor"] = as_json(res.tensor);
  } else {
    out["tensor"] = as_json(homogenized_tensor(a, r.integer("n", 128)));
  }
  write_json(g.out, "cell.json", out);
  const auto& t = out["tensor"];
  std::printf("A_hom = [[%.10g, %.10g], [%.10g, %.10g]]  sqrt(det) = %.10g\n", t["a11"].get<double>(),
              t["a12"].get<double>(), t["a12"].get<double>(), t["a22"].get<double>(), t["sqrt_det"].get<double>());
  return 0;
}

int cmd_psi(const Globals& g) {
  const json j = load_json(g.config);
  const ConfigReader r(j, "");
  r.allow({"coefficient", "mode", "delta", "charges", "ratios", "trace", "n_theta", "cell_n", "threads"});
  json echo;
  const auto a = parse_coefficient(r.raw_required("coefficient"), "/coefficient", fs::path(g.config).parent_path(), echo);
  const std::string mode_name = r.string("mode", "homogenized");
  const std::string trace_name = r.string("trace", "fixed_degree");
  if (trace_name != "fixed_degree" && trace_name != "fixed_trace") throw ConfigError("config: /trace: unknown trace mode");
  const TraceMode trace = trace_name == "fixed_degree" ? TraceMode::fixed_degree : TraceMode::fixed_trace;
  std::vector<int> charges;
  for (double z : number_list(r, "charges")) charges.push_back(static_cast<int>(z));
  const auto ratios = number_list(r, "ratios");
  PsiResolution res;
  res.n_theta = r.integer("n_theta", 256);
  const auto ahom = homogenized_tensor(a, r.integer("cell_n", 128));
  CoefficientMode mode;
  if (mode_name == "homogenized") mode = ahom;
  else if (mode_name == "oscillating") mode = OscillatingCoefficient{a, r.number("delta"), ahom};
  else throw ConfigError("config: /mode: unknown mode '" + mode_name + "'");

  std::vector<PsiEstimate> est(charges.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (std::size_t k = next++; k < charges.size(); k = next++) {
      try {
        est[k] = psi_of_z(mode, charges[k], ratios, res, trace);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min<int>(run_threads(g, r.integer("threads", 1)), static_cast<int>(charges.size()));
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  json out{{"coefficient", echo}, {"mode", mode_name}, {"trace", trace_name}, {"ahom", as_json(ahom)}};
  out["estimates"] = json::array();
  std::map<int, double> table;
  for (const auto& e : est) {
    out["estimates"].push_back(as_json(e));
    table[e.z] = e.value;
    std::printf("psi(%d) = %.10g  (slope %.4g, residual %.3g)%s\n", e.z, e.value, e.slope, e.fit_residual,
                e.warning ? "  [warning]" : "");
  }
  json cap = json::object();
  for (int z : charges) {
    try {
      const auto c = capital_psi(table, z);
      cap[std::to_string(z)] = {{"value", c.value}, {"splitting", c.splitting}};
    } catch (const PreconditionError&) {
    }
  }
  out["capital_psi"] = cap;
  write_json(g.out, "psi.json", out);
  return 0;
}

int cmd_minimize(const Globals& g) {
  const json j = load_json(g.config);
  const ConfigReader r(j, "");
  r.allow({"coefficient", "measure", "epsilon", "delta", "nx", "s", "eta", "shift_cores", "max_iterations", "rel_tol",
           "perturbation"});
  const fs::path base = fs::path(g.config).parent_path();
  json echo;
  GLParameters p;
  p.coefficient = parse_coefficient(r.raw_required("coefficient"), "/coefficient", base, echo["coefficient"]);
  const VortexMeasure mu = parse_measure(r.raw_required("measure"), "/measure", base, echo["measure"]);
  p.epsilon = r.number("epsilon");
  p.delta = r.number("delta", p.epsilon);
  p.nx = r.integer("nx", static_cast<int>(std::ceil(4.0 / p.epsilon)));
  RecoveryOptions opt;
  if (r.has("shift_cores")) opt.shift_cores = r.boolean("shift_cores");
  const double s = r.number("s", default_s(p.epsilon));
  const double eta = r.number("eta", 0.1);
  MinimizeBudget b;
  b.max_iterations = r.integer("max_iterations", b.max_iterations);
  b.rel_tol = r.number("rel_tol", b.rel_tol);
  const double amp = r.number("perturbation", 0.0);
  if (amp < 0.0) throw ConfigError("config: /perturbation must be nonnegative");

  const auto rec = recovery_field(mu, p, s, eta, opt);
  CartesianVector init = rec.field;
  if (amp > 0.0) {
    std::mt19937_64 rng(g.seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    const auto& grid = init.grid;
    for (int jj = 1; jj < grid.ny(); ++jj)
      for (int ii = 1; ii < grid.nx(); ++ii) {
        const auto k = grid.index(ii, jj);
        init.c1[k] += u(rng);
        init.c2[k] += u(rng);
      }
  }
  const auto rep = minimize_gl(init, p, b);
  json out = as_json(rep);
  out["config"] = j;
  out["seed"] = g.seed;
  out["initial_energy"] = gl_energy(init, p).total;
  out["energy_per_log"] = rep.energy.total / std::abs(std::log(p.epsilon));
  write_json(g.out, "minimize.json", out);
  {
    auto f = open_out(g.out, "field.csv");
    write_csv(f, rep.field);
  }
  {
    auto f = open_out(g.out, "vortices.csv");
    write_csv(f, rep.vortices);
  }
  std::printf("energy %.10g after %d iterations (%s); %zu vortices\n", rep.energy.total, rep.iterations,
              rep.message.c_str(), rep.vortices.size());
  return 0;
}

int cmd_balls(const Globals& g, const std::string& file, double t_final) {
  std::ifstream in(file);
  if (!in) throw ConfigError("balls: cannot open '" + file + "'");
  const auto tl = evolve(read_balls_csv(in), t_final);
  {
    auto f = open_out(g.out, "events.csv");
    write_events_csv(f, tl);
  }
  {
    auto f = open_out(g.out, "family.csv");
    write_family_csv(f, tl, t_final);
  }
  std::printf("%zu merge events; %zu balls at t = %g\n", tl.events().size(), tl.family_at(t_final).size(), t_final);
  return 0;
}

int cmd_scaling(const Globals& g, bool out_given) {
  auto cfg = parse_config(g.config);
  if (g.threads > 0) cfg.threads = g.threads;
  const std::string dir = out_given ? g.out : cfg.out_dir;
  const auto st = run_scaling_study(cfg);
  emit_report(st, cfg, dir);
  std::printf("%-12s %-12s %-8s %-14s %-10s %-10s %s\n", "epsilon", "delta", "lambda", "energy", "per_log",
              "predicted", "rel_gap");
  for (const auto& row : st.rows) {
    if (row.flagged) {
      std::printf("%-12.6g %-12.6g %-8.4f flagged: %s\n", row.epsilon, row.delta, row.lambda_effective,
                  row.note.c_str());
    } else {
      std::printf("%-12.6g %-12.6g %-8.4f %-14.8g %-10.6g %-10.6g %.4f\n", row.epsilon, row.delta,
                  row.lambda_effective, row.energy, row.energy_per_log, row.predicted, *row.rel_gap);
    }
  }
  if (st.summary.flagged == static_cast<int>(st.rows.size())) {
    std::fprintf(stderr, "scaling: every row failed\n");
    return exit_solver;
  }
  return 0;
}

int cmd_flat(const Globals& g, const std::string& a, const std::string& b) {
  auto load = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("flat: cannot open '" + path + "'");
    return read_measure_csv(in);
  };
  const auto res = flat_distance(load(a), load(b));
  write_json(g.out, "flat.json", as_json(res));
  {
    auto f = open_out(g.out, "flat_plan.csv");
    write_plan_csv(f, res);
  }
  std::printf("%.17g\n", res.value);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ginzburg-Landau vortex energetics in periodic media"};
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", g.config, "JSON config file");
    if (need_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", g.out, "output directory");
    sub->add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", g.seed, "seed for minimizer initial perturbations");
  };

  auto* cell = app.add_subcommand("cell", "homogenized tensor of a periodic coefficient");
  add_globals(cell, true);
  auto* psi = app.add_subcommand("psi", "singularity costs psi(z) and Psi(z)");
  add_globals(psi, true);
  auto* minimize = app.add_subcommand("minimize", "one Ginzburg-Landau minimization from a recovery field");
  add_globals(minimize, true);
  auto* balls = app.add_subcommand("balls", "ball-growth timeline from a ball list (x,y,r,w)");
  add_globals(balls, false);
  std::string ball_file;
  double t_final = 10.0;
  balls->add_option("file", ball_file, "ball list CSV")->required()->check(CLI::ExistingFile);
  balls->add_option("--t-final", t_final, "final growth time")->check(CLI::NonNegativeNumber);
  auto* scaling = app.add_subcommand("scaling", "energy scaling study over an epsilon schedule");
  add_globals(scaling, true);
  auto* flat = app.add_subcommand("flat", "flat distance between two measure CSVs");
  add_globals(flat, false);
  std::string flat_a, flat_b;
  flat->add_option("first", flat_a, "measure CSV (x,y,z)")->required()->check(CLI::ExistingFile);
  flat->add_option("second", flat_b, "measure CSV (x,y,z)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    if (*cell) return cmd_cell(g);
    if (*psi) return cmd_psi(g);
    if (*minimize) return cmd_minimize(g);
    if (*balls) return cmd_balls(g, ball_file, t_final);
    if (*scaling) return cmd_scaling(g, scaling->count("--out") > 0);
    if (*flat) return cmd_flat(g, flat_a, flat_b);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return exit_config;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return exit_config;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config: %s\n", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return exit_solver;
  }
  return 0;
}
