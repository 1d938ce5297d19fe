#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glhom/experiments.hpp"

using namespace glhom;

namespace {

const char* minimal = R"({
  "coefficient": {"kind": "checkerboard", "low": 1, "high": 4},
  "measure": {"atoms": [{"x": 0.5, "y": 0.5, "z": 1}]},
  "regime": {"kind": "delta_proportional"},
  "epsilon": {"k_min": 5, "k_max": 6}
})";

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("glhom_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(Config, MinimalGetsDefaults) {
  const auto cfg = parse_config_text(minimal);
  EXPECT_EQ(cfg.channel, Channel::proxy);
  EXPECT_EQ(cfg.regime, Regime::delta_proportional);
  EXPECT_DOUBLE_EQ(cfg.c, 1.0);
  ASSERT_EQ(cfg.epsilons.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.epsilons[0], 1.0 / 32);
  EXPECT_DOUBLE_EQ(cfg.epsilons[1], 1.0 / 64);
  EXPECT_EQ(cfg.threads, 1);
  EXPECT_FALSE(cfg.shift_cores());
  EXPECT_EQ(cfg.echo["solver"]["annulus_n_theta"], 256);
  EXPECT_EQ(cfg.echo["channel"], "proxy");
  EXPECT_EQ(cfg.echo["output"]["stem"], "scaling");
}

TEST(Config, PowerLawShiftsCoresByDefault) {
  auto j = nlohmann::json::parse(minimal);
  j["regime"] = {{"kind", "power_law"}, {"lambda", 0.5}, {"c", 0.5}};
  const auto cfg = parse_config_json(j);
  EXPECT_TRUE(cfg.shift_cores());
  EXPECT_DOUBLE_EQ(cfg.limit_lambda(), 0.5);
  EXPECT_DOUBLE_EQ(cfg.delta_for(0.01), 0.05);
}

TEST(Config, RejectsUnknownKeysWithLocation) {
  auto j = nlohmann::json::parse(minimal);
  j["solver"] = {{"annulus_n_theta", 256}, {"tolerance", 1e-3}};
  try {
    parse_config_json(j);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("tolerance"), std::string::npos);
    EXPECT_NE(m.find("/solver"), std::string::npos);
  }
}

TEST(Config, MalformedJsonReportsLineAndColumn) {
  const std::string m = config_error("{\n  \"channel\": \"proxy\",\n  oops\n}");
  EXPECT_NE(m.find("line 3"), std::string::npos) << m;
  EXPECT_NE(m.find("column"), std::string::npos) << m;
}

TEST(Config, RejectsBadValues) {
  auto with = [](const char* key, nlohmann::json v) {
    auto j = nlohmann::json::parse(minimal);
    j[key] = std::move(v);
    return config_error(j.dump());
  };
  EXPECT_NE(with("regime", {{"kind", "power_law"}, {"lambda", 1.0}}), "");
  EXPECT_NE(with("regime", {{"kind", "fast"}}), "");
  EXPECT_NE(with("epsilon", {{"values", {0.1, 0.2}}}), "");
  EXPECT_NE(with("epsilon", {{"values", {0.1, 1.5}}}), "");
  EXPECT_NE(with("epsilon", {{"values", {-0.1}}}), "");
  EXPECT_NE(with("channel", "exact"), "");
  EXPECT_NE(with("threads", 0), "");
  EXPECT_NE(with("coefficient", {{"kind", "checkerboard"}, {"low", -1}, {"high", 2}}), "");
  EXPECT_NE(with("measure", {{"atoms", nlohmann::json::array()}}), "");
  EXPECT_NE(with("solver", {{"annulus_n_theta", 250}}), "");
  EXPECT_NE(config_error(R"({"coefficient": {"kind": "constant", "value": 1}})"), "");
}

TEST(Config, FileReferencesResolveAgainstConfigDir) {
  const auto d = scratch_dir("refs");
  std::filesystem::create_directories(d);
  std::ofstream(d / "mu.csv") << "x,y,z\n0.3,0.3,1\n0.7,0.7,-1\n";
  std::ofstream(d / "a.txt") << "2\n1 4\n4 1\n";
  std::ofstream(d / "cfg.json") << R"({"coefficient": {"kind": "raster", "path": "a.txt"},
    "measure": {"csv": "mu.csv"}, "regime": {"kind": "log_slow"}, "epsilon": {"values": [0.1, 0.05]}})";
  const auto cfg = parse_config((d / "cfg.json").string());
  EXPECT_EQ(cfg.measure.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.coefficient.alpha(), 1.0);
  EXPECT_DOUBLE_EQ(cfg.coefficient.beta(), 4.0);
  EXPECT_DOUBLE_EQ(cfg.limit_lambda(), 0.0);
  std::filesystem::remove_all(d);
}

TEST(Regimes, LambdaEffectiveMatchesConfigured) {
  const double c = 0.5;
  for (double lambda : {0.0, 0.25, 0.5, 0.9}) {
    auto j = nlohmann::json::parse(minimal);
    j["regime"] = {{"kind", "power_law"}, {"lambda", lambda}, {"c", c}};
    const auto cfg = parse_config_json(j);
    for (int k = 4; k <= 20; ++k) {
      const double eps = std::ldexp(1.0, -k), L = std::abs(std::log(eps));
      const double le = lambda_effective(eps, cfg.delta_for(eps));
      // |log δ| = λ|log ε| − log c
      EXPECT_LE(std::abs(le - lambda), std::abs(std::log(c)) / L + 1e-12) << lambda << " k=" << k;
    }
  }
}

TEST(Regimes, LogSlowTendsToZero) {
  auto j = nlohmann::json::parse(minimal);
  j["regime"] = {{"kind", "log_slow"}};
  const auto cfg = parse_config_json(j);
  double prev = 1.0;
  for (int k = 4; k <= 40; k += 4) {
    const double eps = std::ldexp(1.0, -k);
    const double le = lambda_effective(eps, cfg.delta_for(eps));
    EXPECT_LT(le, prev);
    prev = le;
  }
  EXPECT_LT(prev, 0.15);
}

TEST(Proxy, ConstantCoefficientMatchesLogRatio) {
  const VortexMeasure mu(unit_square, {{{0.5, 0.5}, 1}});
  const auto a = PeriodicCoefficient::constant(1.0);
  const double eps = 1.0 / 128;
  const auto pr = core_radius_proxy(mu, eps, eps, a, HomogenizedTensor::analytic(Sym2::identity(1.0)), 256);
  const double exact = two_pi * std::log(0.5 / eps);
  EXPECT_NEAR(pr.energy, exact, 2e-3 * exact);
}

TEST(Proxy, PairUsesHalfDistance) {
  const VortexMeasure mu(unit_square, {{{0.4, 0.5}, 1}, {{0.6, 0.5}, -2}});
  const auto a = PeriodicCoefficient::constant(2.0);
  const double eps = 1.0 / 256;
  const auto pr = core_radius_proxy(mu, eps, eps, a, HomogenizedTensor::analytic(Sym2::identity(2.0)), 256);
  const double exact = 2.0 * two_pi * (1.0 + 4.0) * std::log(0.1 / eps);
  EXPECT_NEAR(pr.energy, exact, 2e-3 * exact);
  EXPECT_THROW(core_radius_proxy(VortexMeasure(unit_square, {{{0.5, 0.5}, 1}, {{0.51, 0.5}, 1}}), eps, eps, a,
                                 HomogenizedTensor::analytic(Sym2::identity(2.0)), 256),
               PreconditionError);
}

TEST(Proxy, ShiftedCoresFollowLattice) {
  const VortexMeasure mu(unit_square, {{{0.53, 0.41}, 1}});
  const auto s = shifted_cores(mu, PeriodicCoefficient::smooth_trig(2.0, 1.0), 0.125);
  EXPECT_NEAR(s.atoms()[0].position.x, 0.5625, 1e-15);
  EXPECT_NEAR(s.atoms()[0].position.y, 0.375, 1e-15);
}

TEST(Study, ConstantCoefficientPerLogBelowPrediction) {
  auto j = nlohmann::json::parse(minimal);
  j["coefficient"] = {{"kind", "constant"}, {"value", 1.0}};
  j["epsilon"] = {{"k_min", 5}, {"k_max", 9}};
  j["solver"] = {{"cell_n", 16}};
  j["threads"] = 2;
  const auto cfg = parse_config_json(j);
  const auto st = run_scaling_study(cfg);
  ASSERT_EQ(st.rows.size(), 5u);
  EXPECT_LE(*st.rows.back().rel_gap, 0.15);
  double prev_gap = 1e300;
  for (const auto& r : st.rows) {
    ASSERT_FALSE(r.flagged) << r.note;
    EXPECT_DOUBLE_EQ(r.predicted, two_pi);
    EXPECT_LT(r.energy_per_log, two_pi);
    EXPECT_LT(*r.rel_gap, prev_gap);
    prev_gap = *r.rel_gap;
  }
  ASSERT_TRUE(st.summary.trend_slope.has_value());
  // (per_log − 2π) = −2π·log 2/|log ε| exactly for the continuum annulus
  EXPECT_NEAR(*st.summary.trend_slope, -two_pi * std::log(2.0), 0.05);
}

TEST(Study, CheckerboardQuarterPeriodGapShrinks) {
  auto j = nlohmann::json::parse(minimal);
  j["regime"] = {{"kind", "delta_proportional"}, {"c", 0.25}};
  j["epsilon"] = {{"k_min", 5}, {"k_max", 9}};
  j["solver"] = {{"cell_n", 128}};
  const auto st = run_scaling_study(parse_config_json(j));
  const double root_det = std::sqrt(st.summary.ahom.det());
  double prev = 1e300;
  for (const auto& r : st.rows) {
    ASSERT_FALSE(r.flagged) << r.note;
    EXPECT_NEAR(r.predicted, 4.0 * pi, 4.0 * pi * 0.005);
    EXPECT_DOUBLE_EQ(r.predicted, two_pi * root_det);
    EXPECT_LT(*r.rel_gap, prev);
    prev = *r.rel_gap;
  }
}

TEST(Study, LogSlowPredictsEssInf) {
  auto j = nlohmann::json::parse(minimal);
  j["regime"] = {{"kind", "log_slow"}};
  j["epsilon"] = {{"values", {1.0 / 64}}};
  j["solver"] = {{"cell_n", 32}};
  const auto st = run_scaling_study(parse_config_json(j));
  EXPECT_DOUBLE_EQ(st.rows[0].predicted, two_pi * 1.0);
  EXPECT_DOUBLE_EQ(st.summary.limit_lambda, 0.0);
}

TEST(Study, FailingRowsAreFlagged) {
  auto j = nlohmann::json::parse(minimal);
  j["measure"] = {{"atoms", {{{"x", 0.5}, {"y", 0.5}, {"z", 1}}, {{"x", 0.52}, {"y", 0.5}, {"z", -1}}}}};
  j["epsilon"] = {{"values", {0.05, 0.001}}};
  j["solver"] = {{"cell_n", 16}};
  const auto st = run_scaling_study(parse_config_json(j));
  ASSERT_EQ(st.rows.size(), 2u);
  EXPECT_TRUE(st.rows[0].flagged);
  EXPECT_FALSE(st.rows[0].note.empty());
  EXPECT_FALSE(st.rows[1].flagged);
  EXPECT_EQ(st.summary.flagged, 1);
  std::ostringstream os;
  write_scaling_csv(os, st.rows);
  std::string line;
  std::istringstream is(os.str());
  std::getline(is, line);
  EXPECT_EQ(line, "epsilon,delta,lambda,energy,energy_per_log,predicted,rel_gap,flag");
  std::getline(is, line);
  EXPECT_EQ(line.substr(line.size() - 3), ",,1");
}

TEST(Report, DeterministicAcrossRunsAndThreads) {
  auto j = nlohmann::json::parse(minimal);
  j["epsilon"] = {{"k_min", 5}, {"k_max", 7}};
  j["solver"] = {{"cell_n", 32}, {"annulus_n_theta", 64}};
  const auto d = scratch_dir("report");
  auto cfg = parse_config_json(j);
  emit_report(run_scaling_study(cfg), cfg, (d / "a").string());
  cfg.threads = 3;
  emit_report(run_scaling_study(cfg), cfg, (d / "b").string());
  const std::string a = slurp(d / "a" / "scaling.csv"), b = slurp(d / "b" / "scaling.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  const auto side = nlohmann::json::parse(slurp(d / "a" / "scaling.json"));
  EXPECT_EQ(side["config"]["regime"]["kind"], "delta_proportional");
  EXPECT_EQ(side["versions"]["glhom"], version);
  EXPECT_TRUE(side["timings"].contains("total_seconds"));
  std::filesystem::remove_all(d);
}

TEST(Report, OneRowWritesTwoFiles) {
  const auto d = scratch_dir("one");
  auto cfg = parse_config_text(minimal);
  cfg.stem = "single";
  ScalingStudy st;
  ScalingRow r;
  r.epsilon = 0.03125;
  r.delta = 0.03125;
  r.lambda_effective = 1.0;
  r.energy = 30.0;
  r.energy_per_log = 30.0 / std::log(32.0);
  r.predicted = 4.0 * pi;
  r.rel_gap = 0.25;
  st.rows.push_back(r);
  emit_report(st, cfg, d.string());
  const std::string csv = slurp(d / "single.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_TRUE(std::filesystem::exists(d / "single.json"));
  EXPECT_THROW(emit_report(ScalingStudy{}, cfg, d.string()), PreconditionError);
  std::filesystem::remove_all(d);
}

TEST(Report, UnwritableDirectoryThrows) {
  const auto d = scratch_dir("blocked");
  std::filesystem::create_directories(d);
  std::ofstream(d / "file") << "x";
  auto cfg = parse_config_text(minimal);
  ScalingStudy st;
  st.rows.push_back({});
  st.rows[0].flagged = true;
  EXPECT_ANY_THROW(emit_report(st, cfg, (d / "file" / "sub").string()));
  std::filesystem::remove_all(d);
}
