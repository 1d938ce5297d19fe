#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "glhom/flat_distance.hpp"
#include "glhom/gl_solver.hpp"

using namespace glhom;

namespace {

GLParameters unit_params(double eps, int nx, PeriodicCoefficient a = PeriodicCoefficient::constant(1.0)) {
  GLParameters p;
  p.epsilon = eps;
  p.delta = eps;
  p.coefficient = std::move(a);
  p.nx = nx;
  return p;
}

VortexMeasure single(Point x = {0.5, 0.5}, int z = 1) { return VortexMeasure(unit_square, {{x, z}}); }

}  // namespace

TEST(GLEnergy, UnitModulusHasNoPotential) {
  const auto p = unit_params(0.05, 64);
  const auto v = make_vector(make_grid(p), [](Point x) { return Point{std::cos(3.0 * x.x), std::sin(3.0 * x.x)}; });
  const auto e = gl_energy(v, p);
  EXPECT_NEAR(e.potential, 0.0, 1e-12);
  // chord differences 2·sin(3h/2) of a phase with |∇θ| = 3
  const double h = v.grid.h(), chord = std::sin(1.5 * h) / (1.5 * h);
  EXPECT_NEAR(e.gradient, 9.0 * chord * chord, 1e-12);
  EXPECT_DOUBLE_EQ(e.total, e.gradient + e.potential);
}

TEST(GLEnergy, AnnulusOfUnitVortex) {
  const double eps = 0.05;
  GLParameters p = unit_params(eps, 640);
  p.domain = {-1.0, 1.0, -1.0, 1.0};
  CartesianGrid g = make_grid(p);
  std::vector<std::uint8_t> mask(g.node_count(), 1);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const double r = norm(g.node(k));
    if (r < eps || r > 1.0) mask[k] = 0;
  }
  g.set_mask(mask);
  const auto v = make_vector(g, [](Point x) { return x * (1.0 / norm(x)); });
  const double expected = two_pi * std::abs(std::log(eps));
  EXPECT_NEAR(gl_energy(v, p).gradient, expected, 0.02 * expected);
}

TEST(GLEnergy, TwoSidedComparison) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto p = unit_params(0.05, 80, PeriodicCoefficient::checkerboard(1.0, 4.0));
  for (int trial = 0; trial < 5; ++trial) {
    CartesianVector v(make_grid(p));
    for (std::size_t k = 0; k < v.size(); ++k) {
      v.c1[k] = u(rng);
      v.c2[k] = u(rng);
    }
    const double hom = unit_dirichlet(v, p), grad = gl_energy(v, p).gradient;
    EXPECT_LE(1.0 * hom, grad * (1.0 + 1e-12));
    EXPECT_LE(grad, 4.0 * hom * (1.0 + 1e-12));
  }
}

TEST(Recovery, LinearCorePotential) {
  const double eps = 1.0 / 32;
  const auto p = unit_params(eps, 256);
  const auto rec = recovery_field(single(), p, 0.5, 0.1);
  // ∫_{B_ε} ε⁻²(1 − r²/ε²)² = π/3
  EXPECT_NEAR(gl_energy(rec.field, p).potential, pi / 3.0, 0.03 * pi / 3.0);
}

TEST(Recovery, TopologyMatchesMeasure) {
  const auto p = unit_params(1.0 / 64, 256);
  const VortexMeasure mu(unit_square, {{{0.3, 0.31}, 1}, {{0.7, 0.52}, -2}, {{0.42, 0.77}, 2}});
  const auto rec = recovery_field(mu, p, 0.85, 0.1);
  const auto found = detect_vortices(rec.field);
  ASSERT_EQ(found.size(), mu.size());
  const double h = rec.field.grid.h();
  for (const Atom& a : mu.atoms()) {
    bool hit = false;
    for (const Atom& b : found.atoms())
      hit = hit || (b.charge == a.charge && std::abs(b.position.x - a.position.x) <= h &&
                    std::abs(b.position.y - a.position.y) <= h);
    EXPECT_TRUE(hit) << a.position.x << "," << a.position.y;
  }
  EXPECT_EQ(boundary_degree(rec.field).degree, mu.total_charge());
  EXPECT_TRUE(rec.annulus_layer);
}

TEST(Recovery, OscillatingAnnulusLayer) {
  const auto p = unit_params(1.0 / 64, 256, PeriodicCoefficient::checkerboard(1.0, 4.0));
  const auto rec = recovery_field(single({0.45, 0.55}), p, 0.75, 0.1);
  EXPECT_TRUE(rec.annulus_layer);
  EXPECT_GT(rec.annulus_energy, 0.0);
  const auto found = detect_vortices(rec.field);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found.atoms()[0].charge, 1);
  // the field is continuous: no spurious plaquette windings outside the core
  EXPECT_EQ(boundary_degree(rec.field).degree, 1);
}

TEST(Recovery, ShiftedCoresSitOnLatticeMinima) {
  GLParameters p = unit_params(1.0 / 64, 256, PeriodicCoefficient::smooth_trig(2.0, 1.0));
  p.delta = 1.0 / 8;
  RecoveryOptions opt;
  opt.shift_cores = true;
  const auto rec = recovery_field(single({0.53, 0.41}), p, 0.5, 0.1, opt);
  // δ⌊x/δ⌋ + δ·(½, 0)
  EXPECT_NEAR(rec.cores.atoms()[0].position.x, 0.5 + 0.0625, 1e-15);
  EXPECT_NEAR(rec.cores.atoms()[0].position.y, 0.375, 1e-15);
  const auto found = detect_vortices(rec.field);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_NEAR(found.atoms()[0].position.x, 0.5625, rec.field.grid.h());
}

TEST(Recovery, EnergyPerLogNearTwoPi) {
  const double eps = 1.0 / 256;
  const auto p = unit_params(eps, 1024);
  const auto rec = recovery_field(single(), p, 0.5, 0.1);
  const double per_log = gl_energy(rec.field, p).total / std::abs(std::log(eps));
  EXPECT_NEAR(per_log, two_pi, 0.15 * two_pi);
}

TEST(Recovery, PotentialBoundedAcrossEpsilon) {
  const VortexMeasure mu(unit_square, {{{0.3, 0.3}, 1}, {{0.7, 0.6}, -1}});
  for (int k = 4; k <= 7; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const auto p = unit_params(eps, 4 << k);
    const double pot = gl_energy(recovery_field(mu, p, 0.5, 0.1).field, p).potential;
    EXPECT_LE(pot, 2.0 * pi / 3.0 * 1.1) << "k=" << k;
  }
}

TEST(Recovery, ModifiedJacobianApproachesMeasure) {
  const VortexMeasure mu(unit_square, {{{0.31, 0.33}, 1}, {{0.68, 0.61}, -1}});
  double prev = 1e300;
  for (int k = 4; k <= 6; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const auto p = unit_params(eps, 4 << k);
    const auto v = recovery_field(mu, p, 0.5, 0.1).field;
    const auto jm = jacobian_measure(modified_jacobian(v, 0.5).field);
    const double d = flat_distance(jm, mu).value;
    EXPECT_LE(d, prev * (1.0 + 1e-12)) << "k=" << k;
    EXPECT_LE(d, 4.0 * eps);
    prev = d;
  }
}

TEST(Recovery, Preconditions) {
  const auto p = unit_params(1.0 / 64, 128);
  EXPECT_THROW(recovery_field(single(), p, 0.5, 0.1), PreconditionError);  // h = ε/2
  const auto q = unit_params(1.0 / 64, 256);
  EXPECT_THROW(recovery_field(single({0.02, 0.5}), q, 0.5, 0.1), PreconditionError);
  EXPECT_THROW(recovery_field(single(), q, 1.0, 0.1), PreconditionError);
  EXPECT_THROW(recovery_field(single(), q, 0.5, 0.0), PreconditionError);
}

TEST(Minimize, DegreeOneDisk) {
  const double eps = 1.0 / 64;
  const auto p = unit_params(eps, 256);
  const auto rec = recovery_field(single(), p, 0.5, 0.1);
  MinimizeBudget b;
  b.max_iterations = 3000;
  const auto rep = minimize_gl(rec.field, p, b);
  for (std::size_t k = 1; k < rep.trace.size(); ++k) ASSERT_LE(rep.trace[k], rep.trace[k - 1]);
  EXPECT_LE(rep.energy.total, gl_energy(rec.field, p).total);
  ASSERT_EQ(rep.vortices.size(), 1u);
  EXPECT_EQ(rep.vortices.atoms()[0].charge, 1);
  EXPECT_EQ(boundary_degree(rep.field).degree, 1);
  const double ratio = rep.energy.total / (two_pi * std::abs(std::log(eps)));
  EXPECT_GE(ratio, 0.85);
  EXPECT_LE(ratio, 1.15);
}

TEST(Minimize, CheckerboardBetweenConstantBounds) {
  const double eps = 1.0 / 32;
  auto final_energy = [&](PeriodicCoefficient a) {
    const auto p = unit_params(eps, 128, std::move(a));
    MinimizeBudget b;
    b.max_iterations = 1500;
    return minimize_gl(recovery_field(single(), p, 0.5, 0.1).field, p, b).energy.total;
  };
  const double low = final_energy(PeriodicCoefficient::constant(1.0));
  const double mid = final_energy(PeriodicCoefficient::checkerboard(1.0, 4.0));
  const double high = final_energy(PeriodicCoefficient::constant(4.0));
  EXPECT_LT(low, mid);
  EXPECT_LT(mid, high);
}

TEST(Minimize, RejectsBoundaryMismatch) {
  GLParameters p = unit_params(1.0 / 16, 64);
  const auto v = make_vector(make_grid(p), [](Point) { return Point{0.5, 0.0}; });
  EXPECT_THROW(minimize_gl(v, p), PreconditionError);
  const VortexMeasure mu = single();
  p.boundary = [mu](Point x) { return canonical_phase(mu, x); };
  const auto w = make_vector(make_grid(p), [](Point) { return Point{1.0, 0.0}; });
  EXPECT_THROW(minimize_gl(w, p), PreconditionError);
}
