#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "glhom/fields.hpp"

using namespace glhom;

namespace {

CartesianGrid unit_grid(int n) { return CartesianGrid({0.0, 0.0}, 1.0, 1.0, n, n); }

// Vortex (x/|x|)^z about the origin.
auto canonical(int z) {
  return [z](Point p) {
    const double t = z * std::atan2(p.y, p.x);
    return Point{std::cos(t), std::sin(t)};
  };
}

}  // namespace

TEST(Grids, RejectsDegenerateShapes) {
  EXPECT_THROW(CartesianGrid({0, 0}, 1.0, 1.0, 3, 8), PreconditionError);
  EXPECT_THROW(CartesianGrid({0, 0}, 1.0, 2.0, 8, 8), PreconditionError);
  EXPECT_THROW(PolarGrid({0, 0}, 1.0, 0.5, 16, 32), PreconditionError);
  EXPECT_THROW(PolarGrid({0, 0}, 1.0, 2.0, 4, 32), PreconditionError);
  const PolarGrid g({0, 0}, 0.5, 3.0, 16, 32);
  for (int j = 1; j < g.n_r(); ++j) EXPECT_GT(g.rho(j), g.rho(j - 1));
  EXPECT_DOUBLE_EQ(g.rho(0), 0.5);
  EXPECT_DOUBLE_EQ(g.rho(g.n_r() - 1), 3.0);
}

TEST(Gradient, LinearFieldExact) {
  const auto g = unit_grid(16);
  const auto u = make_scalar(g, [](Point p) { return 3.0 * p.x; });
  const auto du = gradient(u);
  for (std::size_t k = 0; k < du.size(); ++k) {
    EXPECT_NEAR(du.c1[k], 3.0, 1e-12);
    EXPECT_NEAR(du.c2[k], 0.0, 1e-12);
  }
}

TEST(Gradient, ConstantFieldIsZero) {
  const auto u = make_scalar(unit_grid(8), [](Point) { return 2.5; });
  const auto du = gradient(u);
  for (std::size_t k = 0; k < du.size(); ++k) {
    EXPECT_EQ(du.c1[k], 0.0);
    EXPECT_EQ(du.c2[k], 0.0);
  }
}

TEST(Gradient, SecondOrderOnSmoothField) {
  auto err = [](int n) {
    const auto u = make_scalar(unit_grid(n), [](Point p) { return std::sin(2 * p.x) * std::exp(p.y); });
    const auto du = gradient(u);
    double e = 0.0;
    for (std::size_t k = 0; k < du.size(); ++k) {
      const Point p = u.grid.node(k);
      e = std::max(e, std::abs(du.c1[k] - 2 * std::cos(2 * p.x) * std::exp(p.y)));
      e = std::max(e, std::abs(du.c2[k] - std::sin(2 * p.x) * std::exp(p.y)));
    }
    return e;
  };
  EXPECT_GE(err(32) / err(64), 3.5);
  EXPECT_GE(err(64) / err(128), 3.5);
}

TEST(Gradient, MaskedStencilsFallBackToOneSided) {
  auto g = unit_grid(32);
  g.excise_disk({0.5, 0.5}, 0.2);
  const auto u = make_scalar(g, [](Point p) { return p.x * p.x + 2.0 * p.y; });
  const auto du = gradient(u);
  for (int j = 0; j <= 32; ++j)
    for (int i = 0; i <= 32; ++i) {
      const std::size_t k = g.index(i, j);
      if (!g.active(i, j)) {
        EXPECT_EQ(du.c1[k], 0.0);
        continue;
      }
      // quadratic data: one-sided second-order stencils are exact
      EXPECT_NEAR(du.c1[k], 2.0 * g.node(i, j).x, 1e-9);
      EXPECT_NEAR(du.c2[k], 2.0, 1e-9);
    }
}

TEST(Gradient, PolarAngleWithDeclaredJump) {
  const PolarGrid g({0.0, 0.0}, 1.0, 3.0, 32, 64);
  PolarScalar theta(g);
  for (int j = 0; j < g.n_r(); ++j)
    for (int k = 0; k < g.n_theta(); ++k) theta[g.index(j, k)] = g.lifting_angle(k);
  theta.jump = two_pi;
  const auto d = gradient(theta);
  for (int j = 0; j < g.n_r(); ++j)
    for (int k = 0; k < g.n_theta(); ++k) {
      EXPECT_NEAR(d.c1[g.index(j, k)], 0.0, 1e-12);
      EXPECT_NEAR(d.c2[g.index(j, k)], 1.0 / g.rho(j), 1e-12);
    }
}

TEST(Gradient, PolarRadialDerivativeSecondOrder) {
  auto err = [](int nr) {
    const PolarGrid g({0.0, 0.0}, 1.0, 4.0, nr, 32);
    PolarScalar u(g);
    for (int j = 0; j < nr; ++j)
      for (int k = 0; k < 32; ++k) u[g.index(j, k)] = g.rho(j) * g.rho(j);
    const auto d = gradient(u);
    double e = 0;
    for (int j = 0; j < nr; ++j) e = std::max(e, std::abs(d.c1[g.index(j, 0)] - 2.0 * g.rho(j)));
    return e;
  };
  EXPECT_GE(err(32) / err(64), 3.5);
}

TEST(Integrate, ConstantsAndZero) {
  const auto one = make_scalar(unit_grid(10), [](Point) { return 1.0; });
  EXPECT_NEAR(integrate(one), 1.0, 1e-12);
  const auto zero = make_scalar(unit_grid(10), [](Point) { return 0.0; });
  EXPECT_EQ(integrate(zero), 0.0);
  CartesianScalar cells(unit_grid(10), 1.0, Staggering::cell);
  EXPECT_NEAR(integrate(cells), 1.0, 1e-12);
}

TEST(Integrate, PolarInverseSquare) {
  const PolarGrid g({0.2, -0.1}, 1.0, std::exp(1.0), 64, 128);
  PolarScalar f(g);
  for (int j = 0; j < g.n_r(); ++j)
    for (int k = 0; k < g.n_theta(); ++k) f[g.index(j, k)] = 1.0 / (g.rho(j) * g.rho(j));
  EXPECT_NEAR(integrate(f), two_pi, 0.01 * two_pi);
  EXPECT_NEAR(integrate(f), two_pi, 1e-10);
}

TEST(Integrate, PolarAreaSecondOrder) {
  auto err = [](int nr) {
    const PolarGrid g({0, 0}, 1.0, 3.0, nr, 16);
    PolarScalar one(g, 1.0);
    return std::abs(integrate(one) - pi * 8.0);
  };
  EXPECT_GE(err(16) / err(32), 3.5);
}

TEST(Dirichlet, SquaredGradientOfParaboloid) {
  auto err = [](int n) {
    const auto u = make_scalar(unit_grid(n), [](Point p) { return p.x * p.x + p.y * p.y; });
    const auto du = gradient(u);
    CartesianScalar dens(u.grid);
    for (std::size_t k = 0; k < dens.size(); ++k) dens[k] = du.c1[k] * du.c1[k] + du.c2[k] * du.c2[k];
    return std::abs(integrate(dens) - 8.0 / 3.0);
  };
  EXPECT_LT(err(64), 1e-3);
  EXPECT_GE(err(32) / err(64), 3.5);
}

TEST(Dirichlet, CanonicalVorticesOnAnnulus) {
  const auto a = PeriodicCoefficient::constant(1.0);
  for (int z : {1, 2}) {
    const PolarGrid g({0, 0}, 1.0, std::exp(1.0), 64, 128);
    auto w = make_vector(g, canonical(z));
    EXPECT_NEAR(dirichlet_energy(w, a, 1.0), two_pi * z * z, 0.01 * two_pi * z * z) << z;
  }
  const PolarGrid g({0, 0}, 1.0, std::exp(1.0), 16, 32);
  const auto c = make_vector(g, [](Point) { return Point{0.6, 0.8}; });
  EXPECT_EQ(dirichlet_energy(c, a, 0.1), 0.0);
  EXPECT_THROW(dirichlet_energy(c, a, 0.0), PreconditionError);
}

TEST(Sampling, BilinearReproducesLinearData) {
  const auto u = make_scalar(unit_grid(8), [](Point p) { return 1.0 + 2.0 * p.x - p.y; });
  EXPECT_NEAR(sample(u, {0.31, 0.77}), 1.0 + 0.62 - 0.77, 1e-12);
  const PolarGrid g({0, 0}, 1.0, 2.0, 16, 32);
  PolarScalar s(g);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::log(norm(g.node(k)));
  EXPECT_NEAR(sample(s, {1.3 * std::cos(1.0), 1.3 * std::sin(1.0)}), std::log(1.3), 1e-12);
}

TEST(Export, CsvHasHeaderAndRows) {
  const auto u = make_scalar(unit_grid(4), [](Point p) { return p.x; });
  std::ostringstream os;
  write_csv(os, u);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("x,y,value\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 26);
}
