#pragma once

// Heterogeneous Ginzburg–Landau energy ∫ a(x/δ)|∇v|² + ε⁻²(1−|v|²)² on a
// Cartesian grid, the piecewise recovery fields built from annulus
// minimizers, and a nonlinear CG minimizer.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glhom/cell_problem.hpp"
#include "glhom/coefficients.hpp"
#include "glhom/fields.hpp"
#include "glhom/geometry.hpp"
#include "glhom/singularity_cost.hpp"
#include "glhom/vortex_analysis.hpp"

namespace glhom {

struct Disk {
  Point center;
  double radius = 0.0;
};

struct GLParameters {
  double epsilon = 0.05;
  double delta = 0.05;
  PeriodicCoefficient coefficient = PeriodicCoefficient::constant(1.0);
  Rect domain = unit_square;
  int nx = 256;  // cells along x
  std::vector<Disk> holes;
  std::function<Point(Point)> boundary;  // optional trace on the outer boundary
};

/// Node grid of the parameters with holes excised.
inline CartesianGrid make_grid(const GLParameters& p) {
  require(p.epsilon > 0.0, "GL: epsilon must be positive");
  require(p.delta > 0.0, "GL: delta must be positive");
  CartesianGrid g = CartesianGrid::over(p.domain, p.nx);
  for (const Disk& d : p.holes) g.excise_disk(d.center, d.radius);
  return g;
}

struct GLEnergy {
  double total = 0.0;
  double gradient = 0.0;
  double potential = 0.0;
};

namespace detail {

// Per active cell: a(centre/δ)·½·Σ (squared edge differences of both
// components); per node: ε⁻²·(h²/4)·#active cells·(1−|v|²)².
class GLDiscretization {
 public:
  GLDiscretization(const CartesianGrid& g, const GLParameters& p)
      : g_(g), inv_eps2_(1.0 / (p.epsilon * p.epsilon)), a_(static_cast<std::size_t>(g.nx()) * g.ny(), 0.0),
        w_(g.node_count(), 0.0) {
    const double q = 0.25 * g.h() * g.h();
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        if (!g.cell_active(i, j)) continue;
        a_[cell(i, j)] = p.coefficient.eval(g.cell_center(i, j) * (1.0 / p.delta));
        for (const std::size_t n : {g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)})
          w_[n] += q;
      }
  }

  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(j) * g_.nx() + i; }
  double cell_coefficient(int i, int j) const { return a_[cell(i, j)]; }
  double node_weight(std::size_t n) const { return w_[n]; }

  /// Energy with the gradient term evaluated for a ≡ `unit` when given.
  GLEnergy energy(const std::vector<double>& c1, const std::vector<double>& c2,
                  std::optional<double> unit = std::nullopt) const {
    GLEnergy e;
    for_each_cell([&](std::size_t c, std::size_t n00, std::size_t n10, std::size_t n01, std::size_t n11) {
      double s = 0.0;
      for (const auto* v : {&c1, &c2}) {
        const auto& u = *v;
        const double a = u[n10] - u[n00], b = u[n11] - u[n01], d = u[n01] - u[n00], f = u[n11] - u[n10];
        s += a * a + b * b + d * d + f * f;
      }
      e.gradient += 0.5 * unit.value_or(a_[c]) * s;
    });
    for (std::size_t n = 0; n < w_.size(); ++n) {
      if (w_[n] == 0.0) continue;
      const double t = 1.0 - (c1[n] * c1[n] + c2[n] * c2[n]);
      e.potential += w_[n] * t * t;
    }
    e.potential *= inv_eps2_;
    e.total = e.gradient + e.potential;
    return e;
  }

  /// ∂E/∂v at every node, written to g1, g2.
  void gradient(const std::vector<double>& c1, const std::vector<double>& c2, std::vector<double>& g1,
                std::vector<double>& g2) const {
    std::fill(g1.begin(), g1.end(), 0.0);
    std::fill(g2.begin(), g2.end(), 0.0);
    for_each_cell([&](std::size_t c, std::size_t n00, std::size_t n10, std::size_t n01, std::size_t n11) {
      const double a = a_[c];
      auto edges = [&](const std::vector<double>& u, std::vector<double>& g) {
        auto edge = [&](std::size_t p, std::size_t q) {
          const double d = a * (u[q] - u[p]);
          g[q] += d;
          g[p] -= d;
        };
        edge(n00, n10);
        edge(n01, n11);
        edge(n00, n01);
        edge(n10, n11);
      };
      edges(c1, g1);
      edges(c2, g2);
    });
    for (std::size_t n = 0; n < w_.size(); ++n) {
      if (w_[n] == 0.0) continue;
      const double f = -4.0 * inv_eps2_ * w_[n] * (1.0 - (c1[n] * c1[n] + c2[n] * c2[n]));
      g1[n] += f * c1[n];
      g2[n] += f * c2[n];
    }
  }

 private:
  template <class F>
  void for_each_cell(F&& f) const {
    for (int j = 0; j < g_.ny(); ++j)
      for (int i = 0; i < g_.nx(); ++i)
        if (g_.cell_active(i, j))
          f(cell(i, j), g_.index(i, j), g_.index(i + 1, j), g_.index(i, j + 1), g_.index(i + 1, j + 1));
  }

  CartesianGrid g_;
  double inv_eps2_;
  std::vector<double> a_, w_;
};

inline void check_resolution(const CartesianGrid& g, const GLParameters& p) {
  if (g.h() > 0.25 * p.epsilon * (1.0 + 1e-12))
    throw PreconditionError("GL: grid too coarse, need h <= epsilon/4 (h = " + std::to_string(g.h()) +
                            ", epsilon = " + std::to_string(p.epsilon) + ")");
}

}  // namespace detail

/// Quadrature of the GL energy for a node field on the parameters' grid.
inline GLEnergy gl_energy(const CartesianVector& v, const GLParameters& p) {
  return detail::GLDiscretization(v.grid, p).energy(v.c1, v.c2);
}

/// Gradient term with a ≡ 1, for two-sided comparisons.
inline double unit_dirichlet(const CartesianVector& v, const GLParameters& p) {
  return detail::GLDiscretization(v.grid, p).energy(v.c1, v.c2, 1.0).gradient;
}

/// e^{iΘ} with Θ = Σ z_k θ(x − x_k).
inline Point canonical_phase(const VortexMeasure& mu, Point x) {
  double t = 0.0;
  for (const Atom& a : mu.atoms()) t += a.charge * std::atan2(x.y - a.position.y, x.x - a.position.x);
  return {std::cos(t), std::sin(t)};
}

/// s = 1 − 1/log|log ε|, defined for ε < e^{−e}.
inline double default_s(double epsilon) {
  const double L = std::abs(std::log(epsilon));
  require(epsilon > 0.0 && L > std::exp(1.0), "default_s: need epsilon < exp(-e)");
  return 1.0 - 1.0 / std::log(L);
}

// ---------------------------------------------------------------------------
// Recovery fields

struct RecoveryOptions {
  bool shift_cores = false;  // λ-regime: cores moved to δ-lattice minima of a
  int annulus_n_theta = 256;  // raised as needed to resolve a(x/δ) on the inner ring
  std::optional<HomogenizedTensor> closure;  // for rings coarser than the resolution rule
};

struct RecoveryField {
  CartesianVector field;
  VortexMeasure cores;        // actual core positions
  double rho_bar = 0.0;       // blend starts at ρ̄, ends at 2ρ̄
  double inner_radius = 0.0;  // start of the annulus-minimizer layer
  bool annulus_layer = false;
  double annulus_energy = 0.0;  // Σ of the annulus minima
};

/// Piecewise construction around each core x_i with charge z_i:
/// (|x−x_i|/ε)·e^{iz_iθ} in B_ε, pure phase up to the inner radius (ε^s, or
/// δ^s with shifted cores), the fixed-trace annulus minimizer up to ρ̄, a
/// linear blend to Θ on A_{ρ̄,2ρ̄}, and e^{iΘ} elsewhere.
inline RecoveryField recovery_field(const VortexMeasure& mu, const GLParameters& p, double s, double eta,
                                   const RecoveryOptions& opt = {}) {
  require(s > 0.0 && s < 1.0, "recovery_field: s must lie in (0,1)");
  require(eta > 0.0 && eta < 1.0, "recovery_field: eta must lie in (0,1)");
  require(!mu.empty(), "recovery_field: empty measure");
  require(mu.domain() == p.domain, "recovery_field: measure and parameters disagree on the domain");
  require(mu.well_separated(p.epsilon), "recovery_field: vortices violate the separation 2*epsilon");
  const CartesianGrid grid = make_grid(p);
  detail::check_resolution(grid, p);
  const double eps = p.epsilon, delta = p.delta;

  VortexMeasure cores(p.domain, {});
  if (opt.shift_cores) {
    const Point y = p.coefficient.argmin();
    for (const Atom& a : mu.atoms()) {
      const Point x{delta * std::floor(a.position.x / delta) + delta * y.x,
                    delta * std::floor(a.position.y / delta) + delta * y.y};
      require(p.domain.contains(x), "recovery_field: shifted core left the domain");
      cores.add(x, a.charge);
    }
    require(cores.well_separated(eps), "recovery_field: shifted cores violate the separation 2*epsilon");
  } else {
    cores = mu;
  }

  RecoveryField out{CartesianVector(grid), cores, 0.0, 0.0, false, 0.0};
  const double rho = cores.separation() / 3.0;
  out.rho_bar = std::max(std::min(rho, 0.5), eps);
  const double r_in = opt.shift_cores ? std::pow(delta, s) : std::pow(eps, s);
  out.inner_radius = std::clamp(r_in, eps, out.rho_bar);
  out.annulus_layer = out.rho_bar >= 1.5 * out.inner_radius;

  const auto& atoms = cores.atoms();
  std::vector<PolarScalar> phis;
  if (out.annulus_layer) {
    CoefficientMode mode;
    if (p.coefficient.alpha() == p.coefficient.beta()) {
      mode = HomogenizedTensor::analytic(Sym2::identity(p.coefficient.alpha()));
    } else {
      const HomogenizedTensor closure = opt.closure ? *opt.closure : homogenized_tensor(p.coefficient, 64);
      mode = OscillatingCoefficient{p.coefficient, delta, closure};
    }
    // inner ring element ≈ r·dθ must not exceed δ/6
    const double needed = 1.1 * two_pi * out.inner_radius * std::exp(0.05) / (resolution_fraction * delta);
    int nt = std::max(opt.annulus_n_theta, 16);
    if (std::holds_alternative<OscillatingCoefficient>(mode)) nt = std::max(nt, static_cast<int>(std::ceil(needed)));
    nt = (nt + 3) / 4 * 4;
    const PsiResolution res{nt, 0.0, 16};
    const double L = std::log(out.rho_bar / out.inner_radius);
    for (const Atom& a : atoms) {
      const PolarGrid pg(a.position, out.inner_radius, out.rho_bar, res.n_r_for(L), nt);
      const auto sol = min_annulus_energy({pg, mode, a.charge, TraceMode::fixed_trace});
      out.annulus_energy += sol.energy;
      PolarScalar phi(pg);
      for (int j = 0; j < pg.n_r(); ++j)
        for (int k = 0; k < pg.n_theta(); ++k)
          phi[pg.index(j, k)] = sol.lifting[pg.index(j, k)] - a.charge * pg.lifting_angle(k);
      phis.push_back(std::move(phi));
    }
  }

  const double rb = out.rho_bar;
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const Point x = grid.node(n);
    std::size_t i = 0;
    double r = dist(x, atoms[0].position);
    for (std::size_t k = 1; k < atoms.size(); ++k) {
      const double d = dist(x, atoms[k].position);
      if (d < r) {
        r = d;
        i = k;
      }
    }
    const Point d = x - atoms[i].position;
    const int z = atoms[i].charge;
    const double th = std::atan2(d.y, d.x);
    double m = 1.0, phase = 0.0;
    if (r < eps) {
      m = r / eps;
      phase = z * th;
    } else if (r < out.inner_radius || (!out.annulus_layer && r < rb)) {
      phase = z * th;
    } else if (r < rb) {
      phase = z * th + sample(phis[i], x);
    } else if (r < 2.0 * rb) {
      // other cores' angles on a branch continuous over B_{2ρ̄}(x_i)
      double far = 0.0;
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (k == i) continue;
        const Point c = atoms[k].position;
        const double ref = std::atan2(atoms[i].position.y - c.y, atoms[i].position.x - c.x);
        far += atoms[k].charge * (ref + wrap_angle(std::atan2(x.y - c.y, x.x - c.x) - ref));
      }
      phase = z * th + (r - rb) / rb * far;
    } else {
      for (const Atom& a : atoms) phase += a.charge * std::atan2(x.y - a.position.y, x.x - a.position.x);
    }
    out.field.c1[n] = m * std::cos(phase);
    out.field.c2[n] = m * std::sin(phase);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minimization

struct MinimizeBudget {
  int max_iterations = 5000;
  double rel_tol = 1e-8;  // relative decrease over `window` iterations
  int window = 50;
};

struct MinimizationReport {
  CartesianVector field;
  GLEnergy energy;
  std::vector<double> trace;  // energy before the first and after every iteration
  VortexMeasure vortices;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

/// Polak–Ribière nonlinear CG with Armijo backtracking on the nodal values;
/// outer-boundary nodes and nodes next to holes stay fixed.
inline MinimizationReport minimize_gl(const CartesianVector& initial, const GLParameters& p,
                                      const MinimizeBudget& budget = {}) {
  const CartesianGrid& g = initial.grid;
  detail::check_resolution(g, p);
  const detail::GLDiscretization disc(g, p);
  const std::size_t nn = g.node_count();
  std::vector<char> fixed(nn, 0);
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (!g.active(i, j) || i == 0 || j == 0 || i == g.nx() || j == g.ny()) {
        fixed[k] = 1;
        continue;
      }
      for (const auto& [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
        if (!g.active(i + di, j + dj)) fixed[k] = 1;
    }
  for (std::size_t k = 0; k < nn; ++k) {
    if (!fixed[k] || !g.active(static_cast<int>(k % (g.nx() + 1)), static_cast<int>(k / (g.nx() + 1)))) continue;
    if (p.boundary) {
      const Point b = p.boundary(g.node(k));
      require(std::abs(b.x - initial.c1[k]) <= 1e-9 && std::abs(b.y - initial.c2[k]) <= 1e-9,
              "minimize_gl: initial field does not match the boundary trace");
    } else {
      require(std::abs(initial.modulus(k) - 1.0) <= 1e-9, "minimize_gl: boundary values must have modulus 1");
    }
  }

  MinimizationReport rep{initial, {}, {}, VortexMeasure(g.rect(), {}), false, 0, ""};
  std::vector<double>& x1 = rep.field.c1;
  std::vector<double>& x2 = rep.field.c2;
  std::vector<double> g1(nn), g2(nn), d1(nn, 0.0), d2(nn, 0.0), t1(nn), t2(nn), p1(nn), p2(nn);
  auto masked_gradient = [&](const std::vector<double>& a, const std::vector<double>& b) {
    disc.gradient(a, b, g1, g2);
    for (std::size_t k = 0; k < nn; ++k)
      if (fixed[k]) g1[k] = g2[k] = 0.0;
  };
  auto dotv = [&](const std::vector<double>& a1, const std::vector<double>& a2, const std::vector<double>& b1,
                  const std::vector<double>& b2) {
    double s = 0.0;
    for (std::size_t k = 0; k < nn; ++k) s += a1[k] * b1[k] + a2[k] * b2[k];
    return s;
  };

  double e = disc.energy(x1, x2).total;
  rep.trace.push_back(e);
  masked_gradient(x1, x2);
  for (std::size_t k = 0; k < nn; ++k) {
    d1[k] = -g1[k];
    d2[k] = -g2[k];
  }
  double gg = dotv(g1, g2, g1, g2);
  // first trial step: ~ h²/(8·a_max) is stable for the gradient part
  double step = g.h() * g.h() / (8.0 * p.coefficient.beta());
  for (int it = 0; it < budget.max_iterations; ++it) {
    if (gg == 0.0) {
      rep.converged = true;
      rep.message = "stationary point";
      break;
    }
    double slope = dotv(g1, g2, d1, d2);
    if (slope >= 0.0) {
      for (std::size_t k = 0; k < nn; ++k) {
        d1[k] = -g1[k];
        d2[k] = -g2[k];
      }
      slope = -gg;
    }
    double alpha = 2.0 * step, e_new = e;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t k = 0; k < nn; ++k) {
        t1[k] = x1[k] + alpha * d1[k];
        t2[k] = x2[k] + alpha * d2[k];
      }
      e_new = disc.energy(t1, t2).total;
      if (e_new <= e + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      rep.message = "line search failed";
      break;
    }
    step = alpha;
    x1.swap(t1);
    x2.swap(t2);
    e = e_new;
    rep.trace.push_back(e);
    rep.iterations = it + 1;
    p1 = g1;
    p2 = g2;
    masked_gradient(x1, x2);
    const double gg_new = dotv(g1, g2, g1, g2);
    const double beta = std::max(0.0, (gg_new - dotv(g1, g2, p1, p2)) / gg);
    for (std::size_t k = 0; k < nn; ++k) {
      d1[k] = -g1[k] + beta * d1[k];
      d2[k] = -g2[k] + beta * d2[k];
    }
    gg = gg_new;
    const int w = budget.window;
    if (static_cast<int>(rep.trace.size()) > w) {
      const double old = rep.trace[rep.trace.size() - 1 - w];
      if (old - e <= budget.rel_tol * std::abs(old)) {
        rep.converged = true;
        rep.message = "relative decrease below tolerance";
        break;
      }
    }
  }
  if (rep.message.empty()) rep.message = "iteration budget exhausted";
  rep.energy = disc.energy(x1, x2);
  rep.vortices = detect_vortices(rep.field);
  return rep;
}

}  // namespace glhom
