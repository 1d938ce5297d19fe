#pragma once

// Periodic corrector problems on the unit cell and the homogenized tensor
// ⟨A ξ, ξ⟩ = min_φ ∫_Q a(y)|ξ + ∇φ|² dy.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glhom/cg.hpp"
#include "glhom/coefficients.hpp"
#include "glhom/fields.hpp"
#include "glhom/geometry.hpp"

namespace glhom {

struct HomogenizedTensor {
  Sym2 entries;
  int n = 0;              // finest cell grid size used (0 for analytic tensors)
  double residual = 0.0;  // largest relative CG residual among the solves

  double det() const { return entries.det(); }
  std::array<double, 2> eigenvalues() const { return entries.eigenvalues(); }
  static HomogenizedTensor analytic(Sym2 a) { return {a, 0, 0.0}; }
};

struct CorrectorSolution {
  CartesianScalar phi;  // cell-centred, mean zero
  Point xi;
  double energy = 0.0;
  CgResult solver;
};

namespace detail {

// Cell-centred finite differences on an n×n periodic grid. Face
// coefficients are harmonic means of the two adjacent cell values.
class CellOperator {
 public:
  CellOperator(const PeriodicCoefficient& a, int n) : n_(n), ax_(n * n), ay_(n * n), diag_(n * n) {
    std::vector<double> c(n * n);
    const double h = 1.0 / n;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) c[j * n + i] = a.eval({(i + 0.5) * h, (j + 0.5) * h});
    auto harm = [](double p, double q) { return 2.0 * p * q / (p + q); };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int k = j * n + i;
        ax_[k] = harm(c[k], c[j * n + (i + 1) % n]);   // face between (i,j) and (i+1,j)
        ay_[k] = harm(c[k], c[((j + 1) % n) * n + i]);  // face between (i,j) and (i,j+1)
      }
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int k = j * n + i;
        diag_[k] = ax_[k] + ay_[k] + ax_[j * n + (i + n - 1) % n] + ay_[((j + n - 1) % n) * n + i];
      }
  }

  int n() const { return n_; }
  std::size_t size() const { return ax_.size(); }

  // out = Dᵀ diag(a_f) D · in
  void apply(std::span<const double> in, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < n_; ++j) {
      const int jp = (j + 1) % n_;
      for (int i = 0; i < n_; ++i) {
        const int k = j * n_ + i, kx = j * n_ + (i + 1) % n_, ky = jp * n_ + i;
        const double fx = ax_[k] * (in[kx] - in[k]);
        const double fy = ay_[k] * (in[ky] - in[k]);
        out[kx] += fx;
        out[k] -= fx;
        out[ky] += fy;
        out[k] -= fy;
      }
    }
  }

  // Right-hand side −Dᵀ(a_f h ξ_f) of the normal equations.
  std::vector<double> rhs(Point xi) const {
    std::vector<double> b(size(), 0.0);
    const double h = 1.0 / n_;
    for (int j = 0; j < n_; ++j) {
      const int jp = (j + 1) % n_;
      for (int i = 0; i < n_; ++i) {
        const int k = j * n_ + i, kx = j * n_ + (i + 1) % n_, ky = jp * n_ + i;
        const double fx = ax_[k] * h * xi.x, fy = ay_[k] * h * xi.y;
        b[kx] -= fx;
        b[k] += fx;
        b[ky] -= fy;
        b[k] += fy;
      }
    }
    return b;
  }

  // Σ_f a_f (φ_R − φ_L + h ξ_f)²
  double energy(const std::vector<double>& phi, Point xi) const {
    const double h = 1.0 / n_;
    double e = 0.0;
    for (int j = 0; j < n_; ++j) {
      const int jp = (j + 1) % n_;
      for (int i = 0; i < n_; ++i) {
        const int k = j * n_ + i, kx = j * n_ + (i + 1) % n_, ky = jp * n_ + i;
        const double dx = phi[kx] - phi[k] + h * xi.x, dy = phi[ky] - phi[k] + h * xi.y;
        e += ax_[k] * dx * dx + ay_[k] * dy * dy;
      }
    }
    return e;
  }

  double diag(std::size_t k) const { return diag_[k]; }

 private:
  int n_;
  std::vector<double> ax_, ay_, diag_;
};

}  // namespace detail

/// Minimizes the discrete cell energy over mean-zero periodic φ by Jacobi
/// preconditioned CG. Throws SolverError after 50·n iterations.
inline CorrectorSolution solve_corrector(const PeriodicCoefficient& a, Point xi, int n, double rtol = 1e-9) {
  require(n >= 16, "solve_corrector: need n >= 16");
  require(std::abs(norm(xi) - 1.0) <= 1e-12, "solve_corrector: xi must be a unit vector");
  const detail::CellOperator op(a, n);
  const std::vector<double> b = op.rhs(xi);
  std::vector<double> x(op.size(), 0.0);
  const CgResult cg = conjugate_gradient(
      [&](std::span<const double> in, std::span<double> out) { op.apply(in, out); }, b, x,
      [&](std::span<const double> r, std::span<double> z) {
        for (std::size_t k = 0; k < r.size(); ++k) z[k] = r[k] / op.diag(k);
      },
      [](std::vector<double>& v) { project_mean_zero(v); }, rtol, 50 * n);
  if (!cg.converged)
    throw SolverError("solve_corrector: CG did not converge (relative residual " +
                          std::to_string(cg.relative_residual) + ")",
                      cg.relative_residual);
  project_mean_zero(x);
  CorrectorSolution sol{CartesianScalar(CartesianGrid({0.0, 0.0}, 1.0, 1.0, n, n), 0.0, Staggering::cell), xi,
                        op.energy(x, xi), cg};
  sol.phi.values = std::move(x);
  return sol;
}

/// a11 = E(e1), a22 = E(e2), a12 from polarization along (e1+e2)/√2.
inline HomogenizedTensor homogenized_tensor(const PeriodicCoefficient& a, int n) {
  const auto s1 = solve_corrector(a, {1.0, 0.0}, n);
  const auto s2 = solve_corrector(a, {0.0, 1.0}, n);
  const double r = 1.0 / std::sqrt(2.0);
  const auto sd = solve_corrector(a, {r, r}, n);
  HomogenizedTensor t;
  t.entries.a11 = s1.energy;
  t.entries.a22 = s2.energy;
  t.entries.a12 = 0.5 * (2.0 * sd.energy - s1.energy - s2.energy);
  t.n = n;
  t.residual = std::max({s1.solver.relative_residual, s2.solver.relative_residual, sd.solver.relative_residual});
  return t;
}

struct ConvergenceRow {
  int n = 0;
  Sym2 entries;
  double residual = 0.0;
};

struct RefinementResult {
  HomogenizedTensor tensor;  // extrapolated when possible, else the finest level
  std::vector<ConvergenceRow> table;
  std::array<std::optional<double>, 3> order;  // observed order for a11, a12, a22
  bool extrapolated = false;
  std::optional<std::string> warning;
};

namespace detail {

struct Extrapolation {
  double value;
  std::optional<double> order;
  bool ok;
};

// Richardson extrapolation of a sequence on grids with constant ratio.
inline Extrapolation richardson(const std::vector<double>& e, double ratio) {
  const std::size_t m = e.size();
  const double last = e[m - 1];
  const double d1 = e[m - 1] - e[m - 2];
  const double scale = std::max(1.0, std::abs(last));
  if (std::abs(d1) <= 1e-12 * scale) return {last, std::nullopt, true};
  if (m == 2) return {last + d1 / (ratio * ratio - 1.0), 2.0, true};
  const double d0 = e[m - 2] - e[m - 3];
  if (d0 * d1 <= 0.0 || std::abs(d1) >= std::abs(d0)) return {last, std::nullopt, false};
  const double p = std::log(std::abs(d0 / d1)) / std::log(ratio);
  return {last + d1 / (std::pow(ratio, p) - 1.0), p, true};
}

}  // namespace detail

/// Solves on each n of an increasing sequence with a constant refinement
/// ratio and Richardson-extrapolates each entry with its observed order.
/// With two levels the order is taken as 2.
inline RefinementResult refine_tensor(const PeriodicCoefficient& a, const std::vector<int>& ns) {
  require(ns.size() >= 2, "refine_tensor: need at least two grid sizes");
  for (std::size_t k = 1; k < ns.size(); ++k) require(ns[k] > ns[k - 1], "refine_tensor: sizes must increase");
  const double ratio = static_cast<double>(ns[1]) / ns[0];
  for (std::size_t k = 2; k < ns.size(); ++k)
    require(std::abs(static_cast<double>(ns[k]) / ns[k - 1] - ratio) < 1e-12,
            "refine_tensor: sizes must have a constant ratio");

  RefinementResult out;
  std::vector<double> e11, e12, e22;
  double worst_residual = 0.0;
  for (int n : ns) {
    const auto t = homogenized_tensor(a, n);
    out.table.push_back({n, t.entries, t.residual});
    e11.push_back(t.entries.a11);
    e12.push_back(t.entries.a12);
    e22.push_back(t.entries.a22);
    worst_residual = std::max(worst_residual, t.residual);
  }
  const auto x11 = detail::richardson(e11, ratio), x12 = detail::richardson(e12, ratio),
             x22 = detail::richardson(e22, ratio);
  out.order = {x11.order, x12.order, x22.order};
  out.tensor.n = ns.back();
  out.tensor.residual = worst_residual;
  if (x11.ok && x12.ok && x22.ok) {
    out.tensor.entries = {x11.value, x12.value, x22.value};
    out.extrapolated = true;
  } else {
    out.tensor.entries = out.table.back().entries;
    out.warning = "non-monotone convergence; returning the finest level without extrapolation";
  }
  return out;
}

}  // namespace glhom
