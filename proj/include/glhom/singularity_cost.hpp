#pragma once

// Singularity costs: minimal S¹-energies on annuli with prescribed degree,
// their per-log limit ψ(z), the relaxed cost Ψ(z) over integer splittings,
// and the predicted Γ-limit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "glhom/cell_problem.hpp"
#include "glhom/cg.hpp"
#include "glhom/coefficients.hpp"
#include "glhom/fields.hpp"
#include "glhom/geometry.hpp"
#include "glhom/vortex_analysis.hpp"

namespace glhom {

enum class TraceMode { fixed_degree, fixed_trace };

/// a(x/δ) in physical coordinates. Elements coarser than the resolution
/// rule use the quadratic form of `closure` when one is given.
struct OscillatingCoefficient {
  PeriodicCoefficient coeff;
  double delta = 1.0;
  std::optional<HomogenizedTensor> closure;
};

using CoefficientMode = std::variant<HomogenizedTensor, OscillatingCoefficient>;

/// Largest element edge allowed, in units of δ, where a(x/δ) is sampled.
inline constexpr double resolution_fraction = 1.0 / 6.0;

struct AnnulusProblem {
  PolarGrid grid;
  CoefficientMode coeff;
  int z = 1;
  TraceMode trace = TraceMode::fixed_degree;
};

struct AnnulusSolution {
  double energy = 0.0;
  PolarScalar lifting;  // u = zθ + φ, with declared jump 2πz across the cut
  CgResult solver;
  double resolved_fraction = 1.0;  // share of the log-radial range sampled directly
};

namespace detail {

// Quadratic form per (s,θ) quad in the rotated frame (e_ρ, e_θ).
struct QuadCoefficients {
  std::vector<double> b11, b12, b22;
  double resolved_fraction = 1.0;
};

inline Sym2 rotate_to_polar(const Sym2& a, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {a.a11 * c * c + 2.0 * a.a12 * c * s + a.a22 * s * s,
          (a.a22 - a.a11) * c * s + a.a12 * (c * c - s * s),
          a.a11 * s * s - 2.0 * a.a12 * c * s + a.a22 * c * c};
}

inline QuadCoefficients quad_coefficients(const PolarGrid& g, const CoefficientMode& mode) {
  const int nr = g.n_r(), nt = g.n_theta();
  const std::size_t nq = static_cast<std::size_t>(nr - 1) * nt;
  QuadCoefficients q{std::vector<double>(nq), std::vector<double>(nq), std::vector<double>(nq), 1.0};
  auto set = [&](std::size_t idx, const Sym2& b) {
    q.b11[idx] = b.a11;
    q.b12[idx] = b.a12;
    q.b22[idx] = b.a22;
  };
  if (const auto* hom = std::get_if<HomogenizedTensor>(&mode)) {
    for (int j = 0; j < nr - 1; ++j)
      for (int k = 0; k < nt; ++k)
        set(static_cast<std::size_t>(j) * nt + k, rotate_to_polar(hom->entries, (k + 0.5) * g.dtheta()));
    return q;
  }
  const auto& osc = std::get<OscillatingCoefficient>(mode);
  require(osc.delta > 0.0, "oscillating mode needs delta > 0");
  const double limit = resolution_fraction * osc.delta;
  auto element_size = [&](int j) { return std::max(g.rho(j + 1) - g.rho(j), g.rho(j + 1) * g.dtheta()); };
  if (element_size(0) > limit) throw PreconditionError("oscillation unresolved");
  int resolved_rings = 0;
  for (int j = 0; j < nr - 1; ++j) {
    const bool resolved = element_size(j) <= limit;
    if (resolved) {
      ++resolved_rings;
    } else if (!osc.closure) {
      throw PreconditionError("oscillation unresolved");
    }
    const double rho_mid = std::sqrt(g.rho(j) * g.rho(j + 1));
    for (int k = 0; k < nt; ++k) {
      const std::size_t idx = static_cast<std::size_t>(j) * nt + k;
      const double t = (k + 0.5) * g.dtheta();
      if (resolved) {
        const Point x = g.center() + Point{std::cos(t), std::sin(t)} * rho_mid;
        set(idx, Sym2::identity(osc.coeff.eval(x * (1.0 / osc.delta))));
      } else {
        set(idx, rotate_to_polar(osc.closure->entries, t));
      }
    }
  }
  q.resolved_fraction = static_cast<double>(resolved_rings) / (nr - 1);
  return q;
}

// P1 energy of u = zθ + φ on the (s,θ) grid, averaged over both diagonal
// splittings of every quad. With quad differences a,b (along s) and c,d
// (along θ, including z), the quad energy is
//   (ds dθ / 2)·[B11(a²+b²) + B12(a+b)(c+d) + B22(c²+d²)].
class AnnulusOperator {
 public:
  AnnulusOperator(const PolarGrid& g, QuadCoefficients q)
      : g_(g), q_(std::move(q)), diag_(g.node_count(), 0.0) {
    const double ds = g.ds(), dt = g.dtheta(), w = 0.5 * ds * dt;
    for_each_quad([&](std::size_t qi, std::size_t n00, std::size_t n10, std::size_t n01, std::size_t n11) {
      const double b11 = q_.b11[qi], b12 = q_.b12[qi], b22 = q_.b22[qi];
      const double base = 2.0 * w * (b11 / (ds * ds) + b22 / (dt * dt));
      const double cross = 2.0 * w * b12 / (ds * dt);
      diag_[n00] += base + cross;
      diag_[n11] += base + cross;
      diag_[n10] += base - cross;
      diag_[n01] += base - cross;
    });
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    accumulate(in, 0.0, out);
  }

  // Right-hand side: minus the gradient of the energy at φ = 0.
  std::vector<double> rhs(int z) const {
    std::vector<double> zero(g_.node_count(), 0.0), f(g_.node_count(), 0.0);
    accumulate(zero, static_cast<double>(z), f);
    for (double& v : f) v = -v;
    return f;
  }

  double energy(const std::vector<double>& phi, int z) const {
    const double ds = g_.ds(), dt = g_.dtheta(), w = 0.5 * ds * dt;
    double e = 0.0;
    for_each_quad([&](std::size_t qi, std::size_t n00, std::size_t n10, std::size_t n01, std::size_t n11) {
      const double a = (phi[n10] - phi[n00]) / ds, b = (phi[n11] - phi[n01]) / ds;
      const double c = (phi[n01] - phi[n00]) / dt + z, d = (phi[n11] - phi[n10]) / dt + z;
      e += w * (q_.b11[qi] * (a * a + b * b) + q_.b12[qi] * (a + b) * (c + d) + q_.b22[qi] * (c * c + d * d));
    });
    return e;
  }

  double diag(std::size_t k) const { return diag_[k]; }
  double resolved_fraction() const { return q_.resolved_fraction; }

 private:
  template <class F>
  void for_each_quad(F&& f) const {
    const int nr = g_.n_r(), nt = g_.n_theta();
    for (int j = 0; j < nr - 1; ++j)
      for (int k = 0; k < nt; ++k) {
        const int kp = (k + 1) % nt;
        f(static_cast<std::size_t>(j) * nt + k, g_.index(j, k), g_.index(j + 1, k), g_.index(j, kp),
          g_.index(j + 1, kp));
      }
  }

  // out += ∇E(in) with the θ-differences shifted by z.
  void accumulate(std::span<const double> in, double z, std::span<double> out) const {
    const double ds = g_.ds(), dt = g_.dtheta(), w = 0.5 * ds * dt;
    for_each_quad([&](std::size_t qi, std::size_t n00, std::size_t n10, std::size_t n01, std::size_t n11) {
      const double b11 = q_.b11[qi], b12 = q_.b12[qi], b22 = q_.b22[qi];
      const double a = (in[n10] - in[n00]) / ds, b = (in[n11] - in[n01]) / ds;
      const double c = (in[n01] - in[n00]) / dt + z, d = (in[n11] - in[n10]) / dt + z;
      const double ga = w * (2.0 * b11 * a + b12 * (c + d)) / ds;
      const double gb = w * (2.0 * b11 * b + b12 * (c + d)) / ds;
      const double gc = w * (2.0 * b22 * c + b12 * (a + b)) / dt;
      const double gd = w * (2.0 * b22 * d + b12 * (a + b)) / dt;
      out[n10] += ga;
      out[n00] -= ga;
      out[n11] += gb;
      out[n01] -= gb;
      out[n01] += gc;
      out[n00] -= gc;
      out[n11] += gd;
      out[n10] -= gd;
    });
  }

  PolarGrid g_;
  QuadCoefficients q_;
  std::vector<double> diag_;
};

}  // namespace detail

/// Minimal energy of u = zθ + φ over single-valued φ: natural boundary
/// conditions in fixed-degree mode, φ = 0 on both circles in fixed-trace
/// mode. CG to relative residual `rtol`.
inline AnnulusSolution min_annulus_energy(const AnnulusProblem& p, double rtol = 1e-8) {
  require(p.z != 0, "min_annulus_energy: z must be nonzero");
  const PolarGrid& g = p.grid;
  const detail::AnnulusOperator op(g, detail::quad_coefficients(g, p.coeff));
  const int nr = g.n_r(), nt = g.n_theta();
  const bool pinned = p.trace == TraceMode::fixed_trace;
  auto is_fixed = [&](std::size_t k) {
    const std::size_t j = k / nt;
    return pinned && (j == 0 || j == static_cast<std::size_t>(nr - 1));
  };
  std::vector<double> f = op.rhs(p.z);
  for (std::size_t k = 0; k < f.size(); ++k)
    if (is_fixed(k)) f[k] = 0.0;
  std::vector<double> phi(g.node_count(), 0.0);
  auto project = [&](std::vector<double>& v) {
    if (pinned) {
      for (std::size_t k = 0; k < v.size(); ++k)
        if (is_fixed(k)) v[k] = 0.0;
    } else {
      project_mean_zero(v);
    }
  };
  const CgResult cg = conjugate_gradient(
      [&](std::span<const double> in, std::span<double> out) {
        op.apply(in, out);
        if (pinned)
          for (std::size_t k = 0; k < out.size(); ++k)
            if (is_fixed(k)) out[k] = 0.0;
      },
      f, phi,
      [&](std::span<const double> r, std::span<double> z) {
        for (std::size_t k = 0; k < r.size(); ++k) z[k] = is_fixed(k) ? 0.0 : r[k] / op.diag(k);
      },
      project, rtol, 50 * std::max(nr, nt) + 500);
  if (!cg.converged)
    throw SolverError("min_annulus_energy: CG stagnated (relative residual " + std::to_string(cg.relative_residual) +
                          ")",
                      cg.relative_residual);
  AnnulusSolution sol{op.energy(phi, p.z), PolarScalar(g), cg, op.resolved_fraction()};
  for (int j = 0; j < nr; ++j)
    for (int k = 0; k < nt; ++k) sol.lifting[g.index(j, k)] = p.z * g.lifting_angle(k) + phi[g.index(j, k)];
  sol.lifting.jump = two_pi * p.z;
  return sol;
}

// ---------------------------------------------------------------------------
// ψ(z)

struct PsiResolution {
  int n_theta = 256;
  double nodes_per_log = 0.0;  // radial nodes per unit of log(R/r); 0 → match dθ
  int min_n_r = 16;

  int n_r_for(double log_ratio) const {
    const double per = nodes_per_log > 0.0 ? nodes_per_log : n_theta / two_pi;
    return std::max(min_n_r, static_cast<int>(std::ceil(per * log_ratio)) + 1);
  }
};

struct PsiScheduleRow {
  double r_inner = 1.0;
  double r_outer = 0.0;
  std::optional<double> delta;
  double energy = 0.0;
  double per_log = 0.0;  // ψ_{r,R}(z) = energy / log(R/r)
};

struct PsiEstimate {
  int z = 0;
  double value = 0.0;  // fitted limit ψ(z)
  double slope = 0.0;  // c in ψ_{1,R} ≈ ψ + c/log R
  double fit_residual = 0.0;
  std::vector<PsiScheduleRow> schedule;
  bool warning = false;
  std::string note;
};

/// ψ_{1,R}(z) on each ratio R of an increasing schedule (inner radius 1;
/// in oscillating mode δ is measured in units of the inner radius), then a
/// least-squares fit of ψ_{1,R} = ψ + c/log R.
inline PsiEstimate psi_of_z(const CoefficientMode& mode, int z, const std::vector<double>& ratios,
                            const PsiResolution& res = {}, TraceMode trace = TraceMode::fixed_degree) {
  require(z != 0, "psi_of_z: z must be nonzero");
  require(ratios.size() >= 3, "psi_of_z: need at least three ratios");
  for (std::size_t k = 0; k < ratios.size(); ++k)
    require(ratios[k] > 1.0 && (k == 0 || ratios[k] > ratios[k - 1]), "psi_of_z: ratios must increase beyond 1");
  PsiEstimate est;
  est.z = z;
  std::optional<double> delta;
  if (const auto* osc = std::get_if<OscillatingCoefficient>(&mode)) delta = osc->delta;
  for (double R : ratios) {
    const double L = std::log(R);
    const PolarGrid g({0.0, 0.0}, 1.0, R, res.n_r_for(L), res.n_theta);
    const auto sol = min_annulus_energy({g, mode, z, trace});
    est.schedule.push_back({1.0, R, delta, sol.energy, sol.energy / L});
  }
  // Least squares in x = 1/log R.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(est.schedule.size());
  for (const auto& row : est.schedule) {
    const double x = 1.0 / std::log(row.r_outer), y = row.per_log;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  est.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  est.value = (sy - est.slope * sx) / m;
  double rss = 0.0;
  for (const auto& row : est.schedule) {
    const double e = row.per_log - (est.value + est.slope / std::log(row.r_outer));
    rss += e * e;
  }
  est.fit_residual = std::sqrt(rss / m);
  // ψ_{1,R} should approach its limit monotonically in log R.
  const double tol = 1e-6 * std::abs(est.value);
  int ups = 0, downs = 0;
  for (std::size_t k = 1; k < est.schedule.size(); ++k) {
    const double d = est.schedule[k].per_log - est.schedule[k - 1].per_log;
    if (d > tol) ++ups;
    if (d < -tol) ++downs;
  }
  if (ups > 0 && downs > 0) {
    est.warning = true;
    est.note = "non-monotone in log R";
  }
  return est;
}

// ---------------------------------------------------------------------------
// Ψ(z)

struct CapitalPsi {
  double value = 0.0;
  std::vector<int> splitting;  // nondecreasing multiset with Σ = z
};

/// Ψ(z) = min Σψ(z_j) over integer multisets with Σz_j = z. Splittings with
/// Σ|z_j| beyond |z|·ψ(sign z)/min_{z'} ψ(z')/|z'| cannot beat the unit
/// splitting and are pruned.
inline CapitalPsi capital_psi(const std::map<int, double>& table, int z) {
  require(z != 0, "capital_psi: z must be nonzero");
  std::string missing;
  for (int c = -std::abs(z); c <= std::abs(z); ++c)
    if (c != 0 && !table.count(c)) missing += (missing.empty() ? "" : ", ") + std::to_string(c);
  if (!missing.empty()) throw PreconditionError("capital_psi: table lacks charges " + missing);
  double min_rate = std::numeric_limits<double>::infinity();
  for (const auto& [c, v] : table) {
    require(c != 0 && v > 0.0, "capital_psi: table needs positive values at nonzero charges");
    min_rate = std::min(min_rate, v / std::abs(c));
  }
  const int sign = z > 0 ? 1 : -1;
  const double unit_cost = std::abs(z) * table.at(sign);
  const int budget = static_cast<int>(std::floor(unit_cost / min_rate + 1e-9));

  std::vector<int> charges;
  for (const auto& [c, v] : table)
    if (std::abs(c) <= budget) charges.push_back(c);

  CapitalPsi best{unit_cost, std::vector<int>(std::abs(z), sign)};
  std::vector<int> cur;
  // Multisets as nondecreasing index sequences into `charges`.
  std::function<void(std::size_t, int, int, double)> dfs = [&](std::size_t from, int sum, int used, double cost) {
    if (sum == z && !cur.empty() && cost < best.value) best = {cost, cur};
    for (std::size_t i = from; i < charges.size(); ++i) {
      const int c = charges[i];
      const int u = used + std::abs(c);
      if (u > budget) continue;
      // the remaining charge must be reachable within the budget
      if (std::abs(z - sum - c) > budget - u) continue;
      const double nc = cost + table.at(c);
      if (nc + min_rate * std::abs(z - sum - c) >= best.value) continue;
      cur.push_back(c);
      dfs(i, sum + c, u, nc);
      cur.pop_back();
    }
  };
  dfs(0, 0, 0, 0.0);
  return best;
}

/// 2π((1−λ)·ess inf a + λ·√det A)·|μ|(Ω).
inline double predicted_gamma_limit(const PeriodicCoefficient& coeff, const HomogenizedTensor& ahom, double lambda,
                                    const VortexMeasure& mu) {
  require(lambda >= 0.0 && lambda <= 1.0, "predicted_gamma_limit: lambda must lie in [0,1]");
  require(ahom.det() > 0.0, "predicted_gamma_limit: tensor must be positive definite");
  return two_pi * ((1.0 - lambda) * coeff.ess_inf().value + lambda * std::sqrt(ahom.det())) * mu.total_variation();
}

}  // namespace glhom
