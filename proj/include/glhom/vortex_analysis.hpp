#pragma once

// Jacobians, currents, winding numbers and vortex detection for planar
// vector fields, plus atomic vortex measures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "glhom/fields.hpp"
#include "glhom/geometry.hpp"

namespace glhom {

struct Atom {
  Point position;
  int charge = 0;
};

/// Atomic measure Σ zᵢ δ_{xᵢ} on a rectangular domain.
class VortexMeasure {
 public:
  explicit VortexMeasure(Rect domain = unit_square) : domain_(domain) {}
  VortexMeasure(Rect domain, std::vector<Atom> atoms) : domain_(domain) {
    for (const Atom& a : atoms) add(a.position, a.charge);
  }

  void add(Point x, int charge) {
    require(charge != 0, "VortexMeasure: charges must be nonzero integers");
    require(domain_.contains(x), "VortexMeasure: atom lies outside the domain");
    atoms_.push_back({x, charge});
  }

  const Rect& domain() const { return domain_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  int total_charge() const {
    int s = 0;
    for (const Atom& a : atoms_) s += a.charge;
    return s;
  }
  /// |μ|(Ω) = Σ|zᵢ|.
  int total_variation() const {
    int s = 0;
    for (const Atom& a : atoms_) s += std::abs(a.charge);
    return s;
  }

  /// min over atoms of ½|xᵢ−xⱼ| and dist(xᵢ,∂Ω); +∞ for an empty measure.
  double separation() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      m = std::min(m, domain_.boundary_distance(atoms_[i].position));
      for (std::size_t j = i + 1; j < atoms_.size(); ++j)
        m = std::min(m, 0.5 * dist(atoms_[i].position, atoms_[j].position));
    }
    return m;
  }

  /// Membership in X_ε(Ω): separation ≥ 2ε.
  bool well_separated(double eps) const { return separation() >= 2.0 * eps; }

 private:
  Rect domain_;
  std::vector<Atom> atoms_;
};

inline void write_csv(std::ostream& os, const VortexMeasure& mu) {
  char buf[96];
  for (const Atom& a : mu.atoms()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", a.position.x, a.position.y, a.charge);
    os << buf;
  }
}

/// Reads "x,y,charge" lines; blank lines and lines starting with '#' are
/// skipped, as is a leading "x,y,charge" header.
inline VortexMeasure read_measure_csv(std::istream& in, Rect domain = unit_square) {
  VortexMeasure mu(domain);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("x", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x = 0, y = 0;
    int z = 0;
    if (!(ss >> x >> y >> z)) throw PreconditionError("measure csv: malformed line " + std::to_string(lineno));
    mu.add({x, y}, z);
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Jacobian and current

/// Plaquette-centred det ∇v: the exact cell integral of the Jacobian of the
/// bilinear interpolant divided by h². Returns a cell-staggered field.
inline CartesianScalar jacobian(const CartesianVector& v) {
  const CartesianGrid& g = v.grid;
  CartesianScalar out(g, 0.0, Staggering::cell);
  const double inv2h = 0.5 / g.h();
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k00 = g.index(i, j), k10 = g.index(i + 1, j), k01 = g.index(i, j + 1),
                        k11 = g.index(i + 1, j + 1);
      const double dx1 = (v.c1[k10] - v.c1[k00] + v.c1[k11] - v.c1[k01]) * inv2h;
      const double dx2 = (v.c2[k10] - v.c2[k00] + v.c2[k11] - v.c2[k01]) * inv2h;
      const double dy1 = (v.c1[k01] - v.c1[k00] + v.c1[k11] - v.c1[k10]) * inv2h;
      const double dy2 = (v.c2[k01] - v.c2[k00] + v.c2[k11] - v.c2[k10]) * inv2h;
      out[static_cast<std::size_t>(j) * g.nx() + i] = dx1 * dy2 - dy1 * dx2;
    }
  }
  return out;
}

/// j(v) = v¹∇v² − v²∇v¹, nodewise. On a PolarGrid the result is in the
/// local (e_ρ, e_θ) frame.
template <class Grid>
VectorField<Grid> current(const VectorField<Grid>& v) {
  ScalarField<Grid> v1(v.grid), v2(v.grid);
  v1.values = v.c1;
  v2.values = v.c2;
  const auto g1 = gradient(v1);
  const auto g2 = gradient(v2);
  VectorField<Grid> out(v.grid, g1.frame);
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.c1[k] = v.c1[k] * g2.c1[k] - v.c2[k] * g1.c1[k];
    out.c2[k] = v.c1[k] * g2.c2[k] - v.c2[k] * g1.c2[k];
  }
  return out;
}

/// T_ζ(|v|)·v/|v| with T_ζ(ρ) = min{ρ/ζ, 1}; zero where v vanishes.
template <class Grid>
VectorField<Grid> truncate_modulus(const VectorField<Grid>& v, double zeta, std::vector<std::size_t>* zeros = nullptr) {
  VectorField<Grid> out(v.grid, v.frame);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double m = v.modulus(k);
    if (m == 0.0) {
      if (zeros) zeros->push_back(k);
      continue;
    }
    const double s = std::min(m / zeta, 1.0) / m;
    out.c1[k] = s * v.c1[k];
    out.c2[k] = s * v.c2[k];
  }
  return out;
}

struct ModifiedJacobian {
  CartesianScalar field;
  std::vector<std::size_t> singular_nodes;  // nodes with |v| = 0
};

/// J_ζ v := J(v_ζ) with v_ζ = T_ζ(|v|) v/|v|.
inline ModifiedJacobian modified_jacobian(const CartesianVector& v, double zeta) {
  require(zeta > 0.0 && zeta < 1.0, "modified_jacobian: zeta must lie in (0,1)");
  std::vector<std::size_t> zeros;
  const CartesianVector vz = truncate_modulus(v, zeta, &zeros);
  return {jacobian(vz), std::move(zeros)};
}

// ---------------------------------------------------------------------------
// Degree

struct DegreeResult {
  int degree = 0;
  double residual = 0.0;     // |raw winding − degree|
  double max_step = 0.0;     // largest unwrapped angle increment between samples
  bool under_resolved = false;
};

/// Winding number of a sampled field along a circle, by nearest-branch
/// unwrapping of the sample angles. `field(p)` returns v(p) as a Point.
template <class Sampler>
DegreeResult winding_number(Sampler&& field, Point center, double radius, int n_samples) {
  require(n_samples >= 16, "degree: need at least 16 samples");
  require(radius > 0.0, "degree: radius must be positive");
  constexpr double tiny = std::numeric_limits<double>::epsilon();
  double total = 0.0, prev = 0.0, max_step = 0.0;
  for (int s = 0; s <= n_samples; ++s) {
    const double t = two_pi * (s % n_samples) / n_samples;
    const Point v = field(center + Point{std::cos(t), std::sin(t)} * radius);
    if (!(norm(v) > tiny)) throw PreconditionError("degree undefined on curve");
    const double a = std::atan2(v.y, v.x);
    if (s == 0) {
      prev = a;
      continue;
    }
    const double step = wrap_angle(a - prev);
    max_step = std::max(max_step, std::abs(step));
    total += step;
    prev = a;
  }
  const double raw = total / two_pi;
  DegreeResult r;
  r.degree = static_cast<int>(std::lround(raw));
  r.residual = std::abs(raw - r.degree);
  r.max_step = max_step;
  if (r.residual > 0.45) throw PreconditionError("degree: winding could not be resolved on curve");
  r.under_resolved = r.residual > 0.25 || max_step > 0.5 * pi;
  return r;
}

inline DegreeResult degree(const CartesianVector& v, Point center, double radius, int n_samples) {
  return winding_number([&](Point p) { return sample(v, p); }, center, radius, n_samples);
}

/// Winding of the node values along the outer boundary of the grid,
/// counter-clockwise from the lower-left corner.
inline DegreeResult boundary_degree(const CartesianVector& v) {
  const CartesianGrid& g = v.grid;
  const int nx = g.nx(), ny = g.ny();
  std::vector<std::size_t> loop;
  for (int i = 0; i < nx; ++i) loop.push_back(g.index(i, 0));
  for (int j = 0; j < ny; ++j) loop.push_back(g.index(nx, j));
  for (int i = nx; i > 0; --i) loop.push_back(g.index(i, ny));
  for (int j = ny; j > 0; --j) loop.push_back(g.index(0, j));
  constexpr double tiny = std::numeric_limits<double>::epsilon();
  double total = 0.0, max_step = 0.0;
  for (std::size_t s = 0; s < loop.size(); ++s) {
    const std::size_t a = loop[s], b = loop[(s + 1) % loop.size()];
    if (!(v.modulus(a) > tiny)) throw PreconditionError("degree undefined on curve");
    const double step = wrap_angle(std::atan2(v.c2[b], v.c1[b]) - std::atan2(v.c2[a], v.c1[a]));
    max_step = std::max(max_step, std::abs(step));
    total += step;
  }
  const double raw = total / two_pi;
  DegreeResult r;
  r.degree = static_cast<int>(std::lround(raw));
  r.residual = std::abs(raw - r.degree);
  r.max_step = max_step;
  r.under_resolved = r.residual > 0.25 || max_step > 0.5 * pi;
  return r;
}

// ---------------------------------------------------------------------------
// Vortex detection

struct Detection {
  VortexMeasure measure;
  std::vector<int> winding;                   // per plaquette, row-major nx×ny
  std::vector<std::size_t> unresolved_nodes;  // zero nodes whose phase could not be assigned
};

namespace detail {

struct Cluster {
  double wx = 0, wy = 0, w = 0;
  double sum = 0;
};

// 8-connected clusters of nonzero cells in fixed scan order.
template <class Weight>
std::vector<Cluster> cluster_cells(const CartesianGrid& g, const std::vector<char>& hot, Weight weight) {
  const int nx = g.nx(), ny = g.ny();
  std::vector<char> seen(hot.size(), 0);
  std::vector<Cluster> out;
  std::vector<int> stack;
  for (int start = 0; start < nx * ny; ++start) {
    if (!hot[start] || seen[start]) continue;
    Cluster c;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      const int i = cell % nx, j = cell / nx;
      const auto [wt, q] = weight(cell);
      const Point ctr = g.cell_center(i, j);
      c.wx += wt * ctr.x;
      c.wy += wt * ctr.y;
      c.w += wt;
      c.sum += q;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
          const int nb = jj * nx + ii;
          if (hot[nb] && !seen[nb]) {
            seen[nb] = 1;
            stack.push_back(nb);
          }
        }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Per-plaquette winding of v/|v|, clustered by 8-connectivity; each cluster
/// with nonzero net winding becomes an atom at its |winding|-weighted
/// centroid. Nodes with |v| ≤ zeta·max|v| are treated as zeros and receive
/// the circular mean phase of their nonzero 4-neighbours; zeros without
/// any nonzero neighbour are reported and their plaquettes skipped.
inline Detection detect_vortices_detailed(const CartesianVector& v, double zeta = 1e-12) {
  const CartesianGrid& g = v.grid;
  const int nx = g.nx(), ny = g.ny();
  double vmax = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) vmax = std::max(vmax, v.modulus(k));
  const double floor_mod = zeta * vmax;

  std::vector<double> phase(v.size(), 0.0);
  std::vector<char> valid(v.size(), 1);
  std::vector<std::size_t> zero_nodes;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (vmax == 0.0 || v.modulus(k) <= floor_mod) {
      valid[k] = 0;
      zero_nodes.push_back(k);
    } else {
      phase[k] = std::atan2(v.c2[k], v.c1[k]);
    }
  }
  Detection det{VortexMeasure(g.rect()), std::vector<int>(static_cast<std::size_t>(nx) * ny, 0), {}};
  std::vector<char> usable = valid;
  for (std::size_t k : zero_nodes) {
    const int i = static_cast<int>(k % (nx + 1)), j = static_cast<int>(k / (nx + 1));
    double sx = 0, sy = 0;
    int first = -1;
    std::vector<double> nb_phase;
    const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int ii = i + di[d], jj = j + dj[d];
      if (ii < 0 || jj < 0 || ii > nx || jj > ny) continue;
      const std::size_t nb = g.index(ii, jj);
      if (!valid[nb]) continue;
      if (first < 0) first = static_cast<int>(nb);
      nb_phase.push_back(phase[nb]);
      sx += std::cos(phase[nb]);
      sy += std::sin(phase[nb]);
    }
    if (first < 0) {
      det.unresolved_nodes.push_back(k);
      continue;
    }
    // The winding summed over the plaquettes sharing node k does not depend
    // on the phase assigned to it, as long as no edge increment is exactly
    // ±π. A symmetric neighbourhood therefore gets the phase farthest from
    // every neighbour's antipode.
    if (std::hypot(sx, sy) > 1e-12) {
      phase[k] = std::atan2(sy, sx);
    } else {
      double best = -1.0;
      for (int c = 0; c < 64; ++c) {
        const double cand = phase[first] + two_pi * (c + 0.5) / 64;
        double clearance = pi;
        for (double p : nb_phase) clearance = std::min(clearance, std::abs(wrap_angle(cand - p - pi)));
        if (clearance > best) {
          best = clearance;
          phase[k] = wrap_angle(cand);
        }
      }
    }
    usable[k] = 1;
  }

  std::vector<char> hot(det.winding.size(), 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t c[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
      if (!usable[c[0]] || !usable[c[1]] || !usable[c[2]] || !usable[c[3]]) continue;
      double total = 0.0;
      for (int e = 0; e < 4; ++e) total += wrap_angle(phase[c[(e + 1) % 4]] - phase[c[e]]);
      const int w = static_cast<int>(std::lround(total / two_pi));
      det.winding[static_cast<std::size_t>(j) * nx + i] = w;
      hot[static_cast<std::size_t>(j) * nx + i] = (w != 0);
    }
  }
  const auto clusters = detail::cluster_cells(g, hot, [&](int cell) {
    const int w = det.winding[cell];
    return std::pair<double, double>{std::abs(w), w};
  });
  for (const auto& c : clusters) {
    const int q = static_cast<int>(std::lround(c.sum));
    if (q != 0) det.measure.add({c.wx / c.w, c.wy / c.w}, q);
  }
  return det;
}

inline VortexMeasure detect_vortices(const CartesianVector& v, double zeta = 1e-12) {
  return detect_vortices_detailed(v, zeta).measure;
}

/// Atomic measure read off a cell-staggered Jacobian: cells with
/// |J| ≥ rel_threshold·max|J| are clustered (8-connectivity); each cluster
/// carries charge round(∫J/π) and sits at its |J|-weighted centroid.
inline VortexMeasure jacobian_measure(const CartesianScalar& jac, double rel_threshold = 0.01) {
  require(jac.at == Staggering::cell, "jacobian_measure: expects a cell-staggered Jacobian");
  const CartesianGrid& g = jac.grid;
  double jmax = 0.0;
  for (double x : jac.values) jmax = std::max(jmax, std::abs(x));
  VortexMeasure mu(g.rect());
  if (jmax == 0.0) return mu;
  std::vector<char> hot(jac.size(), 0);
  for (std::size_t c = 0; c < jac.size(); ++c) hot[c] = std::abs(jac[c]) >= rel_threshold * jmax;
  const double area = g.h() * g.h();
  const auto clusters = detail::cluster_cells(g, hot, [&](int cell) {
    return std::pair<double, double>{std::abs(jac[cell]), jac[cell] * area};
  });
  for (const auto& c : clusters) {
    const int q = static_cast<int>(std::lround(c.sum / pi));
    if (q != 0) mu.add({c.wx / c.w, c.wy / c.w}, q);
  }
  return mu;
}

}  // namespace glhom
