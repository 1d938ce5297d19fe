#pragma once

// Scalar and vector fields on uniform Cartesian grids and log-polar annulus
// grids, with second-order gradient stencils and quadrature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <type_traits>
#include <vector>

#include "glhom/coefficients.hpp"
#include "glhom/geometry.hpp"

namespace glhom {

/// Node-based uniform grid on [origin, origin + (lx, ly)] with square cells.
/// Nodes are (i,j), 0 ≤ i ≤ nx, 0 ≤ j ≤ ny. An optional node mask marks
/// excised nodes (0 = excluded).
class CartesianGrid {
 public:
  CartesianGrid(Point origin, double lx, double ly, int nx, int ny)
      : origin_(origin), lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
    require(nx >= 4 && ny >= 4, "CartesianGrid: need at least 4 cells per axis");
    require(lx > 0.0 && ly > 0.0, "CartesianGrid: extents must be positive");
    h_ = lx / nx;
    require(std::abs(ly / ny - h_) <= 1e-12 * h_, "CartesianGrid: cells must be square");
  }

  static CartesianGrid over(const Rect& r, int nx) {
    const int ny = static_cast<int>(std::lround(nx * r.height() / r.width()));
    return CartesianGrid({r.x0, r.y0}, r.width(), r.height(), nx, ny);
  }

  Point origin() const { return origin_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  Rect rect() const { return {origin_.x, origin_.x + lx_, origin_.y, origin_.y + ly_}; }

  std::size_t node_count() const { return static_cast<std::size_t>(nx_ + 1) * (ny_ + 1); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * (nx_ + 1) + i; }
  Point node(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
  Point node(std::size_t k) const { return node(static_cast<int>(k % (nx_ + 1)), static_cast<int>(k / (nx_ + 1))); }
  Point cell_center(int i, int j) const { return {origin_.x + (i + 0.5) * h_, origin_.y + (j + 0.5) * h_}; }

  bool has_mask() const { return !mask_.empty(); }
  bool active(int i, int j) const { return mask_.empty() || mask_[index(i, j)] != 0; }
  bool cell_active(int i, int j) const {
    return active(i, j) && active(i + 1, j) && active(i, j + 1) && active(i + 1, j + 1);
  }

  /// Excludes every node strictly inside one of the given disks.
  void excise_disk(Point c, double radius) {
    if (mask_.empty()) mask_.assign(node_count(), 1);
    for (int j = 0; j <= ny_; ++j)
      for (int i = 0; i <= nx_; ++i)
        if (dist(node(i, j), c) < radius) mask_[index(i, j)] = 0;
  }
  void set_mask(std::vector<std::uint8_t> mask) {
    require(mask.empty() || mask.size() == node_count(), "mask size must match node count");
    mask_ = std::move(mask);
  }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  /// Trapezoid weight of node (i,j); zero for masked nodes.
  double node_weight(int i, int j) const {
    if (!active(i, j)) return 0.0;
    double w = h_ * h_;
    if (i == 0 || i == nx_) w *= 0.5;
    if (j == 0 || j == ny_) w *= 0.5;
    return w;
  }

 private:
  Point origin_;
  double lx_, ly_;
  int nx_, ny_;
  double h_ = 0.0;
  std::vector<std::uint8_t> mask_;
};

/// Annulus grid with logarithmic radial spacing ρ_j = r_in·(r_out/r_in)^(j/(n_r−1))
/// and n_θ periodic angular nodes θ_k = 2πk/n_θ. Node index = j·n_θ + k.
class PolarGrid {
 public:
  PolarGrid(Point center, double r_inner, double r_outer, int n_r, int n_theta)
      : center_(center), r_inner_(r_inner), r_outer_(r_outer), n_r_(n_r), n_theta_(n_theta) {
    require(r_inner > 0.0 && r_inner < r_outer, "PolarGrid: need 0 < r_inner < r_outer");
    require(n_r >= 8 && n_theta >= 16, "PolarGrid: need n_r >= 8 and n_theta >= 16");
    ds_ = std::log(r_outer / r_inner) / (n_r - 1);
    dtheta_ = two_pi / n_theta;
    rho_.resize(n_r);
    for (int j = 0; j < n_r; ++j) rho_[j] = r_inner * std::exp(j * ds_);
    rho_.back() = r_outer;
  }

  Point center() const { return center_; }
  double r_inner() const { return r_inner_; }
  double r_outer() const { return r_outer_; }
  int n_r() const { return n_r_; }
  int n_theta() const { return n_theta_; }
  double ds() const { return ds_; }
  double dtheta() const { return dtheta_; }
  double rho(int j) const { return rho_[j]; }
  double theta(int k) const { return k * dtheta_; }

  std::size_t node_count() const { return static_cast<std::size_t>(n_r_) * n_theta_; }
  std::size_t index(int j, int k) const { return static_cast<std::size_t>(j) * n_theta_ + k; }
  Point node(int j, int k) const {
    const double t = theta(k);
    return {center_.x + rho_[j] * std::cos(t), center_.y + rho_[j] * std::sin(t)};
  }
  Point node(std::size_t idx) const { return node(static_cast<int>(idx / n_theta_), static_cast<int>(idx % n_theta_)); }

  /// Angular index k_c of the edge (k_c, k_c+1) crossed by the cut ray along
  /// the negative x2-axis (θ = 3π/2). Node k_c itself lies on the upper branch.
  int cut_edge() const { return (3 * n_theta_) / 4; }

  /// Value of the branch θ ∈ (−π/2, 3π/2] at angular node k.
  double lifting_angle(int k) const { return k <= cut_edge() ? theta(k) : theta(k) - two_pi; }

  /// Trapezoid weight in (s = log ρ, θ) with area element ρ² ds dθ.
  double node_weight(int j, int) const {
    double w = rho_[j] * rho_[j] * ds_ * dtheta_;
    if (j == 0 || j == n_r_ - 1) w *= 0.5;
    return w;
  }

 private:
  Point center_;
  double r_inner_, r_outer_;
  int n_r_, n_theta_;
  double ds_ = 0.0, dtheta_ = 0.0;
  std::vector<double> rho_;
};

enum class Staggering { node, cell };

/// Component frame of a vector field: Cartesian (e1,e2) or the local polar
/// frame (e_ρ, e_θ).
enum class Frame { cartesian, polar };

template <class Grid>
struct ScalarField {
  Grid grid;
  std::vector<double> values;
  Staggering at = Staggering::node;
  /// For angular liftings on a PolarGrid: the value drops by `jump` (= 2πz)
  /// when crossing the cut ray counter-clockwise.
  std::optional<double> jump;

  explicit ScalarField(Grid g, double fill = 0.0, Staggering s = Staggering::node)
      : grid(std::move(g)), values(count(grid, s), fill), at(s) {}

  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }

 private:
  static std::size_t count(const Grid& g, Staggering s) {
    if (s == Staggering::node) return g.node_count();
    if constexpr (std::is_same_v<Grid, CartesianGrid>) {
      return static_cast<std::size_t>(g.nx()) * g.ny();
    } else {
      throw PreconditionError("cell-staggered fields are only defined on Cartesian grids");
    }
  }
};

template <class Grid>
struct VectorField {
  Grid grid;
  std::vector<double> c1, c2;
  Frame frame = Frame::cartesian;

  explicit VectorField(Grid g, Frame f = Frame::cartesian)
      : grid(std::move(g)), c1(grid.node_count(), 0.0), c2(grid.node_count(), 0.0), frame(f) {}

  std::size_t size() const { return c1.size(); }
  double modulus(std::size_t k) const { return std::hypot(c1[k], c2[k]); }
};

using CartesianScalar = ScalarField<CartesianGrid>;
using CartesianVector = VectorField<CartesianGrid>;
using PolarScalar = ScalarField<PolarGrid>;
using PolarVector = VectorField<PolarGrid>;

template <class Grid, class F>
ScalarField<Grid> make_scalar(const Grid& grid, F&& f) {
  ScalarField<Grid> out(grid);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(grid.node(k));
  return out;
}

/// `f` maps a point to a Point-like pair (v¹, v²).
template <class Grid, class F>
VectorField<Grid> make_vector(const Grid& grid, F&& f) {
  VectorField<Grid> out(grid);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Point v = f(grid.node(k));
    out.c1[k] = v.x;
    out.c2[k] = v.y;
  }
  return out;
}

namespace detail {

// Derivative along a line of n nodes with spacing d, using the accessor
// diff(a, b) = u_b − u_a. Second-order central in the interior,
// second-order one-sided at the ends; `ok(i)` marks usable nodes.
template <class Diff, class Ok>
double line_derivative(int i, int n, double d, Diff diff, Ok ok) {
  const bool lo = i - 1 >= 0 && ok(i - 1);
  const bool hi = i + 1 < n && ok(i + 1);
  if (lo && hi) return diff(i - 1, i + 1) / (2.0 * d);
  if (hi) {
    if (i + 2 < n && ok(i + 2)) return (4.0 * diff(i, i + 1) - diff(i, i + 2)) / (2.0 * d);
    return diff(i, i + 1) / d;
  }
  if (lo) {
    if (i - 2 >= 0 && ok(i - 2)) return (4.0 * diff(i - 1, i) - diff(i - 2, i)) / (2.0 * d);
    return diff(i - 1, i) / d;
  }
  return 0.0;
}

}  // namespace detail

/// Gradient of a node field on a Cartesian grid. Masked nodes get zero and
/// stencils next to them fall back to one-sided differences.
inline CartesianVector gradient(const CartesianScalar& u) {
  require(u.at == Staggering::node, "gradient: expects a node-staggered field");
  require(!u.jump, "gradient: declared jumps are supported on polar grids only");
  const CartesianGrid& g = u.grid;
  CartesianVector out(g);
  const int nx = g.nx(), ny = g.ny();
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      if (!g.active(i, j)) continue;
      const std::size_t k = g.index(i, j);
      out.c1[k] = detail::line_derivative(
          i, nx + 1, g.h(), [&](int a, int b) { return u[g.index(b, j)] - u[g.index(a, j)]; },
          [&](int a) { return g.active(a, j); });
      out.c2[k] = detail::line_derivative(
          j, ny + 1, g.h(), [&](int a, int b) { return u[g.index(i, b)] - u[g.index(i, a)]; },
          [&](int a) { return g.active(i, a); });
    }
  }
  return out;
}

/// Gradient on a PolarGrid in physical components (∂_ρ u, ρ⁻¹∂_θ u),
/// aware of a declared jump across the cut ray.
inline PolarVector gradient(const PolarScalar& u) {
  const PolarGrid& g = u.grid;
  PolarVector out(g, Frame::polar);
  const int nr = g.n_r(), nt = g.n_theta(), kc = g.cut_edge();
  const double jump = u.jump.value_or(0.0);
  auto all = [](int) { return true; };
  for (int j = 0; j < nr; ++j) {
    const double rho = g.rho(j);
    for (int k = 0; k < nt; ++k) {
      const std::size_t idx = g.index(j, k);
      const double ds_u = detail::line_derivative(
          j, nr, g.ds(), [&](int a, int b) { return u[g.index(b, k)] - u[g.index(a, k)]; }, all);
      const int kp = (k + 1) % nt, km = (k + nt - 1) % nt;
      double du = u[g.index(j, kp)] - u[g.index(j, km)];
      // edges (km,k) and (k,kp) are summed; correct whichever crosses the cut
      if (km == kc || k == kc) du += jump;
      out.c1[idx] = ds_u / rho;
      out.c2[idx] = du / (2.0 * g.dtheta()) / rho;
    }
  }
  return out;
}

/// Node quadrature (trapezoid, masked nodes excluded); cell-staggered
/// Cartesian fields use the midpoint rule over active cells.
inline double integrate(const CartesianScalar& f) {
  const CartesianGrid& g = f.grid;
  double sum = 0.0;
  if (f.at == Staggering::cell) {
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        if (g.cell_active(i, j)) sum += f[static_cast<std::size_t>(j) * g.nx() + i];
    return sum * g.h() * g.h();
  }
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) sum += g.node_weight(i, j) * f[g.index(i, j)];
  return sum;
}

inline double integrate(const PolarScalar& f) {
  const PolarGrid& g = f.grid;
  double sum = 0.0;
  for (int j = 0; j < g.n_r(); ++j)
    for (int k = 0; k < g.n_theta(); ++k) sum += g.node_weight(j, k) * f[g.index(j, k)];
  return sum;
}

/// ∫ a(x/δ)|∇w|² dx over the field's grid.
template <class Grid>
double dirichlet_energy(const VectorField<Grid>& w, const PeriodicCoefficient& coeff, double delta) {
  require(delta > 0.0, "dirichlet_energy: delta must be positive");
  ScalarField<Grid> w1(w.grid), w2(w.grid);
  w1.values = w.c1;
  w2.values = w.c2;
  const auto g1 = gradient(w1);
  const auto g2 = gradient(w2);
  ScalarField<Grid> density(w.grid);
  for (std::size_t k = 0; k < density.size(); ++k) {
    const Point x = w.grid.node(k);
    const double grad2 = g1.c1[k] * g1.c1[k] + g1.c2[k] * g1.c2[k] + g2.c1[k] * g2.c1[k] + g2.c2[k] * g2.c2[k];
    density[k] = coeff.eval(x * (1.0 / delta)) * grad2;
  }
  return integrate(density);
}

/// Bilinear interpolation of a node field at an arbitrary point inside the
/// grid rectangle (clamped to the boundary).
inline double sample(const CartesianScalar& f, Point p) {
  const CartesianGrid& g = f.grid;
  const double fx = std::clamp((p.x - g.origin().x) / g.h(), 0.0, static_cast<double>(g.nx()));
  const double fy = std::clamp((p.y - g.origin().y) / g.h(), 0.0, static_cast<double>(g.ny()));
  const int i = std::min(static_cast<int>(fx), g.nx() - 1);
  const int j = std::min(static_cast<int>(fy), g.ny() - 1);
  const double s = fx - i, t = fy - j;
  return (1 - s) * (1 - t) * f[g.index(i, j)] + s * (1 - t) * f[g.index(i + 1, j)] +
         (1 - s) * t * f[g.index(i, j + 1)] + s * t * f[g.index(i + 1, j + 1)];
}

inline Point sample(const CartesianVector& v, Point p) {
  const CartesianGrid& g = v.grid;
  const double fx = std::clamp((p.x - g.origin().x) / g.h(), 0.0, static_cast<double>(g.nx()));
  const double fy = std::clamp((p.y - g.origin().y) / g.h(), 0.0, static_cast<double>(g.ny()));
  const int i = std::min(static_cast<int>(fx), g.nx() - 1);
  const int j = std::min(static_cast<int>(fy), g.ny() - 1);
  const double s = fx - i, t = fy - j;
  const std::size_t k00 = g.index(i, j), k10 = g.index(i + 1, j), k01 = g.index(i, j + 1),
                    k11 = g.index(i + 1, j + 1);
  auto lerp = [&](const std::vector<double>& c) {
    return (1 - s) * (1 - t) * c[k00] + s * (1 - t) * c[k10] + (1 - s) * t * c[k01] + s * t * c[k11];
  };
  return {lerp(v.c1), lerp(v.c2)};
}

/// Bilinear interpolation in (log ρ, θ) of a single-valued polar field.
/// Points outside the annulus are clamped radially.
inline double sample(const PolarScalar& f, Point p) {
  require(!f.jump, "sample: polar fields with a declared jump are not single-valued");
  const PolarGrid& g = f.grid;
  const Point d = p - g.center();
  const double rho = std::clamp(norm(d), g.r_inner(), g.r_outer());
  double t = std::atan2(d.y, d.x);
  if (t < 0.0) t += two_pi;
  const double fs = std::clamp(std::log(rho / g.r_inner()) / g.ds(), 0.0, static_cast<double>(g.n_r() - 1));
  const double ft = t / g.dtheta();
  const int j = std::min(static_cast<int>(fs), g.n_r() - 2);
  const int k = static_cast<int>(ft) % g.n_theta();
  const int kp = (k + 1) % g.n_theta();
  const double a = fs - j, b = ft - std::floor(ft);
  return (1 - a) * (1 - b) * f[g.index(j, k)] + a * (1 - b) * f[g.index(j + 1, k)] +
         (1 - a) * b * f[g.index(j, kp)] + a * b * f[g.index(j + 1, kp)];
}

/// CSV export: "x,y,value" per node (cell centres for cell fields).
inline void write_csv(std::ostream& os, const CartesianScalar& f) {
  char buf[96];
  os << "x,y,value\n";
  const CartesianGrid& g = f.grid;
  if (f.at == Staggering::cell) {
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const Point c = g.cell_center(i, j);
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.12g\n", c.x, c.y, f[static_cast<std::size_t>(j) * g.nx() + i]);
        os << buf;
      }
    return;
  }
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Point x = g.node(k);
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.12g\n", x.x, x.y, f[k]);
    os << buf;
  }
}

template <class Grid>
void write_csv(std::ostream& os, const VectorField<Grid>& v) {
  char buf[128];
  os << "x,y,v1,v2\n";
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Point x = v.grid.node(k);
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.12g,%.12g\n", x.x, x.y, v.c1[k], v.c2[k]);
    os << buf;
  }
}

inline void write_csv(std::ostream& os, const PolarScalar& f) {
  char buf[96];
  os << "x,y,value\n";
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Point x = f.grid.node(k);
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.12g\n", x.x, x.y, f[k]);
    os << buf;
  }
}

}  // namespace glhom
