#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace glhom {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Raised when a caller violates an operation's documented precondition.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative solver fails; carries the last residual.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual_)
      : std::runtime_error(what), residual(residual_) {}
  double residual;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw PreconditionError(msg);
}

struct Point {
  double x = 0.0;
  double y = 0.0;

  constexpr Point operator+(Point o) const { return {x + o.x, y + o.y}; }
  constexpr Point operator-(Point o) const { return {x - o.x, y - o.y}; }
  constexpr Point operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Point&) const = default;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double dist(Point a, Point b) { return norm(a - b); }
inline constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

/// Axis-aligned open rectangle (x0,x1)×(y0,y1).
struct Rect {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  bool contains(Point p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
  double boundary_distance(Point p) const {
    return std::min({p.x - x0, x1 - p.x, p.y - y0, y1 - p.y});
  }
  double diameter() const { return std::hypot(x1 - x0, y1 - y0); }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  constexpr bool operator==(const Rect&) const = default;
};

inline constexpr Rect unit_square{0.0, 1.0, 0.0, 1.0};

/// Symmetric 2×2 matrix [[a11, a12], [a12, a22]].
struct Sym2 {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  static constexpr Sym2 identity(double s = 1.0) { return {s, 0.0, s}; }
  constexpr double det() const { return a11 * a22 - a12 * a12; }
  constexpr double trace() const { return a11 + a22; }
  constexpr double quad(double u, double v) const { return a11 * u * u + 2.0 * a12 * u * v + a22 * v * v; }

  /// Eigenvalues in ascending order.
  std::array<double, 2> eigenvalues() const {
    const double m = 0.5 * (a11 + a22);
    const double r = std::hypot(0.5 * (a11 - a22), a12);
    return {m - r, m + r};
  }
  constexpr Sym2 operator*(double s) const { return {a11 * s, a12 * s, a22 * s}; }
};

/// Branch of the polar angle with values in (-π/2, 3π/2], cut along the
/// negative x2-axis.
inline double angle_cut_down(Point p) {
  double t = std::atan2(p.y, p.x);  // (-π, π]
  if (t <= -0.5 * pi) t += two_pi;
  return t;
}

/// Wraps an angle increment into (-π, π].
inline double wrap_angle(double d) {
  d = std::remainder(d, two_pi);
  if (d <= -pi) d += two_pi;
  return d;
}

}  // namespace glhom
