#pragma once

// Preconditioned conjugate gradients for symmetric positive (semi)definite
// operators given as callables.

#include <cmath>
#include <span>
#include <vector>

namespace glhom {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Solves A x = b starting from x. `apply(in, out)` computes out = A·in,
/// `precondition(r, z)` computes z ≈ A⁻¹r, `project(v)` removes kernel
/// components (identity for definite systems). Convergence is declared when
/// ‖r‖ ≤ rtol·‖b‖.
template <class Apply, class Precondition, class Project>
CgResult conjugate_gradient(Apply&& apply, std::span<const double> b, std::vector<double>& x,
                            Precondition&& precondition, Project&& project, double rtol, int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), ap(n);
  const double bnorm = std::sqrt(dot(b, b));
  CgResult res;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  project(x);
  apply(std::span<const double>(x), std::span<double>(ap));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  precondition(std::span<const double>(r), std::span<double>(z));
  project(z);
  p = z;
  double rz = dot(r, z);
  double rnorm = std::sqrt(dot(r, r));
  while (true) {
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iter) break;
    apply(std::span<const double>(p), std::span<double>(ap));
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double step = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * ap[i];
    }
    project(x);
    precondition(std::span<const double>(r), std::span<double>(z));
    project(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = std::sqrt(dot(r, r));
    ++res.iterations;
  }
  return res;
}

/// Removes the mean of a vector (projection off the constants).
inline void project_mean_zero(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

}  // namespace glhom
