#pragma once

// Q-periodic scalar coefficient fields a(y), Q = [0,1)².

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "glhom/geometry.hpp"

namespace glhom {

namespace coeff_kind {

struct Constant {
  double value = 1.0;
};

/// `low` on cells where ⌊2y₁⌋+⌊2y₂⌋ is even, `high` otherwise.
struct Checkerboard {
  double low = 1.0;
  double high = 4.0;
};

/// Layered medium varying along `normal_axis` (0 → y₁, 1 → y₂): `first`
/// on frac(y_axis) < fraction, `second` elsewhere.
struct Laminate {
  double first = 1.0;
  double second = 4.0;
  int normal_axis = 0;
  double fraction = 0.5;
};

/// a(y) = mean + amplitude·cos(2πy₁)·cos(2πy₂).
struct SmoothTrig {
  double mean = 2.0;
  double amplitude = 1.0;
};

/// M×M samples on cell centres, row j covering y₂ ∈ [j/M,(j+1)/M), column i
/// covering y₁ ∈ [i/M,(i+1)/M). Evaluation is nearest-cell.
struct Raster {
  int m = 0;
  std::vector<double> values;  // row-major: values[j*m + i]
};

}  // namespace coeff_kind

struct EssInf {
  double value = 0.0;
  bool sampled = false;  // true when computed as a sample minimum
};

class PeriodicCoefficient {
 public:
  using Kind = std::variant<coeff_kind::Constant, coeff_kind::Checkerboard, coeff_kind::Laminate,
                            coeff_kind::SmoothTrig, coeff_kind::Raster>;

  static PeriodicCoefficient constant(double value) {
    return PeriodicCoefficient(coeff_kind::Constant{value});
  }
  static PeriodicCoefficient checkerboard(double low, double high) {
    return PeriodicCoefficient(coeff_kind::Checkerboard{low, high});
  }
  static PeriodicCoefficient laminate(double first, double second, int normal_axis, double fraction = 0.5) {
    return PeriodicCoefficient(coeff_kind::Laminate{first, second, normal_axis, fraction});
  }
  static PeriodicCoefficient smooth_trig(double mean, double amplitude) {
    return PeriodicCoefficient(coeff_kind::SmoothTrig{mean, amplitude});
  }
  static PeriodicCoefficient raster(int m, std::vector<double> values) {
    return PeriodicCoefficient(coeff_kind::Raster{m, std::move(values)});
  }

  explicit PeriodicCoefficient(Kind kind) : kind_(std::move(kind)) { validate_and_bound(); }

  const Kind& kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double operator()(Point y) const { return eval(y); }

  double eval(Point y) const {
    const double u = y.x - std::floor(y.x);
    const double v = y.y - std::floor(y.y);
    return std::visit([&](const auto& k) { return eval_reduced(k, u, v); }, kind_);
  }

  EssInf ess_inf() const {
    return {alpha_, std::holds_alternative<coeff_kind::Raster>(kind_)};
  }

  /// A point of [0,1)² where a attains its essential infimum (centre of a
  /// minimising cell/layer for piecewise-constant kinds).
  Point argmin() const {
    struct V {
      Point operator()(const coeff_kind::Constant&) const { return {0.5, 0.5}; }
      Point operator()(const coeff_kind::Checkerboard& c) const {
        return c.low <= c.high ? Point{0.25, 0.25} : Point{0.75, 0.25};
      }
      Point operator()(const coeff_kind::Laminate& l) const {
        const double t = l.first <= l.second ? 0.5 * l.fraction : 0.5 * (1.0 + l.fraction);
        return l.normal_axis == 0 ? Point{t, 0.5} : Point{0.5, t};
      }
      Point operator()(const coeff_kind::SmoothTrig& s) const {
        // cos·cos = -1 at (½,0) and = +1 at (0,0)
        return s.amplitude >= 0.0 ? Point{0.5, 0.0} : Point{0.0, 0.0};
      }
      Point operator()(const coeff_kind::Raster& r) const {
        std::size_t best = 0;
        for (std::size_t k = 1; k < r.values.size(); ++k)
          if (r.values[k] < r.values[best]) best = k;
        const int i = static_cast<int>(best % r.m), j = static_cast<int>(best / r.m);
        return {(i + 0.5) / r.m, (j + 0.5) / r.m};
      }
    };
    return std::visit(V{}, kind_);
  }

  PeriodicCoefficient scaled(double c) const {
    require(c > 0.0, "coefficient scale must be positive");
    struct V {
      double c;
      Kind operator()(coeff_kind::Constant k) const { k.value *= c; return k; }
      Kind operator()(coeff_kind::Checkerboard k) const { k.low *= c; k.high *= c; return k; }
      Kind operator()(coeff_kind::Laminate k) const { k.first *= c; k.second *= c; return k; }
      Kind operator()(coeff_kind::SmoothTrig k) const { k.mean *= c; k.amplitude *= c; return k; }
      Kind operator()(coeff_kind::Raster k) const {
        for (auto& v : k.values) v *= c;
        return k;
      }
    };
    return PeriodicCoefficient(std::visit(V{c}, kind_));
  }

  std::string kind_name() const {
    static constexpr const char* names[] = {"constant", "checkerboard", "laminate", "smooth", "raster"};
    return names[kind_.index()];
  }

 private:
  static double eval_reduced(const coeff_kind::Constant& k, double, double) { return k.value; }
  static double eval_reduced(const coeff_kind::Checkerboard& k, double u, double v) {
    const int parity = static_cast<int>(2.0 * u) + static_cast<int>(2.0 * v);
    return (parity % 2 == 0) ? k.low : k.high;
  }
  static double eval_reduced(const coeff_kind::Laminate& k, double u, double v) {
    const double t = k.normal_axis == 0 ? u : v;
    return t < k.fraction ? k.first : k.second;
  }
  static double eval_reduced(const coeff_kind::SmoothTrig& k, double u, double v) {
    return k.mean + k.amplitude * std::cos(two_pi * u) * std::cos(two_pi * v);
  }
  static double eval_reduced(const coeff_kind::Raster& k, double u, double v) {
    const int i = std::min(static_cast<int>(u * k.m), k.m - 1);
    const int j = std::min(static_cast<int>(v * k.m), k.m - 1);
    return k.values[static_cast<std::size_t>(j) * k.m + i];
  }

  void validate_and_bound() {
    struct V {
      PeriodicCoefficient* self;
      void operator()(const coeff_kind::Constant& k) const {
        self->alpha_ = self->beta_ = k.value;
      }
      void operator()(const coeff_kind::Checkerboard& k) const {
        self->alpha_ = std::min(k.low, k.high);
        self->beta_ = std::max(k.low, k.high);
      }
      void operator()(const coeff_kind::Laminate& k) const {
        require(k.normal_axis == 0 || k.normal_axis == 1, "laminate normal axis must be 0 or 1");
        require(k.fraction > 0.0 && k.fraction < 1.0, "laminate volume fraction must lie in (0,1)");
        self->alpha_ = std::min(k.first, k.second);
        self->beta_ = std::max(k.first, k.second);
      }
      void operator()(const coeff_kind::SmoothTrig& k) const {
        self->alpha_ = k.mean - std::abs(k.amplitude);
        self->beta_ = k.mean + std::abs(k.amplitude);
      }
      void operator()(const coeff_kind::Raster& k) const {
        require(k.m >= 1, "raster size must be positive");
        require(k.values.size() == static_cast<std::size_t>(k.m) * k.m, "raster needs M*M samples");
        self->alpha_ = *std::min_element(k.values.begin(), k.values.end());
        self->beta_ = *std::max_element(k.values.begin(), k.values.end());
      }
    };
    std::visit(V{this}, kind_);
    require(std::isfinite(alpha_) && std::isfinite(beta_), "coefficient values must be finite");
    require(alpha_ > 0.0, "coefficient must be bounded below by a positive constant");
  }

  Kind kind_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

/// Parses the plain-text raster format: "M", then M rows of M positive
/// decimals. Row j holds y₂ ∈ [j/M,(j+1)/M).
inline PeriodicCoefficient parse_raster(std::istream& in) {
  int m = 0;
  if (!(in >> m) || m < 1) throw PreconditionError("raster: first token must be a positive integer M");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m) * m);
  for (long k = 0; k < static_cast<long>(m) * m; ++k) {
    double v = 0.0;
    if (!(in >> v))
      throw PreconditionError("raster: expected " + std::to_string(static_cast<long>(m) * m) +
                              " samples, got " + std::to_string(k));
    if (!(v > 0.0)) throw PreconditionError("raster: sample " + std::to_string(k) + " is not positive");
    values.push_back(v);
  }
  std::string extra;
  if (in >> extra) throw PreconditionError("raster: trailing data after M*M samples");
  return PeriodicCoefficient::raster(m, std::move(values));
}

inline PeriodicCoefficient load_raster(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw PreconditionError("raster: cannot open " + path);
  return parse_raster(f);
}

}  // namespace glhom
