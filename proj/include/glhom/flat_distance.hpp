#pragma once

// Flat distance between atomic vortex measures, as a finite transport
// problem: unit masses of ν = μ₁ − μ₂ are either paired with a unit of the
// opposite sign or discharged at ∂Ω.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "glhom/geometry.hpp"
#include "glhom/vortex_analysis.hpp"

namespace glhom {

/// Atom `index` of measure `measure` (1 or 2).
struct AtomRef {
  int measure = 1;
  int index = 0;
  constexpr bool operator==(const AtomRef&) const = default;
};

/// Moves `mass` from a positive unit of ν at `from` to a negative unit at
/// `to`; an empty end means the boundary.
struct TransportEdge {
  std::optional<AtomRef> from;
  std::optional<AtomRef> to;
  int mass = 0;
  double unit_cost = 0.0;
};

struct FlatCertificate {
  double transport_cost = 0.0;
  double discharge_cost = 0.0;
  int units = 0;  // total unit masses of ν
  bool exhaustive = false;
};

struct FlatDistanceResult {
  double value = 0.0;
  std::vector<TransportEdge> plan;
  FlatCertificate certificate;
};

/// Cost of moving a unit between x and y: the test-function bounds
/// ‖φ‖∞ ≤ 1 and Lip φ ≤ 1 cap it at 2.
inline double pair_cost(Point x, Point y) { return std::min(dist(x, y), 2.0); }

/// Cost of discharging a unit at ∂Ω from x.
inline double discharge_cost(const Rect& domain, Point x) {
  return std::min(domain.boundary_distance(x), 1.0);
}

namespace detail {

/// Minimum-cost perfect assignment (rows to columns) of a square matrix.
/// Returns the column assigned to each row.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct Unit {
  AtomRef ref;
  Point x;
  double ground = 0.0;
};

// Best matching of positive units to negative units or ground, by
// enumeration. match[p] = index of negative unit or -1 for ground.
inline double enumerate_matchings(const std::vector<Unit>& pos, const std::vector<Unit>& neg,
                                  std::vector<int>& best) {
  std::vector<int> cur(pos.size(), -1);
  std::vector<char> taken(neg.size(), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  auto rec = [&](auto& self, std::size_t p, double acc) -> void {
    if (acc >= best_cost) return;
    if (p == pos.size()) {
      double total = acc;
      for (std::size_t n = 0; n < neg.size(); ++n)
        if (!taken[n]) total += neg[n].ground;
      if (total < best_cost) {
        best_cost = total;
        best = cur;
      }
      return;
    }
    cur[p] = -1;
    self(self, p + 1, acc + pos[p].ground);
    for (std::size_t n = 0; n < neg.size(); ++n) {
      if (taken[n]) continue;
      taken[n] = 1;
      cur[p] = static_cast<int>(n);
      self(self, p + 1, acc + pair_cost(pos[p].x, neg[n].x));
      taken[n] = 0;
    }
    cur[p] = -1;
  };
  rec(rec, 0, 0.0);
  return best_cost;
}

}  // namespace detail

inline FlatDistanceResult flat_distance(const VortexMeasure& mu1, const VortexMeasure& mu2) {
  require(mu1.domain() == mu2.domain(), "flat_distance: measures must live on the same domain");
  const Rect& dom = mu1.domain();
  std::vector<detail::Unit> pos, neg;
  auto split = [&](const VortexMeasure& mu, int which, int sign) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const Atom& a = mu.atoms()[i];
      require(dom.contains(a.position), "flat_distance: atom outside the domain");
      const int q = sign * a.charge;
      detail::Unit u{{which, static_cast<int>(i)}, a.position, discharge_cost(dom, a.position)};
      for (int k = 0; k < std::abs(q); ++k) (q > 0 ? pos : neg).push_back(u);
    }
  };
  split(mu1, 1, +1);
  split(mu2, 2, -1);

  const std::size_t np = pos.size(), nn = neg.size();
  std::vector<int> match(np, -1);  // negative unit index or -1
  FlatDistanceResult res;
  res.certificate.units = static_cast<int>(np + nn);
  if (np + nn <= 8) {
    res.certificate.exhaustive = true;
    detail::enumerate_matchings(pos, neg, match);
  } else {
    // Rows: positive units then one ground row per negative unit.
    // Columns: negative units then one ground column per positive unit.
    const std::size_t n = np + nn;
    std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t col = 0; col < n; ++col) {
        if (r < np && col < nn) c[r][col] = pair_cost(pos[r].x, neg[col].x);
        else if (r < np) c[r][col] = pos[r].ground;
        else if (col < nn) c[r][col] = neg[col].ground;
      }
    const auto assign = detail::hungarian(c);
    for (std::size_t p = 0; p < np; ++p) match[p] = assign[p] < static_cast<int>(nn) ? assign[p] : -1;
  }

  std::vector<char> matched(nn, 0);
  auto push = [&](std::optional<AtomRef> from, std::optional<AtomRef> to, double cost) {
    for (TransportEdge& e : res.plan)
      if (e.from == from && e.to == to) {
        ++e.mass;
        return;
      }
    res.plan.push_back({from, to, 1, cost});
  };
  for (std::size_t p = 0; p < np; ++p) {
    if (match[p] >= 0) {
      matched[match[p]] = 1;
      const double c = pair_cost(pos[p].x, neg[match[p]].x);
      res.certificate.transport_cost += c;
      push(pos[p].ref, neg[match[p]].ref, c);
    } else {
      res.certificate.discharge_cost += pos[p].ground;
      push(pos[p].ref, std::nullopt, pos[p].ground);
    }
  }
  for (std::size_t n = 0; n < nn; ++n) {
    if (matched[n]) continue;
    res.certificate.discharge_cost += neg[n].ground;
    push(std::nullopt, neg[n].ref, neg[n].ground);
  }
  res.value = res.certificate.transport_cost + res.certificate.discharge_cost;
  return res;
}

/// Edge list "from_measure,from_index,to_measure,to_index,mass,unit_cost";
/// the boundary is written as measure 0, index -1.
inline void write_plan_csv(std::ostream& os, const FlatDistanceResult& r) {
  os << "from_measure,from_index,to_measure,to_index,mass,unit_cost\n";
  char buf[128];
  for (const TransportEdge& e : r.plan) {
    const AtomRef none{0, -1};
    const AtomRef f = e.from.value_or(none), t = e.to.value_or(none);
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%d,%.17g\n", f.measure, f.index, t.measure, t.index, e.mass,
                  e.unit_cost);
    os << buf;
  }
}

}  // namespace glhom
