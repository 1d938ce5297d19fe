#pragma once

// Expansion and merging of disjoint weighted balls, with the annular energy
// lower bound carried by the resulting family.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "glhom/geometry.hpp"

namespace glhom {

struct WeightedBall {
  Point center;
  double radius = 0.0;
  int weight = 0;
};

struct MergeEvent {
  double time = 0.0;
  std::vector<int> merged_ids;  // ids alive just before the event
  int new_id = 0;
  WeightedBall result;
};

/// Smallest ball containing two balls whose closures meet (or one
/// containing the other).
inline WeightedBall enclose_pair(const WeightedBall& a, const WeightedBall& b) {
  const double d = dist(a.center, b.center);
  require(d <= (a.radius + b.radius) * (1.0 + 1e-12), "merge_cluster: balls do not touch");
  const int w = a.weight + b.weight;
  if (d + b.radius <= a.radius) return {a.center, a.radius, w};
  if (d + a.radius <= b.radius) return {b.center, b.radius, w};
  const double r = 0.5 * (d + a.radius + b.radius);
  // centre on the segment, at distance r − r_a from a's centre
  const Point c = a.center + (b.center - a.center) * ((r - a.radius) / d);
  return {c, r, w};
}

namespace detail {

inline bool closures_meet(const WeightedBall& a, const WeightedBall& b) {
  return dist(a.center, b.center) <= (a.radius + b.radius) * (1.0 + 1e-12);
}

// Connected components of the "closures meet" graph, in index order.
inline std::vector<std::vector<int>> touching_components(const std::vector<WeightedBall>& balls) {
  const int n = static_cast<int>(balls.size());
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    out.emplace_back();
    std::vector<int> stack{s};
    comp[s] = static_cast<int>(out.size()) - 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      out.back().push_back(i);
      for (int j = 0; j < n; ++j)
        if (comp[j] < 0 && closures_meet(balls[i], balls[j])) {
          comp[j] = comp[s];
          stack.push_back(j);
        }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

}  // namespace detail

/// Merges a connected touching family into one ball: start from the
/// largest ball and repeatedly absorb the largest remaining ball that meets
/// the current enclosure. The radius never exceeds the sum of radii.
inline WeightedBall merge_cluster(const std::vector<WeightedBall>& balls) {
  require(!balls.empty(), "merge_cluster: empty family");
  require(detail::touching_components(balls).size() == 1, "merge_cluster: family is not connected");
  std::vector<int> order(balls.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return balls[a].radius > balls[b].radius; });
  WeightedBall acc = balls[order[0]];
  std::vector<char> used(balls.size(), 0);
  used[order[0]] = 1;
  for (std::size_t step = 1; step < balls.size(); ++step) {
    int pick = -1;
    for (int i : order)
      if (!used[i] && detail::closures_meet(acc, balls[i])) {
        pick = i;
        break;
      }
    // The enclosure contains every absorbed ball, so some remaining ball
    // of a connected family always meets it.
    require(pick >= 0, "merge_cluster: family is not connected");
    acc = enclose_pair(acc, balls[pick]);
    used[pick] = 1;
  }
  return acc;
}

/// Event-driven history of the family B(t). Between events every radius
/// is r(t) = ρ·(1+t) with ρ fixed.
class BallTimeline {
 public:
  struct Ball {
    int id;
    Point center;
    double rho;  // radius / (1+t)
    int weight;
  };
  struct Snapshot {
    double t_start;
    std::vector<Ball> balls;
  };

  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  const std::vector<MergeEvent>& events() const { return events_; }
  double t_final() const { return t_final_; }

  /// B(t) for 0 ≤ t ≤ t_final; at an event time the merged family.
  std::vector<WeightedBall> family_at(double t) const {
    require(t >= 0.0 && t <= t_final_, "family_at: time outside the simulated range");
    const Snapshot& s = snapshot_at(t);
    std::vector<WeightedBall> out;
    out.reserve(s.balls.size());
    for (const Ball& b : s.balls) out.push_back({b.center, b.rho * (1.0 + t), b.weight});
    return out;
  }

  std::vector<int> ids_at(double t) const {
    std::vector<int> ids;
    for (const Ball& b : snapshot_at(t).balls) ids.push_back(b.id);
    return ids;
  }

  /// Sum of radii of B(t).
  double total_radius(double t) const {
    double s = 0.0;
    for (const auto& b : family_at(t)) s += b.radius;
    return s;
  }

 private:
  friend BallTimeline evolve(const std::vector<WeightedBall>&, double);

  const Snapshot& snapshot_at(double t) const {
    auto it = std::upper_bound(snapshots_.begin(), snapshots_.end(), t,
                               [](double v, const Snapshot& s) { return v < s.t_start; });
    return *std::prev(it);
  }

  std::vector<Snapshot> snapshots_;
  std::vector<MergeEvent> events_;
  double t_final_ = 0.0;
};

/// Exact event-driven expansion up to t_final. Collision times solve
/// (ρᵢ+ρⱼ)(1+t) = |xᵢ−xⱼ|; touching components merge and cascade until the
/// closures are pairwise disjoint again.
inline BallTimeline evolve(const std::vector<WeightedBall>& initial, double t_final) {
  require(t_final >= 0.0, "evolve: t_final must be nonnegative");
  for (std::size_t i = 0; i < initial.size(); ++i) {
    require(initial[i].radius > 0.0, "evolve: radii must be positive");
    for (std::size_t j = i + 1; j < initial.size(); ++j)
      if (dist(initial[i].center, initial[j].center) <= initial[i].radius + initial[j].radius)
        throw PreconditionError("evolve: initial balls " + std::to_string(i) + " and " + std::to_string(j) +
                                " are not disjoint");
  }
  BallTimeline tl;
  tl.t_final_ = t_final;
  std::vector<BallTimeline::Ball> cur;
  for (std::size_t i = 0; i < initial.size(); ++i)
    cur.push_back({static_cast<int>(i), initial[i].center, initial[i].radius, initial[i].weight});
  int next_id = static_cast<int>(initial.size());
  double t = 0.0;
  tl.snapshots_.push_back({0.0, cur});

  while (true) {
    double growth = std::numeric_limits<double>::infinity();  // 1 + t at the next collision
    for (std::size_t i = 0; i < cur.size(); ++i)
      for (std::size_t j = i + 1; j < cur.size(); ++j)
        growth = std::min(growth, dist(cur[i].center, cur[j].center) / (cur[i].rho + cur[j].rho));
    const double t_hit = growth - 1.0;
    if (!(t_hit <= t_final)) break;
    t = std::max(t, t_hit);

    struct Live {
      WeightedBall ball;
      int id;
      std::vector<int> absorbed;
      bool created;
    };
    std::vector<Live> live;
    for (const auto& b : cur) live.push_back({{b.center, b.rho * (1.0 + t), b.weight}, b.id, {b.id}, false});
    while (true) {
      std::vector<WeightedBall> geo;
      for (const auto& l : live) geo.push_back(l.ball);
      const auto comps = detail::touching_components(geo);
      if (comps.size() == live.size()) break;
      std::vector<Live> next;
      for (const auto& comp : comps) {
        if (comp.size() == 1) {
          next.push_back(live[comp[0]]);
          continue;
        }
        std::vector<WeightedBall> members;
        Live merged{{}, next_id++, {}, true};
        for (int i : comp) {
          members.push_back(live[i].ball);
          merged.absorbed.insert(merged.absorbed.end(), live[i].absorbed.begin(), live[i].absorbed.end());
        }
        merged.ball = merge_cluster(members);
        std::sort(merged.absorbed.begin(), merged.absorbed.end());
        next.push_back(std::move(merged));
      }
      live = std::move(next);
    }
    cur.clear();
    for (const auto& l : live) {
      cur.push_back({l.id, l.ball.center, l.ball.radius / (1.0 + t), l.ball.weight});
      if (l.created) tl.events_.push_back({t, l.absorbed, l.id, l.ball});
    }
    tl.snapshots_.push_back({t, cur});
  }
  return tl;
}

/// 2πα·Σ_{B∈B(t2), B⊂U} |μ(B)|·log((1+t2)/(1+t1)).
inline double lower_bound(const BallTimeline& tl, double alpha, double t1, double t2, const Rect& U) {
  require(t1 < t2, "lower_bound: need t1 < t2");
  double mass = 0.0;
  for (const auto& b : tl.family_at(t2)) {
    const bool inside = b.center.x - b.radius >= U.x0 && b.center.x + b.radius <= U.x1 &&
                        b.center.y - b.radius >= U.y0 && b.center.y + b.radius <= U.y1;
    if (inside) mass += std::abs(b.weight);
  }
  return two_pi * alpha * mass * std::log((1.0 + t2) / (1.0 + t1));
}

/// Start times t ∈ [t_lo, t_hi] of windows [t, t'] with (1+t')/(1+t) = c,
/// t' ≤ t_hi and no merge event in (t, t'], as maximal closed intervals.
struct WindowRange {
  double start_lo;
  double start_hi;
};

inline std::vector<WindowRange> merge_free_windows(const BallTimeline& tl, double t_lo, double t_hi, double c) {
  require(c > 1.0, "merge_free_windows: factor must exceed 1");
  require(t_lo <= t_hi, "merge_free_windows: empty range");
  std::vector<double> cuts{t_lo};
  for (const auto& e : tl.events())
    if (e.time > t_lo && e.time < t_hi && e.time != cuts.back()) cuts.push_back(e.time);
  std::vector<WindowRange> out;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const double g0 = cuts[k];
    const double g1 = k + 1 < cuts.size() ? cuts[k + 1] : t_hi;
    // a window ending exactly at an event would contain it
    const bool open_end = k + 1 < cuts.size();
    double hi = (1.0 + g1) / c - 1.0;
    if (open_end) hi = std::nextafter(hi, -std::numeric_limits<double>::infinity());
    if (hi >= g0) out.push_back({g0, hi});
  }
  return out;
}

/// CSV: time,merged_ids,new_id,cx,cy,radius,weight with ids separated by ';'.
inline void write_events_csv(std::ostream& os, const BallTimeline& tl) {
  os << "time,merged_ids,new_id,cx,cy,radius,weight\n";
  char buf[160];
  for (const auto& e : tl.events()) {
    std::string ids;
    for (std::size_t i = 0; i < e.merged_ids.size(); ++i) ids += (i ? ";" : "") + std::to_string(e.merged_ids[i]);
    std::snprintf(buf, sizeof buf, ",%d,%.17g,%.17g,%.17g,%d\n", e.new_id, e.result.center.x, e.result.center.y,
                  e.result.radius, e.result.weight);
    char tbuf[40];
    std::snprintf(tbuf, sizeof tbuf, "%.17g,", e.time);
    os << tbuf << ids << buf;
  }
}

/// Ball list as `x,y,r,w` lines; an optional header and '#' comments are skipped.
inline std::vector<WeightedBall> read_balls_csv(std::istream& in) {
  std::vector<WeightedBall> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("x", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    WeightedBall b;
    if (!(ss >> b.center.x >> b.center.y >> b.radius >> b.weight))
      throw PreconditionError("balls csv: malformed line " + std::to_string(lineno));
    require(b.radius > 0.0, "balls csv: radius must be positive on line " + std::to_string(lineno));
    out.push_back(b);
  }
  return out;
}

/// CSV: id,cx,cy,radius,weight for the family at time t.
inline void write_family_csv(std::ostream& os, const BallTimeline& tl, double t) {
  os << "id,cx,cy,radius,weight\n";
  const auto ids = tl.ids_at(t);
  const auto fam = tl.family_at(t);
  char buf[160];
  for (std::size_t k = 0; k < fam.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d\n", ids[k], fam[k].center.x, fam[k].center.y,
                  fam[k].radius, fam[k].weight);
    os << buf;
  }
}

}  // namespace glhom
