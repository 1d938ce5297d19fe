#pragma once

// Brute-force relaxation of a singularity-cost table over integer
// splittings, by dynamic programming on (Σ|z_j|, Σz_j).

#include <cstdlib>
#include <limits>
#include <map>
#include <vector>

namespace oracle {

/// min Σψ(z_j) over all multisets of table charges with Σz_j = z and
/// Σ|z_j| ≤ max_mass.
inline double brute_force_split(const std::map<int, double>& table, int z, int max_mass) {
  const double inf = std::numeric_limits<double>::infinity();
  const int off = max_mass;
  // best[s][t + off]: cheapest multiset with Σ|z_j| = s and Σz_j = t.
  std::vector<std::vector<double>> best(max_mass + 1, std::vector<double>(2 * max_mass + 1, inf));
  best[0][off] = 0.0;
  for (int s = 1; s <= max_mass; ++s)
    for (int t = -s; t <= s; ++t)
      for (const auto& [c, v] : table) {
        const int m = std::abs(c);
        if (m > s) continue;
        const int prev = t - c;
        if (prev < -(s - m) || prev > s - m) continue;
        const double cand = best[s - m][prev + off] + v;
        if (cand < best[s][t + off]) best[s][t + off] = cand;
      }
  double out = inf;
  for (int s = 1; s <= max_mass; ++s)
    if (std::abs(z) <= s && best[s][z + off] < out) out = best[s][z + off];
  return out;
}

}  // namespace oracle
