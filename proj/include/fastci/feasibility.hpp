#pragma once

// Which count vectors could have produced the observed counts.

#include <algorithm>
#include <optional>

#include "fastci/core.hpp"

namespace fastci {

// Closed integer range [lo, hi], lo <= hi.
struct IntRange {
  int lo = 0;
  int hi = 0;

  int size() const { return hi - lo + 1; }
  bool contains(int x) const { return lo <= x && x <= hi; }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

// Counts of each potential-outcome class assigned to treatment.
struct TreatmentSplit {
  int x11 = 0;
  int x10 = 0;
  int x01 = 0;
  int x00 = 0;

  int treated() const { return x11 + x10 + x01 + x00; }
  friend auto operator<=>(const TreatmentSplit&, const TreatmentSplit&) = default;
};

// Observed counts produced when split x of table v is treated.
inline ObservedCounts observe(const CountVector& v, const TreatmentSplit& x) {
  return ObservedCounts{x.x11 + x.x10, x.x01 + x.x00, (v.v11 - x.x11) + (v.v01 - x.x01),
                        (v.v10 - x.x10) + (v.v00 - x.x00)};
}

// Closed-form possibility check (Li and Ding's max/min inequality).
inline bool is_possible(const CountVector& v, const ObservedCounts& obs) {
  if (!v.valid() || v.n() != obs.n()) return false;
  const int lower = std::max({0, obs.n11 - v.v10, v.v11 - obs.n01, v.v11 + v.v01 - obs.n10 - obs.n01});
  const int upper = std::min({v.v11, obs.n11, v.v11 + v.v01 - obs.n01, obs.n() - v.v10 - obs.n01 - obs.n10});
  return lower <= upper;
}

// Reference check: search for a treatment split that reproduces obs.
inline bool is_possible_bruteforce(const CountVector& v, const ObservedCounts& obs) {
  if (!v.valid() || v.n() != obs.n()) return false;
  const int m = obs.treated();
  for (int x11 = 0; x11 <= v.v11; ++x11) {
    for (int x10 = 0; x10 <= v.v10; ++x10) {
      for (int x01 = 0; x01 <= v.v01; ++x01) {
        const int x00 = m - x11 - x10 - x01;
        if (x00 < 0 || x00 > v.v00) continue;
        if (observe(v, TreatmentSplit{x11, x10, x01, x00}) == obs) return true;
      }
    }
  }
  return false;
}

// Member of the one-parameter family with v11 + v10 = j and scaled effect s.
inline CountVector line_vector(int j, int v10, std::int64_t s, int n) {
  const int si = static_cast<int>(s);
  return CountVector{j - v10, v10, v10 - si, n - j - v10 + si};
}

// The v10 values for which line_vector(j, v10, s, n) is possible given obs;
// the set is always an interval.
inline std::optional<IntRange> feasible_v10_range(int j, ScaledEffect tau0, const ObservedCounts& obs) {
  const int n = obs.n();
  const int s = static_cast<int>(tau0.value);
  if (j < 0 || j > n) return std::nullopt;
  // Constant-time necessary conditions.
  if (j < s + obs.n01 || j < obs.n11 || n < j + obs.n10 || obs.n11 + s + obs.n10 + obs.n01 < j) {
    return std::nullopt;
  }
  const int lo = std::max({0, s, j - obs.n11 - obs.n01, obs.n11 + obs.n01 + s - j});
  const int hi = std::min({j, obs.n11 + obs.n00, obs.n10 + obs.n01 + s, n + s - j});
  if (lo > hi) return std::nullopt;
  return IntRange{lo, hi};
}

}  // namespace fastci
