#pragma once

// O(n log n)-test interval for balanced designs. Each candidate effect is
// checked for compatibility with at most n+1 tests (2(n+1) at zero) by
// walking the slices v11 + v10 = j and testing only the smallest feasible
// v10 in each: moving along (+1,-1,-1,+1) never lowers the p-value in a
// balanced design, so the slice's least-v10 member is its most extreme.
// Binary searches outward from the estimate then locate both endpoints.

#include <cmath>
#include <functional>
#include <map>

#include "fastci/feasibility.hpp"
#include "fastci/tester.hpp"

namespace fastci {

// Locates the threshold r in [k1 - 1, k2] of a step function f with
// f(x) = 0 for x <= r and f(x) = 1 for x > r. Requires k2 > k1. Uses at
// most floor(log2(k2 - k1 + 1) + 2) evaluations. A non-monotone f is not
// detected.
inline std::int64_t binary_search(const std::function<int(std::int64_t)>& f, std::int64_t k1,
                                  std::int64_t k2) {
  if (k2 <= k1) throw ContractError("binary_search needs k2 > k1");
  std::int64_t a = k1;
  std::int64_t b = k2;
  while (b > a + 1) {
    const std::int64_t c = detail::floor_div(a + b, 2);
    if (f(c) == 0) {
      a = c;
    } else {
      b = c;
    }
  }
  // Endpoints that were never evaluated are checked now.
  if (a == k1 && f(k1) == 1) return k1 - 1;
  if (b == k2) return f(k2) == 0 ? k2 : k2 - 1;
  return a;
}

struct CompatibilityResult {
  bool compatible = false;
  long tests = 0;
};

// Whether some possible table with scaled effect tau0 passes the test.
template <PermutationTester Tester>
CompatibilityResult is_compatible_balanced(ScaledEffect tau0, const ObservedCounts& obs, Tester& tester) {
  const int n = obs.n();
  CompatibilityResult result;
  for (int j = 0; j <= n; ++j) {
    const auto range = feasible_v10_range(j, tau0, obs);
    if (!range) continue;
    const CountVector v = line_vector(j, range->lo, tau0.value, n);
    ++result.tests;
    if (tester.accepts(v, TestSite{tau0.value, j, 0})) {
      result.compatible = true;
      return result;
    }
    // The monotonicity argument needs v10 + v01 >= 1; cover the gap.
    if (v.v10 == 0 && v.v01 == 0 && range->contains(1)) {
      ++result.tests;
      if (tester.accepts(line_vector(j, 1, tau0.value, n), TestSite{tau0.value, j, 1})) {
        result.compatible = true;
        return result;
      }
    }
  }
  return result;
}

struct FastResult {
  Interval interval;
  long tests = 0;            // permutation tests requested
  long evaluations = 0;      // distinct candidate effects examined
  long search_queries = 0;   // binary-search probes, counting repeats
};

// Balanced-design interval. The tester decides each table; with an exact
// tester the result equals the Rigdon-Hudgens interval.
template <PermutationTester Tester>
FastResult fast_interval_balanced(const ObservedCounts& obs, Tester& tester) {
  const Design d = obs.design();
  if (!d.balanced()) throw ValidationError("fast balanced search requires n = 2m");
  FastResult result;
  std::map<std::int64_t, bool> incompatible;
  auto f = [&](std::int64_t s) -> int {
    ++result.search_queries;
    auto [it, inserted] = incompatible.try_emplace(s, false);
    if (inserted) {
      const auto c = is_compatible_balanced(ScaledEffect{s}, obs, tester);
      result.tests += c.tests;
      it->second = !c.compatible;
    }
    return it->second ? 1 : 0;
  };

  // n T(obs) = 2 (n11 - n01) is an integer member of C(obs) when n = 2m.
  const std::int64_t anchor = 2 * (static_cast<std::int64_t>(obs.n11) - obs.n01);
  const Interval candidates = c_set(obs);

  std::int64_t upper = anchor;
  if (candidates.upper() > anchor) {
    upper = binary_search(f, anchor, candidates.upper());
  } else if (f(anchor) == 1) {
    upper = anchor - 1;
  }
  std::int64_t lower = anchor;
  if (candidates.lower() < anchor) {
    lower = -binary_search([&](std::int64_t x) { return f(-x); }, -anchor, -candidates.lower());
  } else if (f(anchor) == 1) {
    lower = anchor + 1;
  }
  result.interval = Interval::from_bounds(lower, upper);
  result.evaluations = static_cast<long>(incompatible.size());
  return result;
}

inline FastResult fast_interval_balanced(Level alpha, const ObservedCounts& obs, Arithmetic mode) {
  ExactTester tester(obs, alpha, mode);
  return fast_interval_balanced(obs, tester);
}

inline FastResult fast_interval_balanced(Level alpha, const ObservedCounts& obs) {
  return fast_interval_balanced(alpha, obs, default_arithmetic(obs.n()));
}

// Worst-case bound on the number of tests for n >= 15.
inline double balanced_test_bound(int n) { return 4.0 * n * std::log2(static_cast<double>(n)); }

}  // namespace fastci
