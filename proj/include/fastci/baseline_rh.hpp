#pragma once

// Rigdon-Hudgens interval: impute every combination of unobserved
// potential outcomes, test each resulting table, and report the range of
// accepted effects. O(n^4) tests; the ground truth for everything else.

#include <limits>

#include "fastci/tester.hpp"

namespace fastci {

struct RhResult {
  Interval interval;
  long tests = 0;        // one per imputation tuple
  long evaluations = 0;  // distinct count vectors actually tested
};

// Count vector for imputation tuple (i, j, k, l): i of the n11 treated ones
// and k of the n01 control ones become (1,1); j of the n10 treated zeros
// become (0,1); l of the n00 control zeros become (1,0).
inline CountVector imputed_vector(const ObservedCounts& obs, int i, int j, int k, int l) {
  return CountVector{i + k, obs.n11 - i + l, obs.n01 - k + j, obs.n10 + obs.n00 - j - l};
}

template <PermutationTester Tester>
RhResult rh_interval(const ObservedCounts& obs, Tester& tester) {
  obs.design();
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  RhResult result;
  for (int i = 0; i <= obs.n11; ++i) {
    for (int j = 0; j <= obs.n10; ++j) {
      for (int k = 0; k <= obs.n01; ++k) {
        for (int l = 0; l <= obs.n00; ++l) {
          const CountVector v = imputed_vector(obs, i, j, k, l);
          ++result.tests;
          if (tester.accepts(v, TestSite{tau(v).value, v.v11 + v.v10, 0})) {
            lo = std::min(lo, tau(v).value);
            hi = std::max(hi, tau(v).value);
          }
        }
      }
    }
  }
  result.interval = Interval::from_bounds(lo, hi);
  return result;
}

inline RhResult rh_interval(Level alpha, const ObservedCounts& obs, Arithmetic mode) {
  ExactTester tester(obs, alpha, mode);
  RhResult r = rh_interval(obs, tester);
  r.evaluations = tester.evaluations();
  return r;
}

inline RhResult rh_interval(Level alpha, const ObservedCounts& obs) {
  return rh_interval(alpha, obs, default_arithmetic(obs.n()));
}

}  // namespace fastci
