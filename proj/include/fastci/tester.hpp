#pragma once

// Permutation-test strategies consumed by the interval searches.

#include <concepts>
#include <map>

#include "fastci/exactdist.hpp"

namespace fastci {

// Where in a search a vector is tested. Monte Carlo testers derive their
// random substreams from it; exact testers ignore it.
struct TestSite {
  std::int64_t effect = 0;  // scaled tau0
  int j = 0;                // v11 + v10 of the tested vector
  int variant = 0;          // 1 for the extra v10 = 1 test at tau0 = 0
};

template <class T>
concept PermutationTester = requires(T& t, const CountVector& v, const TestSite& site) {
  { t.accepts(v, site) } -> std::convertible_to<bool>;
};

// Exact permutation test at level alpha, memoized per count vector.
class ExactTester {
 public:
  ExactTester(const ObservedCounts& obs, Level alpha)
      : ExactTester(obs, alpha, default_arithmetic(obs.n())) {}
  ExactTester(const ObservedCounts& obs, Level alpha, Arithmetic mode)
      : obs_(obs), alpha_(alpha), mode_(mode) {
    obs.design();
    require_capacity(obs.n(), mode);
  }

  bool accepts(const CountVector& v, const TestSite& = {}) {
    ++calls_;
    auto [it, inserted] = cache_.try_emplace(v, false);
    if (inserted) it->second = exact_pvalue(v, obs_, mode_).at_least(alpha_);
    return it->second;
  }

  // Tests requested, counting repeats.
  long calls() const { return calls_; }
  // Distinct vectors whose p-value was computed.
  long evaluations() const { return static_cast<long>(cache_.size()); }

  const ObservedCounts& observed() const { return obs_; }
  Level alpha() const { return alpha_; }
  Arithmetic arithmetic() const { return mode_; }

 private:
  ObservedCounts obs_;
  Level alpha_;
  Arithmetic mode_;
  std::map<CountVector, bool> cache_;
  long calls_ = 0;
};

}  // namespace fastci
