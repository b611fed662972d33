#pragma once

// Monte Carlo permutation tests and the balanced Monte Carlo interval.
//
// A test draws K splits of the hypothesized table, counts those whose
// statistic is at least as far from tau as the observed one (decided in
// exact integer arithmetic), and accepts when S + eps >= alpha with
// S = count / K. Only the choice of splits is random.

#include <cmath>
#include <thread>
#include <vector>

#include "fastci/balanced_fast.hpp"
#include "fastci/rng.hpp"

namespace fastci {

struct McConfig {
  Level alpha;
  Level eps;
  long k = 1;              // samples per test
  std::uint64_t seed = 0;
  unsigned threads = 1;    // workers; results do not depend on it

  void validate() const {
    if (!(eps < alpha)) throw ValidationError("eps must be smaller than alpha");
    if (k < 1) throw ValidationError("K must be positive");
    if (threads < 1) throw ValidationError("threads must be positive");
  }
};

struct McDecision {
  bool accept = false;
  long extreme = 0;  // samples at least as extreme as observed
  long k = 0;

  double s() const { return static_cast<double>(extreme) / static_cast<double>(k); }
};

// S + eps >= alpha with S = extreme / k, exactly.
inline bool mc_accepts(long extreme, long k, const Level& alpha, const Level& eps) {
  using I = __int128;
  return I(extreme) * eps.den * alpha.den + I(eps.num) * k * alpha.den >= I(alpha.num) * k * eps.den;
}

namespace detail {

enum : std::uint64_t { kBalancedStream = 1, kUnbalancedStream = 2 };

// Runs body(worker, begin, end) over [0, count) split into contiguous
// chunks, one per worker.
template <class Body>
void parallel_chunks(unsigned threads, long count, Body&& body) {
  threads = static_cast<unsigned>(std::clamp<long>(threads, 1, std::max<long>(1, count)));
  if (threads == 1) {
    body(0u, 0L, count);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    const long begin = count * w / threads;
    const long end = count * (w + 1) / threads;
    workers.emplace_back([&body, w, begin, end] { body(w, begin, end); });
  }
}

inline std::uint64_t effect_key(std::int64_t effect) { return static_cast<std::uint64_t>(effect); }

}  // namespace detail

// Monte Carlo permutation test of v against obs. Sample i is drawn from
// the substream keyed by (seed, site, i).
inline McDecision mc_test(const McConfig& cfg, const CountVector& v, const ObservedCounts& obs,
                          const TestSite& site = {}) {
  cfg.validate();
  const Design d = obs.design();
  if (v.n() != d.n || !v.valid()) throw ValidationError("count vector does not match observed counts");
  const ScaledEffect s = tau(v);
  const std::int64_t threshold = std::abs(centered(neyman(obs, d), s, d));
  std::vector<long> counts(std::max(1u, cfg.threads), 0);
  detail::parallel_chunks(cfg.threads, cfg.k, [&](unsigned worker, long begin, long end) {
    SplitSampler sampler(v, d);
    const Substream prefix(cfg.seed, {detail::kBalancedStream, detail::effect_key(site.effect),
                                      static_cast<std::uint64_t>(site.j), static_cast<std::uint64_t>(site.variant)});
    long extreme = 0;
    for (long i = begin; i < end; ++i) {
      Substream stream = prefix.child(static_cast<std::uint64_t>(i));
      const auto x = sampler(stream);
      if (std::abs(centered(split_stat(v, d, x), s, d)) >= threshold) ++extreme;
    }
    counts[worker] = extreme;
  });
  McDecision decision;
  decision.k = cfg.k;
  for (const long c : counts) decision.extreme += c;
  decision.accept = mc_accepts(decision.extreme, cfg.k, cfg.alpha, cfg.eps);
  return decision;
}

// Tester adaptor so the balanced search can run on Monte Carlo tests.
class McTester {
 public:
  McTester(const McConfig& cfg, const ObservedCounts& obs) : cfg_(cfg), obs_(obs) {
    cfg.validate();
    obs.design();
  }

  bool accepts(const CountVector& v, const TestSite& site) {
    ++tests_;
    return mc_test(cfg_, v, obs_, site).accept;
  }

  long tests() const { return tests_; }
  long samples() const { return tests_ * cfg_.k; }

 private:
  McConfig cfg_;
  ObservedCounts obs_;
  long tests_ = 0;
};

struct KBound {
  long k = 0;
  bool precondition_met = true;
};

// Smallest K with K >= (1/eps^2) log(8 n log2(n) / eps). The coverage
// guarantee behind it assumes n >= 15; smaller n still get the formula's
// value, flagged.
inline KBound required_K_balanced(const Level& eps, int n) {
  if (n < 2) throw ValidationError("n must be at least 2");
  const long double e = static_cast<long double>(eps.num) / static_cast<long double>(eps.den);
  const long double inv = static_cast<long double>(eps.den) / static_cast<long double>(eps.num);
  const long double bound = inv * inv * std::log(8.0L * n * std::log2(static_cast<long double>(n)) / e);
  return KBound{static_cast<long>(std::ceil(bound)), n >= 15};
}

struct McIntervalResult {
  Interval interval;
  long tests = 0;
  long samples = 0;
  long evaluations = 0;
};

// Balanced interval with every exact test replaced by a Monte Carlo test.
// Deterministic given (cfg.seed, obs).
inline McIntervalResult mc_interval_balanced(const McConfig& cfg, const ObservedCounts& obs) {
  McTester tester(cfg, obs);
  const FastResult r = fast_interval_balanced(obs, tester);
  return McIntervalResult{r.interval, tester.tests(), tester.samples(), r.evaluations};
}

}  // namespace fastci
