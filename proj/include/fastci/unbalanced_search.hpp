#pragma once

// Interval search for arbitrary designs with O(n^2) permutation tests.
//
// Candidate effects are scanned linearly, downward from max C(obs) for the
// upper endpoint and upward from min C(obs) for the lower one. For a fixed
// effect s and slice j = v11 + v10, the possible tables form one segment
// base + k (-1,+1,+1,-1), all with the same tau. Only the base is sampled
// from scratch; the other points reuse its samples by converting one
// (0,0) subject to (0,1) and one (1,1) subject to (1,0) per step, with the
// groups of the converted subjects drawn so that each stepped sample is
// again a uniform assignment of the new table.

#include <array>
#include <map>
#include <vector>

#include "fastci/montecarlo.hpp"

namespace fastci {

// Per-class, per-group counts of one assignment. Index 0 is control,
// index 1 treatment.
struct AssignmentSummary {
  std::array<int, 2> q11{};
  std::array<int, 2> q10{};
  std::array<int, 2> q01{};
  std::array<int, 2> q00{};

  static AssignmentSummary from_split(const CountVector& v, const TreatmentSplit& x) {
    AssignmentSummary q;
    q.q11 = {v.v11 - x.x11, x.x11};
    q.q10 = {v.v10 - x.x10, x.x10};
    q.q01 = {v.v01 - x.x01, x.x01};
    q.q00 = {v.v00 - x.x00, x.x00};
    return q;
  }

  CountVector table() const { return {q11[0] + q11[1], q10[0] + q10[1], q01[0] + q01[1], q00[0] + q00[1]}; }
  TreatmentSplit split() const { return {q11[1], q10[1], q01[1], q00[1]}; }
  int treated() const { return q11[1] + q10[1] + q01[1] + q00[1]; }
  int controls() const { return q11[0] + q10[0] + q01[0] + q00[0]; }

  friend bool operator==(const AssignmentSummary&, const AssignmentSummary&) = default;
};

namespace detail {

// True with probability num / den.
inline bool bernoulli(Substream& stream, int num, int den) {
  if (num <= 0) return false;
  if (num >= den) return true;
  return stream() % static_cast<std::uint64_t>(den) < static_cast<std::uint64_t>(num);
}

}  // namespace detail

// Moves the summary from table v to v + (-1,+1,+1,-1). B1 = 1 (control)
// with probability q00(0) / v00 picks the group of the (0,0) subject that
// becomes (0,1); B2 does the same for the (1,1) subject becoming (1,0).
inline AssignmentSummary step_summary(AssignmentSummary q, Substream& stream) {
  const int v00 = q.q00[0] + q.q00[1];
  const int v11 = q.q11[0] + q.q11[1];
  if (v00 < 1 || v11 < 1) throw ContractError("step_summary needs v00 >= 1 and v11 >= 1");
  const int z1 = detail::bernoulli(stream, q.q00[0], v00) ? 0 : 1;
  --q.q00[z1];
  ++q.q01[z1];
  const int z2 = detail::bernoulli(stream, q.q11[0], v11) ? 0 : 1;
  --q.q11[z2];
  ++q.q10[z2];
  return q;
}

inline ExactStat stat_from_summary(const AssignmentSummary& q, const Design& d) {
  const std::int64_t treated_ones = q.q11[1] + q.q10[1];
  const std::int64_t control_ones = q.q11[0] + q.q01[0];
  return ExactStat{(d.n - d.m) * treated_ones - d.m * control_ones};
}

// Possible tables base + k (-1,+1,+1,-1) for k in k_range.
struct LineSegment {
  CountVector base;
  IntRange k_range;

  CountVector at(int k) const {
    return CountVector{base.v11 - k, base.v10 + k, base.v01 + k, base.v00 - k};
  }
};

// Segment of slice j at scaled effect s, or nothing if the slice holds no
// possible table. The base is the smallest-v10 member.
inline std::optional<LineSegment> line_segment(int j, ScaledEffect s, const ObservedCounts& obs) {
  const auto range = feasible_v10_range(j, s, obs);
  if (!range) return std::nullopt;
  const int n = obs.n();
  LineSegment seg{line_vector(j, range->lo, s.value, n), IntRange{0, range->hi - range->lo}};
  // The base must be the segment's endpoint: one step back is impossible.
  const CountVector before = line_vector(j, range->lo - 1, s.value, n);
  if (!is_possible(seg.base, obs) || is_possible(before, obs)) {
    throw ContractError("feasible slice is not a segment starting at its smallest v10");
  }
  return seg;
}

// One Monte Carlo sample carried along a segment.
struct CarriedSample {
  AssignmentSummary q;
  Substream stream;
};

struct ScanResult {
  bool accept = false;
  long points = 0;  // line points beyond the base that were evaluated
};

// Walks k = 1, 2, ... over the segment, stepping every sample once per
// point and re-evaluating S. The samples must have been drawn for the base.
// Every point is evaluated so that the outcome does not depend on how
// samples are split among workers.
inline ScanResult scan_line(const McConfig& cfg, const LineSegment& seg, const ObservedCounts& obs,
                            std::vector<CarriedSample>& samples) {
  ScanResult result;
  const int last = seg.k_range.hi;
  if (last < 1 || samples.empty()) return result;
  const Design d = obs.design();
  const ScaledEffect s = tau(seg.base);
  const std::int64_t threshold = std::abs(centered(neyman(obs, d), s, d));
  const long k_samples = static_cast<long>(samples.size());
  const unsigned workers = std::max(1u, cfg.threads);
  std::vector<std::vector<long>> counts(workers, std::vector<long>(static_cast<std::size_t>(last) + 1, 0));
  detail::parallel_chunks(workers, k_samples, [&](unsigned w, long begin, long end) {
    auto& c = counts[w];
    for (long i = begin; i < end; ++i) {
      auto& sample = samples[static_cast<std::size_t>(i)];
      for (int k = 1; k <= last; ++k) {
        sample.q = step_summary(sample.q, sample.stream);
        if (std::abs(centered(stat_from_summary(sample.q, d), s, d)) >= threshold) ++c[static_cast<std::size_t>(k)];
      }
    }
  });
  for (int k = 1; k <= last; ++k) {
    long extreme = 0;
    for (const auto& c : counts) extreme += c[static_cast<std::size_t>(k)];
    ++result.points;
    if (mc_accepts(extreme, k_samples, cfg.alpha, cfg.eps)) {
      result.accept = true;
      break;
    }
  }
  return result;
}

enum class SearchMode { exact, mc };

struct UnbalancedResult {
  Interval interval;
  long tests = 0;        // base tables tested (fresh samples in mc mode)
  long line_points = 0;  // further segment points evaluated
  long evaluations = 0;  // distinct candidate effects examined
};

namespace detail {

inline bool compatible_exact(ScaledEffect s, const ObservedCounts& obs, ExactTester& tester, UnbalancedResult& r) {
  for (int j = 0; j <= obs.n(); ++j) {
    const auto seg = line_segment(j, s, obs);
    if (!seg) continue;
    ++r.tests;
    if (tester.accepts(seg->base, TestSite{s.value, j, 0})) return true;
    for (int k = 1; k <= seg->k_range.hi; ++k) {
      ++r.line_points;
      if (tester.accepts(seg->at(k), TestSite{s.value, j, 0})) return true;
    }
  }
  return false;
}

inline bool compatible_mc(ScaledEffect s, const ObservedCounts& obs, const McConfig& cfg, UnbalancedResult& r) {
  const Design d = obs.design();
  const std::int64_t threshold = std::abs(centered(neyman(obs, d), s, d));
  for (int j = 0; j <= obs.n(); ++j) {
    const auto seg = line_segment(j, s, obs);
    if (!seg) continue;
    ++r.tests;
    std::vector<CarriedSample> samples;
    samples.reserve(static_cast<std::size_t>(cfg.k));
    SplitSampler sampler(seg->base, d);
    const Substream prefix(cfg.seed, {kUnbalancedStream, effect_key(s.value), static_cast<std::uint64_t>(j)});
    long extreme = 0;
    for (long i = 0; i < cfg.k; ++i) {
      Substream stream = prefix.child(static_cast<std::uint64_t>(i));
      const TreatmentSplit x = sampler(stream);
      if (std::abs(centered(split_stat(seg->base, d, x), s, d)) >= threshold) ++extreme;
      samples.push_back(CarriedSample{AssignmentSummary::from_split(seg->base, x), stream});
    }
    if (mc_accepts(extreme, cfg.k, cfg.alpha, cfg.eps)) return true;
    const ScanResult scan = scan_line(cfg, *seg, obs, samples);
    r.line_points += scan.points;
    if (scan.accept) return true;
  }
  return false;
}

template <class Compatible>
UnbalancedResult linear_search(const ObservedCounts& obs, Compatible&& compatible) {
  UnbalancedResult r;
  std::map<std::int64_t, bool> memo;
  auto ok = [&](std::int64_t s) {
    auto [it, inserted] = memo.try_emplace(s, false);
    if (inserted) it->second = compatible(ScaledEffect{s}, r);
    return it->second;
  };
  const Interval c = c_set(obs);
  std::optional<std::int64_t> upper;
  for (std::int64_t s = c.upper(); s >= c.lower(); --s) {
    if (ok(s)) {
      upper = s;
      break;
    }
  }
  if (upper) {
    std::int64_t lower = *upper;
    for (std::int64_t s = c.lower(); s < *upper; ++s) {
      if (ok(s)) {
        lower = s;
        break;
      }
    }
    r.interval = Interval::from_bounds(lower, *upper);
  }
  r.evaluations = static_cast<long>(memo.size());
  return r;
}

}  // namespace detail

// In exact mode every segment point gets an exact p-value at level
// cfg.alpha (eps, K and seed are ignored); in mc mode each base table is
// tested with K fresh samples and the rest of its segment reuses them.
// May return the empty interval.
inline UnbalancedResult unbalanced_interval(const McConfig& cfg, const ObservedCounts& obs, SearchMode mode,
                                            Arithmetic arithmetic) {
  obs.design();
  if (mode == SearchMode::exact) {
    ExactTester tester(obs, cfg.alpha, arithmetic);
    return detail::linear_search(obs, [&](ScaledEffect s, UnbalancedResult& r) {
      return detail::compatible_exact(s, obs, tester, r);
    });
  }
  cfg.validate();
  return detail::linear_search(obs, [&](ScaledEffect s, UnbalancedResult& r) {
    return detail::compatible_mc(s, obs, cfg, r);
  });
}

inline UnbalancedResult unbalanced_interval(const McConfig& cfg, const ObservedCounts& obs, SearchMode mode) {
  return unbalanced_interval(cfg, obs, mode, default_arithmetic(obs.n()));
}

inline UnbalancedResult unbalanced_interval_exact(Level alpha, const ObservedCounts& obs) {
  McConfig cfg;
  cfg.alpha = alpha;
  return unbalanced_interval(cfg, obs, SearchMode::exact);
}

// Smallest K with K >= (1/eps^2) log(4 n^3 / eps).
inline long required_K_unbalanced(const Level& eps, int n) {
  if (n < 2) throw ValidationError("n must be at least 2");
  const long double e = static_cast<long double>(eps.num) / static_cast<long double>(eps.den);
  const long double inv = static_cast<long double>(eps.den) / static_cast<long double>(eps.num);
  const long double nn = n;
  return static_cast<long>(std::ceil(inv * inv * std::log(4.0L * nn * nn * nn / e)));
}

}  // namespace fastci
