#pragma once

// Coverage enumeration and the sweeps behind the benchmark reports.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "fastci/baseline_rh.hpp"
#include "fastci/balanced_fast.hpp"
#include "fastci/missing_data.hpp"
#include "fastci/montecarlo.hpp"
#include "fastci/unbalanced_search.hpp"

namespace fastci {

enum class IntervalMethod { rh, fast, unbalanced };

inline const char* to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::rh: return "rh";
    case IntervalMethod::fast: return "fast";
    case IntervalMethod::unbalanced: return "unbalanced";
  }
  return "?";
}

inline Interval exact_interval(IntervalMethod method, Level alpha, const ObservedCounts& obs) {
  switch (method) {
    case IntervalMethod::rh: return rh_interval(alpha, obs).interval;
    case IntervalMethod::fast: return fast_interval_balanced(alpha, obs).interval;
    case IntervalMethod::unbalanced: return unbalanced_interval_exact(alpha, obs).interval;
  }
  throw ContractError("unknown interval method");
}

inline constexpr int kCoverageCapacity = 64;

// Exact probability, over a uniformly random assignment, that the interval
// built from the induced observed counts contains tau(y). Enumerates
// treatment splits with their hypergeometric weights; each distinct
// observed table is analysed once.
inline Rational coverage_exhaustive(const CountVector& y, const Design& d,
                                    const std::function<Interval(const ObservedCounts&)>& interval) {
  if (d.n > kCoverageCapacity) {
    throw CapacityError("exhaustive coverage is limited to n <= " + std::to_string(kCoverageCapacity) +
                        "; use Monte Carlo replications for larger trials");
  }
  if (y.n() != d.n || !y.valid()) throw ValidationError("table does not match the design");
  const std::int64_t truth = tau(y).value;
  std::map<ObservedCounts, bool> covers;
  BigInt hits = 0;
  for_each_split(y, d.m, [&](const TreatmentSplit& x) {
    const ObservedCounts obs = observe(y, x);
    auto [it, inserted] = covers.try_emplace(obs, false);
    if (inserted) it->second = interval(obs).contains(truth);
    if (it->second) hits += split_multiplicity(y, x);
  });
  return Rational(hits, detail::binomials(d.n)(d.n, d.m));
}

inline Rational coverage_exhaustive(const CountVector& y, Level alpha, const Design& d, IntervalMethod method) {
  return coverage_exhaustive(y, d, [&](const ObservedCounts& obs) { return exact_interval(method, alpha, obs); });
}

namespace detail {

// Uniform integer in [lo, hi].
inline int uniform_int(Substream& stream, int lo, int hi) {
  return lo + static_cast<int>(stream() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Balanced observed table with n = 2m, drawn uniformly over (n11, n01).
inline ObservedCounts random_balanced_obs(int n, Substream& stream) {
  const int m = n / 2;
  const int n11 = uniform_int(stream, 0, m);
  const int n01 = uniform_int(stream, 0, m);
  return ObservedCounts{n11, m - n11, n01, m - n01};
}

}  // namespace detail

// Subject-level potential outcomes of table y, class by class:
// (1,1) units first, then (1,0), (0,1), (0,0).
struct Unit {
  int y1 = 0;
  int y0 = 0;
};

inline std::vector<Unit> expand_units(const CountVector& y) {
  std::vector<Unit> units;
  units.insert(units.end(), static_cast<std::size_t>(y.v11), Unit{1, 1});
  units.insert(units.end(), static_cast<std::size_t>(y.v10), Unit{1, 0});
  units.insert(units.end(), static_cast<std::size_t>(y.v01), Unit{0, 1});
  units.insert(units.end(), static_cast<std::size_t>(y.v00), Unit{0, 0});
  return units;
}

// Decides which subjects lose their outcome, given every potential
// outcome and the assignment (bit i of z set = unit i treated).
using MissingnessRule = std::function<std::vector<bool>(const std::vector<Unit>&, std::uint32_t z)>;

inline constexpr int kSubjectEnumerationCapacity = 20;

namespace detail {

template <class Fn>
void for_each_assignment(int n, int m, Fn&& fn) {
  for (std::uint32_t z = 0; z < (1U << n); ++z) {
    if (__builtin_popcount(z) == m) fn(z);
  }
}

inline MaskedObservations mask_outcomes(const std::vector<Unit>& units, std::uint32_t z,
                                        const std::vector<bool>& hidden) {
  std::vector<Subject> subjects;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const int zi = static_cast<int>(z >> i & 1U);
    const int y = zi ? units[i].y1 : units[i].y0;
    subjects.push_back(Subject{zi, hidden[i] ? std::nullopt : std::optional<int>(y)});
  }
  return MaskedObservations(std::move(subjects));
}

}  // namespace detail

// Exact coverage of the missing-data interval under a deterministic
// missingness rule, by enumerating all C(n, m) assignments.
inline Rational missing_coverage_exhaustive(const CountVector& y, Level alpha, const Design& d,
                                            const MissingnessRule& rule) {
  if (d.n > kSubjectEnumerationCapacity) {
    throw CapacityError("subject-level enumeration is limited to n <= " +
                        std::to_string(kSubjectEnumerationCapacity));
  }
  if (y.n() != d.n || !y.valid()) throw ValidationError("table does not match the design");
  const auto units = expand_units(y);
  const std::int64_t truth = tau(y).value;
  std::map<std::pair<ObservedCounts, ObservedCounts>, bool> covers;
  long hits = 0, total = 0;
  detail::for_each_assignment(d.n, d.m, [&](std::uint32_t z) {
    const auto data = detail::mask_outcomes(units, z, rule(units, z));
    const auto e = impute_extremes(data);
    auto [it, inserted] = covers.try_emplace({e.plus, e.minus}, false);
    if (inserted) it->second = missing_interval(alpha, data).interval.contains(truth);
    hits += it->second ? 1 : 0;
    ++total;
  });
  return Rational(hits, total);
}

// Coverage of the padded interval for an odd trial: the n = 2m - 1 real
// subjects and one fictitious subject with no outcome are randomized into
// two groups of m, and the balanced missing-data interval over 2m subjects
// is checked against the SATE of the n real subjects.
inline Rational odd_padding_coverage(const CountVector& y, Level alpha) {
  const int n = y.n();
  if (n % 2 == 0) throw ValidationError("odd_padding_coverage needs an odd number of subjects");
  if (n + 1 > kSubjectEnumerationCapacity) throw CapacityError("trial too large for enumeration");
  auto units = expand_units(y);
  units.push_back(Unit{0, 0});  // placeholder, never observed
  const int padded = n + 1;
  std::vector<bool> hidden(static_cast<std::size_t>(padded), false);
  hidden.back() = true;
  const std::int64_t effect_sum = tau(y).value;
  long hits = 0, total = 0;
  detail::for_each_assignment(padded, padded / 2, [&](std::uint32_t z) {
    const Interval iv = missing_interval(alpha, detail::mask_outcomes(units, z, hidden)).interval;
    // effect_sum / n in [lo / (n+1), hi / (n+1)].
    const bool covered = !iv.empty() && iv.lower() * n <= effect_sum * padded && effect_sum * padded <= iv.upper() * n;
    hits += covered ? 1 : 0;
    ++total;
  });
  return Rational(hits, total);
}

struct LengthRow {
  int n = 0;
  int samples = 0;
  double max_length = 0.0;  // in tau units
  double bound = 0.0;
  int violations = 0;
};

inline double length_bound(Level alpha, int n) { return std::sqrt(32.0 * std::log(2.0 / alpha.value()) / n); }

// Interval lengths of random balanced tables against sqrt(32 log(2/alpha)/n).
inline std::vector<LengthRow> length_bound_sweep(Level alpha, const std::vector<int>& ns, int per_n,
                                                 std::uint64_t seed) {
  std::vector<LengthRow> rows;
  for (const int n : ns) {
    if (n % 2 != 0) throw ValidationError("length sweep uses balanced designs; n must be even");
    LengthRow row{n, per_n, 0.0, length_bound(alpha, n), 0};
    for (int i = 0; i < per_n; ++i) {
      Substream stream(seed, {0x1e9, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i)});
      const ObservedCounts obs = detail::random_balanced_obs(n, stream);
      const Interval iv = fast_interval_balanced(alpha, obs).interval;
      const double len = static_cast<double>(iv.length()) / n;
      row.max_length = std::max(row.max_length, len);
      if (len > row.bound) ++row.violations;
    }
    rows.push_back(row);
  }
  return rows;
}

struct CountRow {
  int n = 0;
  int samples = 0;
  long max_tests = 0;
  double bound = 0.0;
  int violations = 0;
};

// Test counts of the fast balanced search against 4 n log2 n.
inline std::vector<CountRow> count_bound_sweep(Level alpha, const std::vector<int>& ns, int per_n,
                                               std::uint64_t seed) {
  std::vector<CountRow> rows;
  for (const int n : ns) {
    if (n % 2 != 0) throw ValidationError("count sweep uses balanced designs; n must be even");
    CountRow row{n, per_n, 0, balanced_test_bound(n), 0};
    for (int i = 0; i < per_n; ++i) {
      Substream stream(seed, {0xc0, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i)});
      const ObservedCounts obs = detail::random_balanced_obs(n, stream);
      const long tests = fast_interval_balanced(alpha, obs).tests;
      row.max_tests = std::max(row.max_tests, tests);
      if (static_cast<double>(tests) > row.bound) ++row.violations;
    }
    rows.push_back(row);
  }
  return rows;
}

struct Table1Row {
  ObservedCounts obs;
  Interval rh;
  long rh_tests = 0;
  Interval fast;
  long fast_tests = 0;
  Interval mc;
  long mc_tests = 0;
  long mc_k = 0;
};

inline std::vector<ObservedCounts> table1_inputs() {
  return {ObservedCounts{2, 6, 8, 0}, ObservedCounts{6, 4, 4, 6}, ObservedCounts{8, 4, 5, 7}};
}

// The three reference tables through all three balanced algorithms at
// alpha = 0.05; the Monte Carlo run uses eps = 0.005 with K from the
// sample-size bound.
inline std::vector<Table1Row> table1_repro(std::uint64_t seed = 1, unsigned threads = 1) {
  const Level alpha{1, 20};
  const Level eps{1, 200};
  std::vector<Table1Row> rows;
  for (const auto& obs : table1_inputs()) {
    Table1Row row;
    row.obs = obs;
    const auto rh = rh_interval(alpha, obs);
    row.rh = rh.interval;
    row.rh_tests = rh.tests;
    const auto fast = fast_interval_balanced(alpha, obs);
    row.fast = fast.interval;
    row.fast_tests = fast.tests;
    McConfig cfg{alpha, eps, required_K_balanced(eps, obs.n()).k, seed, threads};
    const auto mc = mc_interval_balanced(cfg, obs);
    row.mc = mc.interval;
    row.mc_tests = mc.tests;
    row.mc_k = cfg.k;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fastci
