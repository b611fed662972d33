// Acceptance suite: one line per criterion, PASS or FAIL, with the measured
// quantities. Exit status is nonzero if any criterion fails.

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fastci/fastci.hpp"
#include "masking.hpp"
#include "stats.hpp"

using namespace fastci;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class Fn>
void for_each_table(int n, Fn&& fn) {
  for (int a = 0; a <= n; ++a)
    for (int b = 0; a + b <= n; ++b)
      for (int c = 0; a + b + c <= n; ++c) fn(CountVector{a, b, c, n - a - b - c});
}

template <class Fn>
void for_each_obs(int n, int m, Fn&& fn) {
  for (int n11 = 0; n11 <= m; ++n11)
    for (int n01 = 0; n01 <= n - m; ++n01) fn(ObservedCounts{n11, m - n11, n01, n - m - n01});
}

const Level kAlpha{1, 20};
const ObservedCounts kReference[] = {{2, 6, 8, 0}, {6, 4, 4, 6}, {8, 4, 5, 7}};
const Interval kReferenceIntervals[] = {{-14, -5}, {-4, 10}, {-3, 13}};
const long kReferenceRhTests[] = {189, 1225, 2160};
const long kReferenceFastTests[] = {24, 16, 26};

Outcome reference_endpoints() {
  Outcome o;
  std::ostringstream d;
  for (int i = 0; i < 3; ++i) {
    auto t0 = Clock::now();
    const auto rh = rh_interval(kAlpha, kReference[i]).interval;
    const double t_rh = seconds_since(t0);
    t0 = Clock::now();
    const auto fast = fast_interval_balanced(kAlpha, kReference[i]).interval;
    const double t_fast = seconds_since(t0);
    const bool ok = rh == kReferenceIntervals[i] && fast == kReferenceIntervals[i] && t_rh < 1.0 && t_fast < 1.0;
    o.pass = o.pass && ok;
    d << kReference[i] << " rh=" << rh << " fast=" << fast << " (" << static_cast<int>(1000 * std::max(t_rh, t_fast))
      << " ms)  ";
  }
  o.detail = d.str();
  return o;
}

Outcome reference_rh_counts() {
  Outcome o;
  std::ostringstream d;
  for (int i = 0; i < 3; ++i) {
    const long tests = rh_interval(kAlpha, kReference[i]).tests;
    const auto& n = kReference[i];
    const long product = static_cast<long>(n.n11 + 1) * (n.n10 + 1) * (n.n01 + 1) * (n.n00 + 1);
    o.pass = o.pass && tests == kReferenceRhTests[i] && tests == product;
    d << tests << (i < 2 ? "/" : "");
  }
  o.detail = "tests " + d.str() + " (expected 189/1225/2160)";
  return o;
}

Outcome reference_fast_counts() {
  Outcome o;
  std::ostringstream d;
  for (int i = 0; i < 3; ++i) {
    const long tests = fast_interval_balanced(kAlpha, kReference[i]).tests;
    const double bound = balanced_test_bound(kReference[i].n());
    const bool ok = static_cast<double>(tests) <= bound && 2 * tests >= kReferenceFastTests[i] &&
                    tests <= 2 * kReferenceFastTests[i];
    o.pass = o.pass && ok;
    d << tests << " (ref " << kReferenceFastTests[i] << ", bound " << bound << ")  ";
  }
  o.detail = "tests " + d.str();
  return o;
}

Outcome balanced_oracle_equivalence() {
  const auto t0 = Clock::now();
  Outcome o;
  long cases = 0, mismatches = 0;
  for (int n = 2; n <= 12; n += 2) {
    for_each_obs(n, n / 2, [&](const ObservedCounts& obs) {
      for (const Level alpha : {Level{1, 100}, Level{1, 20}, Level{1, 10}, Level{8, 25}}) {
        ++cases;
        if (!(fast_interval_balanced(alpha, obs).interval == rh_interval(alpha, obs).interval)) ++mismatches;
      }
    });
  }
  const double t = seconds_since(t0);
  o.pass = mismatches == 0 && t <= 600;
  o.detail = std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches, " +
             std::to_string(static_cast<int>(t)) + " s (budget 600 s)";
  return o;
}

Outcome unbalanced_exact_equivalence() {
  const auto t0 = Clock::now();
  Outcome o;
  long cases = 0, mismatches = 0;
  for (int n = 2; n <= 12; ++n) {
    for (int m = 1; m < n; ++m) {
      for_each_obs(n, m, [&](const ObservedCounts& obs) {
        for (const Level alpha : {Level{1, 20}, Level{8, 25}}) {
          ++cases;
          if (!(unbalanced_interval_exact(alpha, obs).interval == rh_interval(alpha, obs).interval)) ++mismatches;
        }
      });
    }
  }
  const double t = seconds_since(t0);
  o.pass = mismatches == 0 && t <= 1800;
  o.detail = std::to_string(cases) + " cases (all m, alpha 0.05 and 0.32), " + std::to_string(mismatches) +
             " mismatches, " + std::to_string(static_cast<int>(t)) + " s (budget 1800 s)";
  return o;
}

Outcome monotonicity() {
  Outcome o;
  long checked = 0, violations = 0;
  for (int n = 4; n <= 14; n += 2) {
    for_each_obs(n, n / 2, [&](const ObservedCounts& obs) {
      for_each_table(n, [&](const CountVector& v) {
        if (std::min(v.v10, v.v01) < 1 || std::max(v.v10, v.v01) < 2) return;
        const CountVector w{v.v11 + 1, v.v10 - 1, v.v01 - 1, v.v00 + 1};
        ++checked;
        if (exact_pvalue(w, obs, Arithmetic::rational).rational() < exact_pvalue(v, obs, Arithmetic::rational).rational()) {
          ++violations;
        }
      });
    });
  }
  o.pass = violations == 0;
  o.detail = std::to_string(checked) + " (v, obs) pairs, " + std::to_string(violations) + " violations";
  return o;
}

CountVector random_table(int n, Substream& s) {
  int c[4] = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) ++c[s() % 4];
  return CountVector{c[0], c[1], c[2], c[3]};
}

Outcome coverage() {
  Outcome o;
  std::ostringstream d;
  for (const auto& [design, method] : {std::pair{Design{10, 5}, IntervalMethod::fast},
                                       std::pair{Design{9, 4}, IntervalMethod::unbalanced}}) {
    Substream s(2024, {static_cast<std::uint64_t>(design.n)});
    Rational worst = 1;
    for (int i = 0; i < 20; ++i) {
      const CountVector y = random_table(design.n, s);
      const Rational c = coverage_exhaustive(y, kAlpha, design, method);
      worst = std::min(worst, c);
    }
    o.pass = o.pass && worst >= Rational(19, 20);
    d << "n=" << design.n << ",m=" << design.m << " min coverage " << detail::to_double(worst) << "  ";
  }
  o.detail = d.str() + "(20 tables each, need >= 0.95)";
  return o;
}

Outcome distribution() {
  Outcome o;
  long tables = 0, bad_total = 0, bad_symmetry = 0, bad_sd = 0, bad_parity = 0;
  for (int n = 2; n <= 14; n += 2) {
    const int m = n / 2;
    const Design d{n, m};
    for_each_table(n, [&](const CountVector& v) {
      ++tables;
      const auto pmf = exact_pmf<Rational>(v, d);
      if (pmf.total() != 1) ++bad_total;
      // Work on the integer lattice L = m T = num / m.
      std::map<std::int64_t, Rational> f;
      for (const auto& [s, p] : pmf.mass) {
        if (s.num % m != 0) {
          ++bad_sd;
          continue;
        }
        f[s.num / m] = p;
      }
      auto at = [&](std::int64_t k) {
        const auto it = f.find(k);
        return it == f.end() ? Rational(0) : it->second;
      };
      // Mean of L is m tau = s / 2; symmetry: f(k) = f(s - k).
      const std::int64_t s = tau(v).value;
      for (const auto& [k, p] : f) {
        if (at(s - k) != p) ++bad_symmetry;
      }
      const std::int64_t lo = f.begin()->first;
      const std::int64_t hi = f.rbegin()->first;
      if (v.v10 + v.v01 >= 1) {
        for (std::int64_t k = lo; k < hi; ++k) {
          // Nonincreasing away from s / 2 on both sides.
          if (2 * k >= s && at(k + 1) > at(k)) ++bad_sd;
          if (2 * (k + 1) <= s && at(k) > at(k + 1)) ++bad_sd;
        }
      }
      if (v.v10 == 0 && v.v01 == 0) {
        for (const auto& [k, p] : f) {
          if (((k - v.v11) % 2 + 2) % 2 != 0) ++bad_parity;
        }
      }
    });
  }
  o.pass = bad_total == 0 && bad_symmetry == 0 && bad_sd == 0 && bad_parity == 0;
  o.detail = std::to_string(tables) + " balanced tables; normalization/symmetry/SD/parity failures " +
             std::to_string(bad_total) + "/" + std::to_string(bad_symmetry) + "/" + std::to_string(bad_sd) + "/" +
             std::to_string(bad_parity);
  return o;
}

Outcome mc_coverage() {
  const auto t0 = Clock::now();
  Outcome o;
  const int n = 16;
  const Level eps{1, 100};
  const Level level = kAlpha - eps;
  const long k = required_K_balanced(eps, n).k;
  const int reps = 200;
  int failures = 0, covered = 0;
  for (int r = 0; r < reps; ++r) {
    Substream s(77, {static_cast<std::uint64_t>(r)});
    const CountVector y = random_table(n, s);
    const Design d{n, n / 2};
    const ObservedCounts obs = observe(y, SplitSampler(y, d)(s));
    McConfig cfg{level, eps, k, 1000 + static_cast<std::uint64_t>(r), 1};
    const Interval mc = mc_interval_balanced(cfg, obs).interval;
    const Interval exact = fast_interval_balanced(level, obs).interval;
    if (!mc.contains(exact)) ++failures;
    if (mc.contains(tau(y).value)) ++covered;
  }
  const double rate = static_cast<double>(failures) / reps;
  const double limit = 0.01 + 3.0 * std::sqrt(0.01 * 0.99 / reps);
  const double t = seconds_since(t0);
  o.pass = rate <= limit && t <= 3600;
  std::ostringstream d;
  d << "K=" << k << ", containment failures " << failures << "/" << reps << " (rate " << rate << " <= " << limit
    << "), tau covered " << covered << "/" << reps << ", " << static_cast<int>(t) << " s";
  o.detail = d.str();
  return o;
}

Outcome sample_reuse() {
  Outcome o;
  const CountVector v{2, 0, 1, 2};
  const Design d{5, 2};
  const CountVector next{1, 1, 2, 1};
  std::vector<TreatmentSplit> splits;
  std::vector<double> split_probs;
  for_each_split(next, d.m, [&](const TreatmentSplit& x) {
    splits.push_back(x);
    split_probs.push_back(split_probability(next, d, x));
  });
  const auto pmf = exact_pmf<double>(next, d);
  std::map<TreatmentSplit, long> split_counts;
  std::map<std::int64_t, long> stat_counts;
  SplitSampler sampler(v, d);
  const long draws = 100000;
  for (long i = 0; i < draws; ++i) {
    Substream s(555, {static_cast<std::uint64_t>(i)});
    const auto q = step_summary(AssignmentSummary::from_split(v, sampler(s)), s);
    ++split_counts[q.split()];
    ++stat_counts[stat_from_summary(q, d).num];
  }
  std::vector<long> obs_split, obs_stat;
  std::vector<double> stat_probs;
  for (const auto& x : splits) obs_split.push_back(split_counts[x]);
  for (const auto& [s, p] : pmf.mass) {
    obs_stat.push_back(stat_counts[s.num]);
    stat_probs.push_back(p);
  }
  const double p_split = stats::chi_square_pvalue(obs_split, split_probs);
  const double p_stat = stats::chi_square_pvalue(obs_stat, stat_probs);
  o.pass = p_split >= 0.001 && p_stat >= 0.001;
  std::ostringstream d_;
  d_ << "v=(2,0,1,2) -> (1,1,2,1), K=1e5: chi-square p (splits) " << p_split << ", p (statistic) " << p_stat;
  o.detail = d_.str();
  return o;
}

// Complete-data interval.
Interval complete_interval(const ObservedCounts& obs) {
  return obs.design().balanced() ? fast_interval_balanced(kAlpha, obs).interval
                                 : unbalanced_interval_exact(kAlpha, obs).interval;
}

Outcome missing_data() {
  const auto t0 = Clock::now();
  Outcome o;
  Rational worst = 1;
  for_each_table(8, [&](const CountVector& y) {
    for (const auto& rule : masking::adversarial_rules()) {
      worst = std::min(worst, missing_coverage_exhaustive(y, kAlpha, Design{8, 4}, rule));
    }
  });
  // Widening on every masked dataset with n <= 10.
  std::map<ObservedCounts, Interval> full;
  std::map<std::pair<ObservedCounts, ObservedCounts>, Interval> widened;
  long datasets = 0, narrower = 0;
  for (int n = 2; n <= 10; ++n) {
    for (int m = 1; m < n; ++m) {
      for_each_obs(n, m, [&](const ObservedCounts& obs) {
        auto it = full.find(obs);
        if (it == full.end()) {
          const auto iv = complete_interval(obs);
          it = full.emplace(obs, iv).first;
        }
        for (int a = 0; a <= obs.n11; ++a)
          for (int b = 0; b <= obs.n10; ++b)
            for (int c = 0; c <= obs.n01; ++c)
              for (int e = 0; e <= obs.n00; ++e) {
                ++datasets;
                // Masking k of a cell turns those subjects into missing
                // ones of the same group.
                const ObservedCounts plus{obs.n11 - a + b, obs.n10 - b, obs.n01 - c, obs.n00 - e + c};
                const ObservedCounts minus{obs.n11 - a, obs.n10 - b + a, obs.n01 - c + e, obs.n00 - e};
                auto w = widened.find({plus, minus});
                if (w == widened.end()) {
                  std::vector<Subject> subjects;
                  auto add = [&](int count, int hidden, int z, int y) {
                    for (int i = 0; i < count; ++i) {
                      subjects.push_back(Subject{z, i < hidden ? std::nullopt : std::optional<int>(y)});
                    }
                  };
                  add(obs.n11, a, 1, 1);
                  add(obs.n10, b, 1, 0);
                  add(obs.n01, c, 0, 1);
                  add(obs.n00, e, 0, 0);
                  const auto iv = missing_interval(kAlpha, MaskedObservations(std::move(subjects))).interval;
                  w = widened.emplace(std::pair{plus, minus}, iv).first;
                }
                if (!w->second.contains(it->second)) ++narrower;
              }
      });
    }
  }
  o.pass = worst >= Rational(19, 20) && narrower == 0;
  std::ostringstream d;
  d << "n=8,m=4, three outcome-dependent masking rules: min coverage " << detail::to_double(worst) << " (need >= 0.95); "
    << datasets << " masked datasets n<=10, " << narrower << " narrower than complete data; "
    << static_cast<int>(seconds_since(t0)) << " s";
  o.detail = d.str();
  return o;
}

Outcome interval_length() {
  Outcome o;
  std::ostringstream d;
  // Every balanced table at n = 20 and 50, 50 random ones at 100 and 200.
  for (const int n : {20, 50}) {
    double worst = 0.0;
    int violations = 0;
    const double bound = length_bound(kAlpha, n);
    for_each_obs(n, n / 2, [&](const ObservedCounts& obs) {
      const double len = static_cast<double>(fast_interval_balanced(kAlpha, obs).interval.length()) / n;
      worst = std::max(worst, len);
      if (len > bound) ++violations;
    });
    o.pass = o.pass && violations == 0;
    d << "n=" << n << " (all) max " << worst << " <= " << bound << "; ";
  }
  for (const auto& row : length_bound_sweep(kAlpha, {100, 200}, 50, 9)) {
    o.pass = o.pass && row.violations == 0;
    d << "n=" << row.n << " (50) max " << row.max_length << " <= " << row.bound << "; ";
  }
  o.detail = d.str();
  return o;
}

long peak_rss_mb() {
  struct rusage ru {};
  getrusage(RUSAGE_SELF, &ru);
  return ru.ru_maxrss / 1024;
}

// Work predicted for one Monte Carlo interval: tests (n log2 n) times K
// (log(8 n log2 n / eps) / eps^2) times the cost of one sample. The sampler
// draws a split in O(1); a full Fisher-Yates shuffle would add a factor n.
double predicted_work(double n, double eps, bool shuffle) {
  const double tests = n * std::log2(n);
  const double k = std::log(8.0 * tests / eps) / (eps * eps);
  return tests * k * (shuffle ? n : 1.0);
}

Outcome scale() {
  Outcome o;
  const Level eps{1, 100};
  const double budget = 900.0;
  std::vector<double> ns, times;
  std::ostringstream d;
  long k_last = 0;
  for (const int n : {100, 1000, 10000}) {
    // One percent discordant subjects in each group.
    const int m = n / 2;
    const int a = std::max(1, n / 100);
    const ObservedCounts obs{m - a, a, a, m - a};
    McConfig cfg{kAlpha - eps, eps, required_K_balanced(eps, n).k, 13, 1};
    const auto t0 = Clock::now();
    const auto r = mc_interval_balanced(cfg, obs);
    const double t = seconds_since(t0);
    ns.push_back(n);
    times.push_back(t);
    k_last = cfg.k;
    d << "n=" << n << ": " << t << " s, " << r.tests << " tests; ";
  }
  const double span = std::log(ns.back() / ns.front());
  const double slope = std::log(times.back() / times.front()) / span;
  const double predicted = std::log(predicted_work(ns.back(), 0.01, false) / predicted_work(ns.front(), 0.01, false)) / span;
  const double shuffle = std::log(predicted_work(ns.back(), 0.01, true) / predicted_work(ns.front(), 0.01, true)) / span;
  const long rss = peak_rss_mb();
  o.pass = times.back() <= budget && rss < 1024 && std::abs(slope - predicted) <= 0.2 * predicted;
  d << "K(1e4)=" << k_last << ", peak RSS " << rss << " MB; log-log slope " << slope << " vs predicted " << predicted
    << " (O(1) split sampler; Fisher-Yates model " << shuffle << "); budget " << budget << " s at n=1e4";
  o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"reference table endpoints (rh, fast)", reference_endpoints},
      {"reference table baseline test counts", reference_rh_counts},
      {"fast search test counts", reference_fast_counts},
      {"fast == baseline, balanced n<=12", balanced_oracle_equivalence},
      {"unbalanced exact == baseline, n<=12", unbalanced_exact_equivalence},
      {"p-value monotonicity, n<=14", monotonicity},
      {"exact coverage n=10 and n=9", coverage},
      {"pmf normalization/symmetry/SD/parity", distribution},
      {"Monte Carlo containment, n=16", mc_coverage},
      {"summary stepping distribution", sample_reuse},
      {"missing-data coverage and widening", missing_data},
      {"interval length bound", interval_length},
      {"scale n=1e4", scale},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2zu: %s  %-38s %7.1f s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
