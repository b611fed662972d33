#pragma once

// Exact randomization distribution of the Neyman estimator and the exact
// permutation p-value. Both work over treatment splits weighted by the
// multivariate hypergeometric law rather than over the C(n, m)
// assignments, since the statistic depends on an assignment only through
// its split.
//
// Two arithmetic modes are provided. Rational mode counts assignments with
// big integers and is exact. Floating mode works with extended-precision
// log binomials and compensated sums; its probabilities carry an absolute
// error well below kFloatTolerance for n <= kFloatCapacity.

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <variant>
#include <vector>

#include "fastci/core.hpp"
#include "fastci/detail/arith.hpp"
#include "fastci/feasibility.hpp"

namespace fastci {

enum class Arithmetic { rational, floating };

inline constexpr double kFloatTolerance = 1e-12;
inline constexpr int kFloatCapacity = 20000;
inline constexpr int kRationalCapacity = 512;
// Largest n for which the automatic mode stays exact.
inline constexpr int kAutoRationalLimit = 64;

inline Arithmetic default_arithmetic(int n) {
  return n <= kAutoRationalLimit ? Arithmetic::rational : Arithmetic::floating;
}

inline void require_capacity(int n, Arithmetic mode) {
  if (mode == Arithmetic::rational && n > kRationalCapacity) {
    throw CapacityError("rational arithmetic supports n <= " + std::to_string(kRationalCapacity));
  }
  if (mode == Arithmetic::floating && n > kFloatCapacity) {
    throw CapacityError("floating arithmetic supports n <= " + std::to_string(kFloatCapacity));
  }
}

namespace detail {

// Process-wide tables, grown on demand and never freed.
inline const BinomialTable& binomials(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<BinomialTable>> tables;
  std::lock_guard lock(mutex);
  auto& slot = tables[n];
  if (!slot) slot = std::make_unique<BinomialTable>(n);
  return *slot;
}

inline const LogFactorials& log_factorials(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<LogFactorials>> tables;
  std::lock_guard lock(mutex);
  auto& slot = tables[n];
  if (!slot) slot = std::make_unique<LogFactorials>(n);
  return *slot;
}

}  // namespace detail

// Neyman statistic when split x of table v is treated.
inline ExactStat split_stat(const CountVector& v, const Design& d, const TreatmentSplit& x) {
  return ExactStat{static_cast<std::int64_t>(d.n - d.m) * (x.x11 + x.x10) -
                   static_cast<std::int64_t>(d.m) * ((v.v11 - x.x11) + (v.v01 - x.x01))};
}

// Calls fn(split) for every treatment split of v with m treated.
template <class Fn>
void for_each_split(const CountVector& v, int m, Fn&& fn) {
  for (int x11 = 0; x11 <= std::min(v.v11, m); ++x11) {
    for (int x10 = 0; x10 <= std::min(v.v10, m - x11); ++x10) {
      for (int x01 = 0; x01 <= std::min(v.v01, m - x11 - x10); ++x01) {
        const int x00 = m - x11 - x10 - x01;
        if (x00 <= v.v00) fn(TreatmentSplit{x11, x10, x01, x00});
      }
    }
  }
}

// Number of assignments inducing split x.
inline BigInt split_multiplicity(const CountVector& v, const TreatmentSplit& x) {
  const auto& c = detail::binomials(v.n());
  return c(v.v11, x.x11) * c(v.v10, x.x10) * c(v.v01, x.x01) * c(v.v00, x.x00);
}

inline double split_probability(const CountVector& v, const Design& d, const TreatmentSplit& x) {
  const auto& lf = detail::log_factorials(d.n);
  const long double lw = lf.log_choose(v.v11, x.x11) + lf.log_choose(v.v10, x.x10) +
                         lf.log_choose(v.v01, x.x01) + lf.log_choose(v.v00, x.x00) -
                         lf.log_choose(d.n, d.m);
  return static_cast<double>(std::exp(lw));
}

// Probability mass function of the statistic, ordered by value.
template <class P>
struct StatPmf {
  std::vector<std::pair<ExactStat, P>> mass;

  P total() const {
    P t = 0;
    for (const auto& [_, p] : mass) t += p;
    return t;
  }
  P at(ExactStat s) const {
    auto it = std::lower_bound(mass.begin(), mass.end(), s,
                               [](const auto& e, ExactStat key) { return e.first < key; });
    return (it != mass.end() && it->first == s) ? it->second : P(0);
  }
};

template <class P>
StatPmf<P> exact_pmf(const CountVector& v, const Design& d) {
  static_assert(std::is_same_v<P, Rational> || std::is_same_v<P, double>);
  if (v.n() != d.n || !v.valid()) throw ValidationError("count vector does not match design");
  require_capacity(d.n, std::is_same_v<P, Rational> ? Arithmetic::rational : Arithmetic::floating);
  std::map<ExactStat, std::conditional_t<std::is_same_v<P, Rational>, BigInt, detail::CompensatedSum>> acc;
  for_each_split(v, d.m, [&](const TreatmentSplit& x) {
    if constexpr (std::is_same_v<P, Rational>) {
      acc[split_stat(v, d, x)] += split_multiplicity(v, x);
    } else {
      acc[split_stat(v, d, x)].add(split_probability(v, d, x));
    }
  });
  StatPmf<P> pmf;
  pmf.mass.reserve(acc.size());
  if constexpr (std::is_same_v<P, Rational>) {
    const BigInt& total = detail::binomials(d.n)(d.n, d.m);
    for (auto& [s, count] : acc) pmf.mass.emplace_back(s, Rational(count, total));
  } else {
    for (auto& [s, sum] : acc) pmf.mass.emplace_back(s, static_cast<double>(sum.value()));
  }
  return pmf;
}

// A permutation p-value: exact rational or floating approximation.
class PValue {
 public:
  static PValue exact(BigInt count, BigInt total) {
    PValue p;
    p.value_ = Exact{std::move(count), std::move(total)};
    return p;
  }
  static PValue approximate(double p) {
    PValue r;
    r.value_ = std::clamp(p, 0.0, 1.0);
    return r;
  }

  bool is_exact() const { return std::holds_alternative<Exact>(value_); }

  double value() const {
    if (const auto* e = std::get_if<Exact>(&value_)) return detail::to_double(Rational(e->count, e->total));
    return std::get<double>(value_);
  }

  Rational rational() const {
    if (const auto* e = std::get_if<Exact>(&value_)) return Rational(e->count, e->total);
    throw ContractError("p-value was computed in floating arithmetic");
  }

  // p >= alpha. In floating mode values within kFloatTolerance below alpha
  // count as reaching it.
  bool at_least(const Level& alpha) const {
    if (const auto* e = std::get_if<Exact>(&value_)) return e->count * alpha.den >= e->total * alpha.num;
    return std::get<double>(value_) >= alpha.value() - kFloatTolerance;
  }

 private:
  struct Exact {
    BigInt count;
    BigInt total;
  };
  std::variant<Exact, double> value_ = 0.0;
};

namespace detail {

// Mass of { |centered(T) - centered(tau)| >= threshold } computed in O(n^2):
// for fixed (x11, x01) the centered statistic is increasing in x10, so the
// event is a lower and an upper tail of a hypergeometric-type sequence in
// x10 whose partial sums are tabulated once per r = m - x11 - x01.
class TailMass {
 public:
  TailMass(const CountVector& v, const Design& d) : v_(v), d_(d) {}

  // Rational mode: number of assignments in the event.
  BigInt count(std::int64_t threshold) const {
    const auto& c = binomials(d_.n);
    const int r_lo = std::max(0, d_.m - v_.v11 - v_.v01);
    const int r_hi = std::min(d_.m, v_.v10 + v_.v00);
    // prefix[r - r_lo][k + 1] = sum_{x10 <= k} C(v10, x10) C(v00, r - x10)
    std::vector<std::vector<BigInt>> prefix;
    for (int r = r_lo; r <= r_hi; ++r) {
      std::vector<BigInt> row(static_cast<std::size_t>(v_.v10) + 2);
      for (int x10 = 0; x10 <= v_.v10; ++x10) {
        row[static_cast<std::size_t>(x10) + 1] = row[static_cast<std::size_t>(x10)] + c(v_.v10, x10) * c(v_.v00, r - x10);
      }
      prefix.push_back(std::move(row));
    }
    BigInt total = 0;
    scan(threshold, [&](int x11, int x01, int r, int a, int b) {
      const auto& row = prefix[static_cast<std::size_t>(r - r_lo)];
      const auto at = [&](int k) -> const BigInt& {
        return row[static_cast<std::size_t>(std::clamp(k, -1, v_.v10) + 1)];
      };
      BigInt inner = at(a) + (at(v_.v10) - at(b - 1));
      if (!inner.is_zero()) total += c(v_.v11, x11) * c(v_.v01, x01) * inner;
    });
    return total;
  }

  // Floating mode: probability of the event.
  double probability(std::int64_t threshold) const {
    const auto& lf = log_factorials(d_.n);
    const int r_lo = std::max(0, d_.m - v_.v11 - v_.v01);
    const int r_hi = std::min(d_.m, v_.v10 + v_.v00);
    const int pool = v_.v10 + v_.v00;
    // Conditional law of x10 given r, with separate lower and upper partial sums.
    std::vector<std::vector<long double>> lower, upper;
    for (int r = r_lo; r <= r_hi; ++r) {
      std::vector<long double> pmf(static_cast<std::size_t>(v_.v10) + 1, 0.0L);
      const long double norm = lf.log_choose(pool, r);
      for (int x10 = std::max(0, r - v_.v00); x10 <= std::min(v_.v10, r); ++x10) {
        pmf[static_cast<std::size_t>(x10)] =
            std::exp(lf.log_choose(v_.v10, x10) + lf.log_choose(v_.v00, r - x10) - norm);
      }
      std::vector<long double> lo(pmf.size() + 1, 0.0L), up(pmf.size() + 1, 0.0L);
      CompensatedSum acc;
      for (std::size_t k = 0; k < pmf.size(); ++k) {
        acc.add(pmf[k]);
        lo[k + 1] = acc.value();
      }
      CompensatedSum racc;
      for (std::size_t k = pmf.size(); k-- > 0;) {
        racc.add(pmf[k]);
        up[k] = racc.value();
      }
      lower.push_back(std::move(lo));
      upper.push_back(std::move(up));
    }
    const long double log_total = lf.log_choose(d_.n, d_.m);
    CompensatedSum total;
    scan(threshold, [&](int x11, int x01, int r, int a, int b) {
      const auto& lo = lower[static_cast<std::size_t>(r - r_lo)];
      const auto& up = upper[static_cast<std::size_t>(r - r_lo)];
      const long double inner = lo[static_cast<std::size_t>(std::clamp(a, -1, v_.v10) + 1)] +
                                up[static_cast<std::size_t>(std::clamp(b, 0, v_.v10 + 1))];
      if (inner == 0.0L) return;
      const long double outer = std::exp(lf.log_choose(v_.v11, x11) + lf.log_choose(v_.v01, x01) +
                                         lf.log_choose(pool, r) - log_total);
      total.add(outer * inner);
    });
    return static_cast<double>(total.value());
  }

 private:
  // fn(x11, x01, r, a, b): the event holds for x10 <= a or x10 >= b.
  template <class Fn>
  void scan(std::int64_t threshold, Fn&& fn) const {
    const std::int64_t n = d_.n, m = d_.m;
    const std::int64_t slope = n * (n - m);
    const std::int64_t s = tau(v_).value;
    const std::int64_t base = -m * (v_.v11 + v_.v01);
    for (int x11 = 0; x11 <= v_.v11; ++x11) {
      for (int x01 = 0; x01 <= v_.v01; ++x01) {
        const int r = d_.m - x11 - x01;
        if (r < 0) break;
        if (r > v_.v10 + v_.v00) continue;
        const std::int64_t offset = n * (n * x11 + m * x01 + base) - s * d_.stat_denominator();
        const auto a = floor_div(-threshold - offset, slope);
        const auto b = ceil_div(threshold - offset, slope);
        fn(x11, x01, r, static_cast<int>(std::clamp<std::int64_t>(a, -1, v_.v10 + 1)),
           static_cast<int>(std::clamp<std::int64_t>(b, -1, v_.v10 + 1)));
      }
    }
  }

  CountVector v_;
  Design d_;
};

}  // namespace detail

// P(|T(v, Z~) - tau(v)| >= |T(obs) - tau(v)|) under uniform randomization.
inline PValue exact_pvalue(const CountVector& v, const ObservedCounts& obs, Arithmetic mode) {
  const Design d = obs.design();
  if (v.n() != d.n || !v.valid()) throw ValidationError("count vector does not match observed counts");
  require_capacity(d.n, mode);
  const std::int64_t threshold = std::abs(centered(neyman(obs, d), tau(v), d));
  if (threshold == 0) {
    if (mode == Arithmetic::rational) return PValue::exact(1, 1);
    return PValue::approximate(1.0);
  }
  detail::TailMass tail(v, d);
  if (mode == Arithmetic::rational) {
    return PValue::exact(tail.count(threshold), detail::binomials(d.n)(d.n, d.m));
  }
  return PValue::approximate(tail.probability(threshold));
}

inline PValue exact_pvalue(const CountVector& v, const ObservedCounts& obs) {
  return exact_pvalue(v, obs, default_arithmetic(obs.n()));
}

// Same p-value read off a precomputed pmf of T(v, Z~).
template <class P>
P pvalue_from_pmf(const StatPmf<P>& pmf, const CountVector& v, const ObservedCounts& obs) {
  const Design d = obs.design();
  const std::int64_t threshold = std::abs(centered(neyman(obs, d), tau(v), d));
  P p = 0;
  for (const auto& [stat, mass] : pmf.mass) {
    if (std::abs(centered(stat, tau(v), d)) >= threshold) p += mass;
  }
  return p;
}

// Joint probability that s1 = x11 + x10 and s0 = (v11 - x11) + (v01 - x01),
// by summing the multivariate hypergeometric weights over x11.
inline PValue copas_pmf_term(const CountVector& v, const Design& d, int s1, int s0, Arithmetic mode) {
  if (v.n() != d.n || !v.valid()) throw ValidationError("count vector does not match design");
  require_capacity(d.n, mode);
  BigInt count = 0;
  detail::CompensatedSum prob;
  for (int x = 0; x <= v.v11; ++x) {
    const TreatmentSplit split{x, s1 - x, v.v11 + v.v01 - s0 - x, d.m - v.v11 - s1 - v.v01 + s0 + x};
    if (split.x10 < 0 || split.x10 > v.v10 || split.x01 < 0 || split.x01 > v.v01 || split.x00 < 0 ||
        split.x00 > v.v00) {
      continue;
    }
    if (mode == Arithmetic::rational) {
      count += split_multiplicity(v, split);
    } else {
      prob.add(split_probability(v, d, split));
    }
  }
  if (mode == Arithmetic::rational) return PValue::exact(count, detail::binomials(d.n)(d.n, d.m));
  return PValue::approximate(static_cast<double>(prob.value()));
}

}  // namespace fastci
