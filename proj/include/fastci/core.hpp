#pragma once

// Domain types for binary-outcome randomized experiments and the exact
// statistic arithmetic shared by every interval construction.
//
// Count vectors index potential outcomes as (treatment, control): class
// (1,0) responds only under treatment, so tau(v) = (v10 - v01) / n.
// Effects are carried as integers scaled by n and statistics as integers
// scaled by m(n-m); comparisons never touch floating point.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fastci {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Number of subjects and number assigned to treatment.
struct Design {
  int n = 0;
  int m = 0;

  static Design make(int n, int m) {
    if (n < 2 || m < 1 || m > n - 1) {
      throw ValidationError("design requires 1 <= m <= n-1 (n=" + std::to_string(n) +
                            ", m=" + std::to_string(m) + ")");
    }
    return Design{n, m};
  }

  int controls() const { return n - m; }
  bool balanced() const { return n == 2 * m; }
  // Common denominator of every Neyman statistic value.
  std::int64_t stat_denominator() const {
    return static_cast<std::int64_t>(m) * (n - m);
  }

  friend bool operator==(const Design&, const Design&) = default;
};

// Observed 2x2 summary: n_{zy} counts subjects in group z with outcome y.
struct ObservedCounts {
  int n11 = 0;  // treated, outcome 1
  int n10 = 0;  // treated, outcome 0
  int n01 = 0;  // control, outcome 1
  int n00 = 0;  // control, outcome 0

  int n() const { return n11 + n10 + n01 + n00; }
  int treated() const { return n11 + n10; }
  int controls() const { return n01 + n00; }

  // Throws unless the counts describe a completed experiment with both
  // groups nonempty.
  Design design() const {
    if (n11 < 0 || n10 < 0 || n01 < 0 || n00 < 0) {
      throw ValidationError("observed counts must be nonnegative");
    }
    if (treated() < 1 || controls() < 1) {
      throw ValidationError("observed counts need at least one treated and one control subject");
    }
    return Design::make(n(), treated());
  }

  friend auto operator<=>(const ObservedCounts&, const ObservedCounts&) = default;
};

// Hypothesized potential-outcome summary; v_{ab} counts subjects whose
// outcome is a under treatment and b under control.
struct CountVector {
  int v11 = 0;
  int v10 = 0;
  int v01 = 0;
  int v00 = 0;

  int n() const { return v11 + v10 + v01 + v00; }
  bool valid() const { return v11 >= 0 && v10 >= 0 && v01 >= 0 && v00 >= 0; }

  CountVector& operator+=(const CountVector& o) {
    v11 += o.v11;
    v10 += o.v10;
    v01 += o.v01;
    v00 += o.v00;
    return *this;
  }
  friend CountVector operator+(CountVector a, const CountVector& b) { return a += b; }

  friend auto operator<=>(const CountVector&, const CountVector&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const CountVector& v) {
  return os << '(' << v.v11 << ',' << v.v10 << ',' << v.v01 << ',' << v.v00 << ')';
}

inline std::ostream& operator<<(std::ostream& os, const ObservedCounts& o) {
  return os << '(' << o.n11 << ',' << o.n10 << ',' << o.n01 << ',' << o.n00 << ')';
}

// Effect tau = value / n.
struct ScaledEffect {
  std::int64_t value = 0;

  double as_double(int n) const { return static_cast<double>(value) / n; }
  friend auto operator<=>(const ScaledEffect&, const ScaledEffect&) = default;
};

// Neyman statistic T = num / (m (n-m)).
struct ExactStat {
  std::int64_t num = 0;

  double as_double(const Design& d) const {
    return static_cast<double>(num) / static_cast<double>(d.stat_denominator());
  }
  friend auto operator<=>(const ExactStat&, const ExactStat&) = default;
};

// Closed interval of scaled effects, or empty.
class Interval {
 public:
  Interval() = default;
  Interval(std::int64_t lower, std::int64_t upper) : lower_(lower), upper_(upper), empty_(false) {
    if (lower > upper) {
      throw ContractError("interval lower endpoint exceeds upper endpoint");
    }
  }

  static Interval empty_interval() { return Interval{}; }
  // Hull of [lower, upper] that collapses to empty when lower > upper.
  static Interval from_bounds(std::int64_t lower, std::int64_t upper) {
    return lower > upper ? Interval{} : Interval{lower, upper};
  }

  bool empty() const { return empty_; }
  std::int64_t lower() const { return require().first; }
  std::int64_t upper() const { return require().second; }
  std::int64_t length() const { return empty_ ? 0 : upper_ - lower_; }

  bool contains(std::int64_t s) const { return !empty_ && lower_ <= s && s <= upper_; }
  bool contains(const Interval& o) const {
    return o.empty_ || (!empty_ && lower_ <= o.lower_ && o.upper_ <= upper_);
  }

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.empty_ == b.empty_ && (a.empty_ || (a.lower_ == b.lower_ && a.upper_ == b.upper_));
  }

 private:
  std::pair<std::int64_t, std::int64_t> require() const {
    if (empty_) throw ContractError("endpoint of an empty interval");
    return {lower_, upper_};
  }

  std::int64_t lower_ = 0;
  std::int64_t upper_ = -1;
  bool empty_ = true;
};

inline std::ostream& operator<<(std::ostream& os, const Interval& iv) {
  if (iv.empty()) return os << "[]";
  return os << '[' << iv.lower() << ',' << iv.upper() << ']';
}

// Significance level or tolerance held as an exact decimal fraction, so
// that p >= alpha is decided without rounding (0.05 is exactly 5/100).
struct Level {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Level from_double(double x) {
    if (!(x > 0.0 && x < 1.0)) {
      throw ValidationError("level must lie strictly between 0 and 1");
    }
    std::int64_t den = 1;
    for (int digits = 0; digits <= 15; ++digits, den *= 10) {
      const auto num = static_cast<std::int64_t>(std::llround(x * static_cast<double>(den)));
      if (static_cast<double>(num) / static_cast<double>(den) == x) {
        return Level{num, den}.reduced();
      }
    }
    throw ValidationError("level has more than 15 decimal digits");
  }

  static Level parse(std::string_view text) {
    double x = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, x);
    if (ec != std::errc{} || ptr != end) {
      throw ValidationError("not a number: " + std::string(text));
    }
    return from_double(x);
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator<(const Level& a, const Level& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator==(const Level& a, const Level& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }

  // a - b, for the effective level alpha - eps.
  friend Level operator-(const Level& a, const Level& b) {
    Level r{a.num * b.den - b.num * a.den, a.den * b.den};
    if (r.num <= 0) throw ValidationError("level difference must be positive");
    return r.reduced();
  }

 private:
  Level reduced() const {
    std::int64_t a = num, b = den;
    while (b != 0) {
      const auto t = a % b;
      a = b;
      b = t;
    }
    return Level{num / a, den / a};
  }
};

// Sample average treatment effect, scaled by n.
inline ScaledEffect tau(const CountVector& v) { return ScaledEffect{v.v10 - v.v01}; }

inline void require_consistent(const ObservedCounts& obs, const Design& d) {
  if (obs.n11 < 0 || obs.n10 < 0 || obs.n01 < 0 || obs.n00 < 0 || obs.treated() != d.m ||
      obs.n() != d.n) {
    throw ValidationError("observed counts are inconsistent with the design");
  }
}

// Neyman estimator n11/m - n01/(n-m), exact.
inline ExactStat neyman(const ObservedCounts& obs, const Design& d) {
  require_consistent(obs, d);
  return ExactStat{static_cast<std::int64_t>(d.n - d.m) * obs.n11 -
                   static_cast<std::int64_t>(d.m) * obs.n01};
}

inline ExactStat neyman(const ObservedCounts& obs) { return neyman(obs, obs.design()); }

// The n+1 consecutive scaled effects attainable by tables possible given obs.
inline Interval c_set(const ObservedCounts& obs) {
  const std::int64_t lo = static_cast<std::int64_t>(obs.n11) - obs.n01 - obs.treated();
  return Interval{lo, lo + obs.n()};
}

// n(T - tau) * m(n-m): the centered statistic on the common integer grid.
inline std::int64_t centered(ExactStat t, ScaledEffect s, const Design& d) {
  return static_cast<std::int64_t>(d.n) * t.num - s.value * d.stat_denominator();
}

}  // namespace fastci
