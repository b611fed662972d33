#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace fastci {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Pascal rows 0..n as big integers.
class BinomialTable {
 public:
  explicit BinomialTable(int n) : rows_(static_cast<std::size_t>(n) + 1) {
    for (int i = 0; i <= n; ++i) {
      auto& row = rows_[static_cast<std::size_t>(i)];
      row.resize(static_cast<std::size_t>(i) + 1);
      row.front() = 1;
      row.back() = 1;
      for (int k = 1; k < i; ++k) {
        row[static_cast<std::size_t>(k)] = rows_[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(k) - 1] +
                                           rows_[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(k)];
      }
    }
  }

  int size() const { return static_cast<int>(rows_.size()) - 1; }

  // Zero outside 0 <= k <= a.
  const BigInt& operator()(int a, int k) const {
    static const BigInt zero = 0;
    if (a < 0 || k < 0 || k > a) return zero;
    return rows_[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
  }

 private:
  std::vector<std::vector<BigInt>> rows_;
};

// log k! for k = 0..n in extended precision.
class LogFactorials {
 public:
  explicit LogFactorials(int n) : table_(static_cast<std::size_t>(n) + 1) {
    for (int k = 0; k <= n; ++k) {
      table_[static_cast<std::size_t>(k)] = std::lgamma(static_cast<long double>(k) + 1.0L);
    }
  }

  long double log_choose(int a, int k) const {
    return table_[static_cast<std::size_t>(a)] - table_[static_cast<std::size_t>(k)] -
           table_[static_cast<std::size_t>(a - k)];
  }

 private:
  std::vector<long double> table_;
};

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  long double value() const { return sum_ + comp_; }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace detail
}  // namespace fastci
