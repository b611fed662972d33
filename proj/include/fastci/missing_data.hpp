#pragma once

// Intervals that stay valid whatever the mechanism behind missing
// outcomes. Missing cells are filled in the two most extreme ways: Y+
// (treated missing -> 1, control missing -> 0) pushes the estimate up,
// Y- does the opposite. The lower endpoint comes from Y-, the upper from
// Y+.

#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fastci/balanced_fast.hpp"
#include "fastci/unbalanced_search.hpp"

namespace fastci {

struct Subject {
  int z = 0;               // 1 treated, 0 control
  std::optional<int> y;    // observed outcome, empty when missing

  friend bool operator==(const Subject&, const Subject&) = default;
};

class MaskedObservations {
 public:
  MaskedObservations() = default;
  explicit MaskedObservations(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
    for (const auto& s : subjects_) {
      if (s.z != 0 && s.z != 1) throw ValidationError("group indicator must be 0 or 1");
      if (s.y && *s.y != 0 && *s.y != 1) throw ValidationError("outcome must be 0, 1 or missing");
    }
  }

  const std::vector<Subject>& subjects() const { return subjects_; }
  int n() const { return static_cast<int>(subjects_.size()); }
  int treated() const {
    int m = 0;
    for (const auto& s : subjects_) m += s.z;
    return m;
  }
  int missing() const {
    int k = 0;
    for (const auto& s : subjects_) k += s.y ? 0 : 1;
    return k;
  }
  Design design() const { return Design::make(n(), treated()); }

 private:
  std::vector<Subject> subjects_;
};

struct ExtremeImputations {
  ObservedCounts plus;
  ObservedCounts minus;
};

inline ExtremeImputations impute_extremes(const MaskedObservations& data) {
  ExtremeImputations e;
  for (const auto& s : data.subjects()) {
    const int up = s.y ? *s.y : s.z;
    const int down = s.y ? *s.y : 1 - s.z;
    for (auto [counts, y] : {std::pair{&e.plus, up}, std::pair{&e.minus, down}}) {
      if (s.z == 1) {
        ++(y ? counts->n11 : counts->n10);
      } else {
        ++(y ? counts->n01 : counts->n00);
      }
    }
  }
  return e;
}

struct MissingResult {
  Interval interval;  // scaled by n
  Interval plus;      // interval for Y+
  Interval minus;     // interval for Y-
  long tests = 0;
};

namespace detail {

inline MissingResult missing_interval_impl(Level alpha, const ExtremeImputations& e, Arithmetic mode) {
  const Design d = e.plus.design();
  MissingResult r;
  if (d.balanced()) {
    auto up = fast_interval_balanced(alpha, e.plus, mode);
    auto down = fast_interval_balanced(alpha, e.minus, mode);
    r.plus = up.interval;
    r.minus = down.interval;
    r.tests = up.tests + down.tests;
    // Balanced intervals always contain the estimate, so neither is empty.
    r.interval = Interval::from_bounds(r.minus.lower(), r.plus.upper());
    return r;
  }
  McConfig cfg;
  cfg.alpha = alpha;
  auto up = unbalanced_interval(cfg, e.plus, SearchMode::exact, mode);
  auto down = unbalanced_interval(cfg, e.minus, SearchMode::exact, mode);
  r.plus = up.interval;
  r.minus = down.interval;
  r.tests = up.tests + up.line_points + down.tests + down.line_points;
  // Unbalanced intervals need not contain the estimate: widen to it. The
  // endpoints are n T rounded inward to the integer lattice, which loses no
  // candidate effect. An empty interval contributes only its estimate.
  const std::int64_t m_den = d.stat_denominator();
  const std::int64_t up_t = floor_div(d.n * neyman(e.plus, d).num, m_den);
  const std::int64_t down_t = ceil_div(d.n * neyman(e.minus, d).num, m_den);
  const std::int64_t hi = r.plus.empty() ? up_t : std::max(r.plus.upper(), up_t);
  const std::int64_t lo = r.minus.empty() ? down_t : std::min(r.minus.lower(), down_t);
  r.interval = Interval::from_bounds(lo, hi);
  return r;
}

}  // namespace detail

inline MissingResult missing_interval(Level alpha, const MaskedObservations& data, Arithmetic mode) {
  data.design();
  return detail::missing_interval_impl(alpha, impute_extremes(data), mode);
}

inline MissingResult missing_interval(Level alpha, const MaskedObservations& data) {
  return missing_interval(alpha, data, default_arithmetic(data.n()));
}

inline MissingResult missing_interval(Level alpha, const MaskedObservations& data, const Design& d) {
  if (!(data.design() == d)) throw ValidationError("data do not match the design");
  return missing_interval(alpha, data);
}

// Adds one subject with a missing outcome to the smaller group so that an
// odd-sized trial of 2m-1 subjects can be analysed as a balanced one.
inline MaskedObservations pad_odd(const MaskedObservations& data) {
  if (data.n() % 2 == 0) throw ValidationError("pad_odd needs an odd number of subjects");
  const int m = data.treated();
  const int c = data.n() - m;
  if (std::abs(m - c) != 1) throw ValidationError("groups must differ in size by one");
  auto subjects = data.subjects();
  subjects.push_back(Subject{m < c ? 1 : 0, std::nullopt});
  return MaskedObservations(std::move(subjects));
}

// Subject file: a header line, then one `z,y` record per line with z in
// {0,1} and y in {0,1,NA}. Blank lines are skipped.
inline MaskedObservations read_subjects(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("subject file is empty; a header line is required");
  std::vector<Subject> subjects;
  int line_no = 1;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    auto bad = [&] { return ValidationError("line " + std::to_string(line_no) + ": expected z,y"); };
    if (comma == std::string::npos) throw bad();
    const std::string z = trim(line.substr(0, comma));
    const std::string y = trim(line.substr(comma + 1));
    Subject s;
    if (z == "0" || z == "1") {
      s.z = z[0] - '0';
    } else {
      throw bad();
    }
    if (y == "0" || y == "1") {
      s.y = y[0] - '0';
    } else if (y != "NA") {
      throw bad();
    }
    subjects.push_back(s);
  }
  return MaskedObservations(std::move(subjects));
}

inline MaskedObservations parse_subjects(const std::string& text) {
  std::istringstream in(text);
  return read_subjects(in);
}

}  // namespace fastci
