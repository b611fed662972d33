#pragma once

// Counter-based random substreams and hypergeometric sampling of
// treatment splits.
//
// Every Monte Carlo sample owns a SplitMix64 stream whose starting state is
// a hash of (seed, keys...). Sample i of a given test therefore sees the
// same numbers regardless of how samples are distributed over workers.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <vector>

#include "fastci/core.hpp"
#include "fastci/feasibility.hpp"

namespace fastci {

class Substream {
 public:
  using result_type = std::uint64_t;

  Substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) : state_(mix(seed)) {
    for (const auto k : keys) fold(k);
  }

  // Stream for keys (..., key): same as listing key last in the constructor.
  Substream child(std::uint64_t key) const {
    Substream s = *this;
    s.fold(key);
    return s;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  void fold(std::uint64_t k) { state_ = mix(state_ ^ mix(k + 0x9e3779b97f4a7c15ULL)); }

  std::uint64_t state_;
};

// Hypergeometric law of the number of marked items among `draws` taken
// without replacement from `population` items of which `marked` are marked.
// Sampled by inversion of a tabulated CDF, started from a guide table so a
// draw costs O(1) on average. The table is built outward from the mode and
// stops where the mass falls below 1e-20 of the modal mass.
class HypergeometricTable {
 public:
  HypergeometricTable(int population, int marked, int draws) {
    const int lo = std::max(0, draws - (population - marked));
    const int hi = std::min(draws, marked);
    int mode = static_cast<int>((static_cast<std::int64_t>(draws) + 1) * (marked + 1) / (population + 2));
    mode = std::clamp(mode, lo, hi);
    constexpr double kCutoff = 1e-20;
    // ratio w(k+1)/w(k)
    auto up = [&](int k) {
      return (static_cast<double>(marked - k) * (draws - k)) /
             (static_cast<double>(k + 1) * (population - marked - draws + k + 1));
    };
    std::vector<double> above{1.0};
    for (int k = mode; k < hi; ++k) {
      const double w = above.back() * up(k);
      if (w < kCutoff) break;
      above.push_back(w);
    }
    std::vector<double> below;
    double w = 1.0;
    for (int k = mode; k > lo; --k) {
      w /= up(k - 1);
      if (w < kCutoff) break;
      below.push_back(w);
    }
    first_ = mode - static_cast<int>(below.size());
    cdf_.reserve(below.size() + above.size());
    double acc = 0.0;
    for (auto it = below.rbegin(); it != below.rend(); ++it) cdf_.push_back(acc += *it);
    for (const double x : above) cdf_.push_back(acc += x);
    for (auto& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
    // guide_[g] = first index with cdf > g / size.
    const std::size_t size = cdf_.size();
    guide_.resize(size);
    std::size_t k = 0;
    for (std::size_t g = 0; g < size; ++g) {
      const double level = static_cast<double>(g) / static_cast<double>(size);
      while (cdf_[k] <= level) ++k;
      guide_[g] = static_cast<std::uint32_t>(k);
    }
  }

  // u uniform on [0, 1).
  int sample(double u) const {
    std::size_t k = guide_[static_cast<std::size_t>(u * static_cast<double>(guide_.size()))];
    while (cdf_[k] <= u) ++k;
    return first_ + static_cast<int>(k);
  }

 private:
  int first_ = 0;
  std::vector<double> cdf_;
  std::vector<std::uint32_t> guide_;
};

// Draws the treatment split of a uniformly random assignment of table v:
// first the number s1 of treated subjects among those with treatment
// outcome 1, then how those s1 and the remaining m - s1 divide between the
// two classes on each side. Three inversions per sample. Conditional
// tables are built lazily, so one sampler must not be shared by threads.
class SplitSampler {
 public:
  SplitSampler(const CountVector& v, const Design& d)
      : v_(v), d_(d), ones_(d.n, v.v11 + v.v10, d.m),
        ones_split_(static_cast<std::size_t>(d.m) + 1),
        zeros_split_(static_cast<std::size_t>(d.m) + 1) {
    if (v.n() != d.n || !v.valid()) throw ValidationError("count vector does not match design");
  }

  TreatmentSplit operator()(Substream& stream) {
    const int s1 = ones_.sample(stream.uniform());
    auto& t1 = ones_split_[static_cast<std::size_t>(s1)];
    if (!t1) t1.emplace(v_.v11 + v_.v10, v_.v11, s1);
    auto& t0 = zeros_split_[static_cast<std::size_t>(s1)];
    if (!t0) t0.emplace(v_.v01 + v_.v00, v_.v01, d_.m - s1);
    const int x11 = t1->sample(stream.uniform());
    const int x01 = t0->sample(stream.uniform());
    return TreatmentSplit{x11, s1 - x11, x01, d_.m - s1 - x01};
  }

  const CountVector& table() const { return v_; }
  const Design& design() const { return d_; }

 private:
  CountVector v_;
  Design d_;
  HypergeometricTable ones_;
  std::vector<std::optional<HypergeometricTable>> ones_split_;
  std::vector<std::optional<HypergeometricTable>> zeros_split_;
};

inline TreatmentSplit sample_split(const CountVector& v, const Design& d, Substream& stream) {
  SplitSampler sampler(v, d);
  return sampler(stream);
}

}  // namespace fastci
