#pragma once

// Missingness rules shared by the missing-data tests.

#include <cstdint>
#include <vector>

#include "fastci/validation.hpp"

namespace masking {

using fastci::MissingnessRule;
using fastci::Unit;

// Outcome-dependent rules: each hides outcomes so as to pull the extreme
// imputations in a particular direction.
inline std::vector<MissingnessRule> adversarial_rules() {
  auto observed = [](const Unit& u, int z) { return z ? u.y1 : u.y0; };
  return {
      // Hide treated failures and control successes.
      [=](const std::vector<Unit>& units, std::uint32_t z) {
        std::vector<bool> h(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) {
          const int zi = static_cast<int>(z >> i & 1U);
          h[i] = zi == 1 ? observed(units[i], zi) == 0 : observed(units[i], zi) == 1;
        }
        return h;
      },
      // Hide every subject whose outcome depends on treatment.
      [](const std::vector<Unit>& units, std::uint32_t) {
        std::vector<bool> h(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) h[i] = units[i].y1 != units[i].y0;
        return h;
      },
      // Hide treated successes and control failures.
      [=](const std::vector<Unit>& units, std::uint32_t z) {
        std::vector<bool> h(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) {
          const int zi = static_cast<int>(z >> i & 1U);
          h[i] = zi == 1 ? observed(units[i], zi) == 1 : observed(units[i], zi) == 0;
        }
        return h;
      },
  };
}

}  // namespace masking
