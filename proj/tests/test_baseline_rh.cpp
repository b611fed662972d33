#include <gtest/gtest.h>

#include "fastci/baseline_rh.hpp"
#include "oracle.hpp"

using namespace fastci;

namespace {

const Level kAlpha{1, 20};

Interval oracle_interval(const ObservedCounts& obs, Level alpha) {
  const auto iv = oracle::interval(obs, alpha);
  return iv ? Interval{iv->first, iv->second} : Interval{};
}

}  // namespace

TEST(RhInterval, ReferenceTables) {
  struct Row {
    ObservedCounts obs;
    Interval expected;
    long tests;
  };
  for (const auto& row : {Row{{2, 6, 8, 0}, {-14, -5}, 189}, Row{{6, 4, 4, 6}, {-4, 10}, 1225},
                          Row{{8, 4, 5, 7}, {-3, 13}, 2160}}) {
    const auto r = rh_interval(kAlpha, row.obs);
    EXPECT_EQ(r.interval, row.expected) << row.obs;
    EXPECT_EQ(r.tests, row.tests);
    EXPECT_LE(r.evaluations, r.tests);
  }
}

TEST(RhInterval, TestCountIsTupleProduct) {
  const ObservedCounts obs{3, 0, 2, 4};
  EXPECT_EQ(rh_interval(kAlpha, obs).tests, 4 * 1 * 3 * 5);
}

TEST(RhInterval, ImputedVectorFillsUnobservedOutcomes) {
  const ObservedCounts obs{2, 6, 8, 0};
  // No imputation: treated ones are (1,0), treated zeros (0,0), control
  // ones (0,1), control zeros (0,0).
  EXPECT_EQ(imputed_vector(obs, 0, 0, 0, 0), (CountVector{0, 2, 8, 6}));
  const CountVector all = imputed_vector(obs, 2, 6, 8, 0);
  EXPECT_EQ(all, (CountVector{10, 0, 6, 0}));
  EXPECT_EQ(all.n(), obs.n());
}

TEST(RhInterval, MatchesSubjectLevelOracle) {
  for (int n = 2; n <= 8; ++n) {
    for (int m = 1; m < n; ++m) {
      for (int n11 = 0; n11 <= m; ++n11) {
        for (int n01 = 0; n01 <= n - m; ++n01) {
          const ObservedCounts obs{n11, m - n11, n01, n - m - n01};
          for (const Level alpha : {Level{1, 20}, Level{8, 25}}) {
            ASSERT_EQ(rh_interval(alpha, obs).interval, oracle_interval(obs, alpha)) << obs;
          }
        }
      }
    }
  }
}

TEST(RhInterval, ArithmeticModesAgree) {
  for (const auto& obs : {ObservedCounts{2, 6, 8, 0}, ObservedCounts{5, 2, 1, 6}, ObservedCounts{4, 3, 2, 3}}) {
    EXPECT_EQ(rh_interval(kAlpha, obs, Arithmetic::rational).interval,
              rh_interval(kAlpha, obs, Arithmetic::floating).interval);
  }
}

TEST(ExactTester, MemoizesPerVector) {
  const ObservedCounts obs{1, 1, 1, 1};
  ExactTester t(obs, kAlpha);
  t.accepts(CountVector{1, 1, 1, 1});
  t.accepts(CountVector{1, 1, 1, 1});
  t.accepts(CountVector{0, 2, 1, 1});
  EXPECT_EQ(t.calls(), 3);
  EXPECT_EQ(t.evaluations(), 2);
}
