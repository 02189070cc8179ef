#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fedsd/rng.hpp"
#include "support/oracles.hpp"

using fedsd::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedSeedsDifferByTagAndId) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t c = 0; c < 50; ++c) {
    seen.insert(fedsd::derive_seed(7, "partition/dirichlet", {0, c}));
    seen.insert(fedsd::derive_seed(7, "partition/shuffle", {0, c}));
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(fedsd::derive_seed(7, "x", {1, 2}), fedsd::derive_seed(7, "x", {1, 2}));
  EXPECT_NE(fedsd::derive_seed(7, "x", {1, 2}), fedsd::derive_seed(7, "x", {2, 1}));
}

TEST(Rng, BelowIsInRangeAndRoughlyUniform) {
  Rng r(3);
  std::vector<std::size_t> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  // chi-square, 6 dof: P(chi2 > 22.46) = 0.001
  EXPECT_LT(oracle::chi_square_uniform(counts), 22.46);
}

TEST(Rng, NormalMatchesStandardNormal) {
  Rng r(11);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = r.normal();
  EXPECT_LT(oracle::ks_vs_standard_normal(xs), 0.015);
}

TEST(Rng, GammaMeanMatchesShape) {
  for (double shape : {0.05, 0.5, 1.0, 3.0}) {
    Rng r(5);
    double s = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) s += r.gamma(shape);
    // Var = shape; 5-sigma band on the mean
    EXPECT_NEAR(s / n, shape, 5.0 * std::sqrt(shape / n)) << "shape " << shape;
  }
}

TEST(Rng, DirichletSumsToOneEvenForTinyAlpha) {
  Rng r(9);
  for (int i = 0; i < 200; ++i) {
    const auto p = r.dirichlet(20, 0.01);
    double s = 0.0;
    for (double v : p) {
      ASSERT_GE(v, 0.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng r(1);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 100u);
}
