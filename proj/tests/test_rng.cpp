#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "robustq/rng.hpp"

using robustq::Rng;

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next() == b.next();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, DeriveSeedFollowsDocumentedScheme) {
  const std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  for (std::uint64_t i = 0; i < 5; ++i) {
    EXPECT_EQ(robustq::derive_seed(7, i), robustq::mix64(7 + (i + 1) * golden));
  }
  EXPECT_EQ(Rng::stream(7, 3).seed(), robustq::derive_seed(7, 3));
}

TEST(Rng, StreamsAreDistinct) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 100; ++i) firsts.insert(Rng::stream(9, i).next());
  EXPECT_EQ(firsts.size(), 100u);
}

TEST(Rng, SplitAdvancesParent) {
  Rng a(5), b(5);
  Rng child = a.split();
  b.next();
  EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(child.next(), Rng(5).next());
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, BelowIsInRangeAndRoughlyUniform) {
  Rng r(17);
  const std::size_t k = 7;
  std::vector<int> counts(k, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const std::size_t v = r.below(k);
    ASSERT_LT(v, k);
    ++counts[v];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  EXPECT_LT(chi2, 30.0);  // 6 dof; far above the 0.999 quantile (22.5)
}

TEST(Rng, CategoricalFollowsCdf) {
  Rng r(23);
  const std::vector<double> cdf = {0.2, 0.5, 1.0};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[r.categorical(cdf)];
  EXPECT_NEAR(counts[0] / double(n), 0.2, 0.006);
  EXPECT_NEAR(counts[1] / double(n), 0.3, 0.006);
  EXPECT_NEAR(counts[2] / double(n), 0.5, 0.006);
}

TEST(Rng, CategoricalDegenerate) {
  Rng r(1);
  const std::vector<double> cdf = {0.0, 1.0, 1.0};
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(r.categorical(cdf), 1u);
}
