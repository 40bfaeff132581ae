#include <gtest/gtest.h>

#include <random>

#include "draftval/spline_basis.hpp"
#include "test_support.hpp"

namespace draftval {
namespace {

TEST(SplineBasis, MatchesDeBoorRecursion) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1.0, 256.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = i < 2 ? (i == 0 ? 1.0 : 256.0) : u(rng);
    const auto got = evaluate_basis(x);
    const auto want = testing::de_boor_basis(x);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(got[k], want[k], 1e-12) << "x=" << x << " k=" << k;
  }
}

TEST(SplineBasis, PartitionOfUnityAndNonNegative) {
  for (int x = 1; x <= 256; ++x) {
    const auto b = evaluate_basis(x);
    EXPECT_NEAR(b[0] + b[1] + b[2] + b[3], 1.0, 1e-12);
    for (double v : b) EXPECT_GE(v, 0.0);
  }
}

TEST(SplineBasis, FrozenValues) {
  const auto lo = evaluate_basis(1.0);
  EXPECT_EQ(lo[0], 1.0);
  EXPECT_EQ(lo[1], 0.0);
  const auto hi = evaluate_basis(256.0);
  EXPECT_EQ(hi[3], 1.0);
  const auto mid = evaluate_basis(128.5);
  EXPECT_NEAR(mid[0], 0.125, 1e-15);
  EXPECT_NEAR(mid[1], 0.375, 1e-15);
  EXPECT_NEAR(mid[2], 0.375, 1e-15);
  EXPECT_NEAR(mid[3], 0.125, 1e-15);
}

TEST(SplineBasis, OutOfDomainThrows) {
  EXPECT_THROW(evaluate_basis(0.5), std::domain_error);
  EXPECT_THROW(evaluate_basis(256.5), std::domain_error);
}

TEST(SplineBasis, TableMatchesPointwise) {
  const auto& t = basis_table();
  for (int x = 1; x <= 256; ++x) {
    const auto b = evaluate_basis(x);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(t[static_cast<std::size_t>(x - 1)][k], b[k]);
  }
}

}  // namespace
}  // namespace draftval
