#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "seqroll/bo_problem.hpp"
#include "seqroll/core.hpp"

using namespace seqroll;

TEST(Ties, LowestIndexWins) {
  EXPECT_EQ(argmin_lowest(std::vector<double>{2.0, 1.0, 1.0}), 1u);
  EXPECT_EQ(argmin_lowest(std::vector<double>{1.0, 1.0 + 1e-14, 0.5 + 0.5}), 0u);
  EXPECT_EQ(argmin_lowest(std::vector<double>{1.0, 1.0 - 1e-6}), 1u);
  EXPECT_THROW(argmin_lowest(std::vector<double>{}), InvalidArgument);
  EXPECT_FALSE(strictly_less(1.0, 1.0));
  EXPECT_TRUE(strictly_less(0.0, 1.0));
}

TEST(Rng, DeterministicAndSeedSensitive) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    (void)c.next();
  }
  EXPECT_NE(Rng(42).next(), Rng(43).next());
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(7, 8, 9), derive_seed(7, 8, 9));
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(3);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, CategoricalFrequencies) {
  Rng rng(5);
  const std::vector<double> probs{0.2, 0.0, 0.5, 0.3};
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.categorical(probs)];
  EXPECT_EQ(counts[1], 0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(counts[i] / double(n), probs[i], 0.01);
}

TEST(NoiseGrid, GaussHermiteMoments) {
  for (Index size : {1u, 3u, 5u, 7u, 9u}) {
    const auto grid = NoiseGrid::gauss_hermite(size);
    ASSERT_EQ(grid.size(), size);
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (Index j = 0; j < size; ++j) {
      m0 += grid.probs[j];
      m1 += grid.probs[j] * grid.points[j];
      m2 += grid.probs[j] * grid.points[j] * grid.points[j];
      m4 += grid.probs[j] * std::pow(grid.points[j], 4);
    }
    EXPECT_NEAR(m0, 1.0, 1e-14);
    EXPECT_NEAR(m1, 0.0, 1e-14);
    if (size >= 3) { EXPECT_NEAR(m2, 1.0, 1e-12); }
    if (size >= 5) { EXPECT_NEAR(m4, 3.0, 1e-11); }
  }
  const auto g3 = NoiseGrid::gauss_hermite(3);
  EXPECT_NEAR(g3.points[2], std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(g3.probs[1], 2.0 / 3.0, 1e-12);
  EXPECT_THROW(NoiseGrid::gauss_hermite(4), InvalidArgument);
  EXPECT_THROW(NoiseGrid::gauss_hermite(0), InvalidArgument);
}

TEST(NoiseGrid, ValidateRejectsBadLaws) {
  NoiseGrid g{{-1.0, 1.0}, {0.5, 0.6}};
  EXPECT_THROW(g.validate(), InvalidArgument);
  g.probs = {0.5, 0.5};
  EXPECT_NO_THROW(g.validate());
}

TEST(Errors, ParseErrorCarriesLocation) {
  const ParseError e("line 5", "unexpected token");
  EXPECT_EQ(e.where(), "line 5");
  EXPECT_EQ(std::string(e.what()), "line 5: unexpected token");
  const Error& base = e;
  EXPECT_NE(std::string(base.what()).find("line 5"), std::string::npos);
}
