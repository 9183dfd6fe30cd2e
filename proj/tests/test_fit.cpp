#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "clab/error.hpp"
#include "clab/fit.hpp"

using namespace clab;

TEST(FitLine, ExactLine) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
  const LinearFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(f.slope_stderr, 0.0, 1e-12);
  EXPECT_EQ(f.points, 4u);
}

TEST(FitLine, NoisyBandCoversTruthMostOfTheTime) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.5);
  int covered = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
      x.push_back(i);
      y.push_back(1.5 * i - 2 + noise(rng));
    }
    const LinearFit f = fit_line(x, y);
    covered += std::abs(f.slope - 1.5) <= f.slope_band;
  }
  EXPECT_NEAR(covered / 400.0, 0.95, 0.04);
}

TEST(FitLine, TwoPointsAndDegenerateInput) {
  const std::vector<double> x = {0, 1}, y = {1, 4};
  const LinearFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 3.0, 1e-12);
  EXPECT_EQ(f.slope_band, 0.0);
  const std::vector<double> one = {1};
  EXPECT_THROW(fit_line(one, one), Error);
  const std::vector<double> same = {2, 2, 2}, ys = {1, 2, 3};
  EXPECT_THROW(fit_line(same, ys), Error);
}
