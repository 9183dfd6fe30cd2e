#pragma once

#include <cstddef>
#include <span>

namespace clab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  // Half-width of the 95% confidence interval for the slope (Student t).
  double slope_band = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x. Needs >= 2 points; with
// exactly 2 the error estimates are zero.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace clab
