#include "clab/fit.hpp"

#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/statistics/linear_regression.hpp>

#include "clab/error.hpp"

namespace clab {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::kDimension, "fit: x and y differ in length");
  if (x.size() < 2) fail(ErrorKind::kPrecondition, "fit: need at least two points");
  const std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  bool spread = false;
  for (double v : xs) spread = spread || v != xs.front();
  if (!spread) fail(ErrorKind::kPrecondition, "fit: all x values are equal");
  LinearFit fit;
  fit.points = xs.size();
  auto [c0, c1, r2] = boost::math::statistics::simple_ordinary_least_squares_with_R_squared(xs, ys);
  fit.intercept = c0;
  fit.slope = c1;
  fit.r_squared = r2;
  if (xs.size() > 2) {
    double sxx = 0.0, sse = 0.0, mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mean) * (xs[i] - mean);
      const double e = ys[i] - (c0 + c1 * xs[i]);
      sse += e * e;
    }
    const double dof = static_cast<double>(xs.size() - 2);
    fit.slope_stderr = std::sqrt(sse / dof / sxx);
    const boost::math::students_t t(dof);
    fit.slope_band = boost::math::quantile(boost::math::complement(t, 0.025)) * fit.slope_stderr;
  }
  return fit;
}

}  // namespace clab
