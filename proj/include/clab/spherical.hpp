#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "clab/error.hpp"
#include "clab/fit.hpp"

namespace clab {

// Radial spherical functions on H^{n+1}: phi'' + n coth(r) phi' + s(n-s) phi = 0,
// phi(0) = 1, phi'(0) = 0. Volume density is sinh^n(r) dr throughout (the
// sphere-area constant is dropped).

struct SphericalTable {
  int n = 0;
  double s = 0.0;
  double step = 0.0;
  std::vector<double> r;
  std::vector<double> phi;
  std::vector<double> dphi;
  // |phi'' + n coth(r) phi' + lambda phi| with phi'' from a 4th-order
  // difference of the computed phi'.
  std::vector<double> residual;
  double max_residual = 0.0;
  // Max change of phi when the internal step is halved.
  double refinement_change = 0.0;
  int refinement_level = 0;
};

struct PhiOptions {
  double series_radius = 1e-3;  // two-term Taylor start below this
  double tolerance = 1e-10;     // step-halving agreement
  int max_level = 10;
};

// Values on the grid r_k = k * step, k = 0..floor(r_max / step). Requires
// s in (n/2, n].
SphericalTable phi(int n, double s, double r_max, double step, const PhiOptions& options = {});

// Continuous phi_s on [0, r_max]: cubic Hermite interpolation of a fine table.
class SphericalFunction {
 public:
  SphericalFunction(int n, double s, double r_max);
  double operator()(double r) const;
  int n() const { return n_; }
  double s() const { return s_; }
  double r_max() const { return table_.r.empty() ? 0.0 : table_.r.back(); }

 private:
  int n_;
  double s_;
  SphericalTable table_;
};

// Slope of log phi_s on [r0, r1]; tends to s - n.
LinearFit phi_decay_fit(int n, double s, double r0 = 10.0, double r1 = 20.0);

void write_phi_csv(const SphericalTable& table, std::ostream& os);

struct QuadratureOptions {
  double rel_tolerance = 1e-6;
  std::size_t initial_intervals = 64;
  std::size_t max_intervals = std::size_t{1} << 22;
};

// Composite Simpson with interval doubling until successive values agree.
double simpson(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& options = {});

// int_0^T profile(r) phi_s(r) sinh^n(r) dr for a profile supported in [0, T].
double spherical_transform(const std::function<double(double)>& profile, const SphericalFunction& phi_s, double T,
                           const QuadratureOptions& options = {});

// f_s = phi_s on [0, T]; its transform at lambda_s is int_0^T phi_s^2 sinh^n,
// which is also F_s(e) for F_s = f_s * f_s, and the transform of F_s is its
// square.
struct TransformPoint {
  double T = 0.0;
  double f_hat = 0.0;       // Simpson
  double F_hat = 0.0;       // f_hat^2
  double independent = 0.0; // Gauss-Kronrod value of int phi^2 sinh^n, squared
  double rel_error = 0.0;   // |F_hat - independent| / independent
};

struct TransformGrowthReport {
  int n = 0;
  double s = 0.0;
  std::vector<TransformPoint> points;
  LinearFit fit;          // log F_hat against T
  double expected = 0.0;  // 4(s - n/2)
  double rel_deviation = 0.0;
  double max_homomorphism_error = 0.0;
};

TransformGrowthReport transform_growth(int n, double s, const std::vector<double>& Ts);

struct KernelRow {
  double T = 0.0;
  double diagonal = 0.0;  // F_s(e)
  double c_estimate = 0.0;  // F_s(e) / e^{(2s-n)T}
  // n = 2 only: sup_d F_s(d) e^{d} / e^{(2s-2)T}, the largest value beyond
  // 2T + 0.1 and the most negative value, both relative to F_s(e).
  bool reconstructed = false;
  double profile_bound = 0.0;
  double tail = 0.0;
  double most_negative = 0.0;
};

struct KernelReport {
  int n = 0;
  double s = 0.0;
  std::vector<KernelRow> rows;
  LinearFit fit;  // log F_s(e) against T
  double expected = 0.0;  // 2(s - n/2)
  double rel_deviation = 0.0;
  double c_ratio = 0.0;        // max/min of the diagonal constants
  double profile_ratio = 0.0;  // max/min of the pointwise constants (n = 2)
  bool inconclusive = false;   // reconstruction oscillated below -tolerance
  bool passed = false;
};

struct KernelOptions {
  double step = 0.005;           // reconstruction grid
  double support_slack = 0.1;
  double negativity_tolerance = 1e-6;
  double constant_ratio = 3.0;
  double exponent_tolerance = 0.05;  // relative
};

KernelReport kernel_diagonal_check(int n, double s, const std::vector<double>& Ts, const KernelOptions& options = {});

// Radial profile of F_s = f_s * f_s on H^3 on the grid d_k = k * step up to
// 2T + 0.5, by the Abel transform: with a(x) = int_{|x|}^T phi_s sinh,
// F_s(d) = -(a * a)'(d) / (2 sinh d).
struct KernelProfile {
  std::vector<double> d;
  std::vector<double> value;
};
KernelProfile kernel_profile_h3(double s, double T, double step = 0.005);

void write_kernel_csv(const KernelProfile& profile, std::ostream& os);

// Exact threshold arithmetic.
using Rational = boost::multiprecision::cpp_rational;

struct ThresholdReport {
  int n = 0;
  Rational s0;
  Rational lambda0;
  Rational multiplicity_exponent;
  Rational count_main_exponent;
  Rational count_error_exponent;
  Rational t_coefficient;  // T = t_coefficient * ln |O/I|
};

// s0 = n - 2(n-1)/((n+1)(n+2)), lambda0 = s0 (n - s0); n >= 2.
ThresholdReport critical_threshold(int n);

// Largest s not excluded by (2s - n) c + e_m <= main * c with
// c = (n+1)(n+2)/4, epsilon -> 0. Requires main = n, 0 <= error <= n - 1,
// e_m >= 0.
ThresholdReport keystone_threshold(int n, const Rational& multiplicity_exponent, const Rational& count_main,
                                   const Rational& count_error);

}  // namespace clab
