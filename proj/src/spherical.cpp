#include "clab/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "clab/error.hpp"

namespace clab {

namespace {

void check_parameters(int n, double s) {
  if (n < 1) fail(ErrorKind::kPrecondition, "spherical functions need n >= 1");
  if (!(s > n / 2.0 && s <= n)) fail(ErrorKind::kPrecondition, "s must lie in (n/2, n]");
}

struct Trajectory {
  std::vector<double> phi, dphi;
};

// RK4 on (phi, phi') between grid points, with a step that also shrinks
// near 0 where n coth(r) is stiff.
Trajectory integrate(int n, double lambda, double step, std::size_t points, int level, double r0) {
  Trajectory out;
  out.phi.resize(points);
  out.dphi.resize(points);
  const double base = std::min(step, 0.01) / std::ldexp(1.0, level);
  const double rel = 0.25 / (n * std::ldexp(1.0, level));
  const auto series = [&](double r, double& p, double& dp) {
    p = 1.0 - lambda * r * r / (2.0 * (n + 1));
    dp = -lambda * r / (n + 1);
  };
  const auto rhs = [&](double r, double p, double dp, double& ddp) { ddp = -n / std::tanh(r) * dp - lambda * p; };

  double r = 0.0, p = 1.0, dp = 0.0;
  bool started = false;
  for (std::size_t k = 0; k < points; ++k) {
    const double target = static_cast<double>(k) * step;
    if (target <= r0) {
      series(target, out.phi[k], out.dphi[k]);
      continue;
    }
    if (!started) {
      r = r0;
      series(r0, p, dp);
      started = true;
    }
    while (r < target) {
      double dt = std::min({base, rel * r, target - r});
      if (target - r - dt < 1e-15) dt = target - r;
      double a1, a2, a3, a4;
      rhs(r, p, dp, a1);
      const double p2 = p + 0.5 * dt * dp, dp2 = dp + 0.5 * dt * a1;
      rhs(r + 0.5 * dt, p2, dp2, a2);
      const double p3 = p + 0.5 * dt * dp2, dp3 = dp + 0.5 * dt * a2;
      rhs(r + 0.5 * dt, p3, dp3, a3);
      const double p4 = p + dt * dp3, dp4 = dp + dt * a3;
      rhs(r + dt, p4, dp4, a4);
      p += dt / 6.0 * (dp + 2 * dp2 + 2 * dp3 + dp4);
      dp += dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
      r = (target - r - dt < 1e-15) ? target : r + dt;
    }
    out.phi[k] = p;
    out.dphi[k] = dp;
  }
  return out;
}

// 4th-order first derivative of uniformly sampled f at index i.
double derivative(const std::vector<double>& f, std::size_t i, double h) {
  const std::size_t last = f.size() - 1;
  if (i >= 2 && i + 2 <= last) return (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
  if (i == 0) return (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h);
  if (i == 1) return (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h);
  if (i == last) return (25 * f[i] - 48 * f[i - 1] + 36 * f[i - 2] - 16 * f[i - 3] + 3 * f[i - 4]) / (12 * h);
  return (3 * f[i + 1] + 10 * f[i] - 18 * f[i - 1] + 6 * f[i - 2] - f[i - 3]) / (12 * h);
}

}  // namespace

SphericalTable phi(int n, double s, double r_max, double step, const PhiOptions& options) {
  check_parameters(n, s);
  if (!(step > 0) || !(r_max > 0)) fail(ErrorKind::kPrecondition, "grid step and range must be positive");
  const auto points = static_cast<std::size_t>(std::floor(r_max / step + 1e-9)) + 1;
  if (points < 5) fail(ErrorKind::kPrecondition, "grid needs at least 5 points");
  const double lambda = s * (n - s);

  SphericalTable t;
  t.n = n;
  t.s = s;
  t.step = step;
  Trajectory coarse = integrate(n, lambda, step, points, 0, options.series_radius);
  for (int level = 1;; ++level) {
    Trajectory fine = integrate(n, lambda, step, points, level, options.series_radius);
    double change = 0.0;
    for (std::size_t k = 0; k < points; ++k) change = std::max(change, std::abs(fine.phi[k] - coarse.phi[k]));
    if (change < options.tolerance) {
      t.phi = std::move(fine.phi);
      t.dphi = std::move(fine.dphi);
      t.refinement_change = change;
      t.refinement_level = level;
      break;
    }
    if (level >= options.max_level)
      fail(ErrorKind::kNumerical, "step refinement did not converge (last change " + std::to_string(change) + ")");
    coarse = std::move(fine);
  }

  t.r.resize(points);
  t.residual.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double r = static_cast<double>(k) * step;
    t.r[k] = r;
    const double ddphi = derivative(t.dphi, k, step);
    // At r = 0, n coth(r) phi' -> n phi''(0).
    const double res = k == 0 ? (n + 1) * ddphi + lambda * t.phi[k]
                              : ddphi + n / std::tanh(r) * t.dphi[k] + lambda * t.phi[k];
    t.residual[k] = std::abs(res);
    if (k > 0) t.max_residual = std::max(t.max_residual, t.residual[k]);
  }

  if (t.phi[0] != 1.0) fail(ErrorKind::kNumerical, "phi(0) is not 1");
  for (std::size_t k = 0; k < points; ++k) {
    if (!(t.phi[k] > 0)) fail(ErrorKind::kNumerical, "phi is not positive at r = " + std::to_string(t.r[k]));
    if (k > 0 && t.phi[k] > t.phi[k - 1] + 1e-14)
      fail(ErrorKind::kNumerical, "phi increases at r = " + std::to_string(t.r[k]));
  }
  return t;
}

SphericalFunction::SphericalFunction(int n, double s, double r_max) : n_(n), s_(s) {
  constexpr double kStep = 1.0 / 256;
  const double span = std::max(r_max, 4 * kStep);
  table_ = phi(n, s, std::ceil(span / kStep) * kStep, kStep);
}

double SphericalFunction::operator()(double r) const {
  const double h = table_.step;
  if (r < 0 || r > r_max() + 1e-12) fail(ErrorKind::kPrecondition, "radius outside the tabulated range");
  auto i = static_cast<std::size_t>(r / h);
  if (i + 1 >= table_.r.size()) i = table_.r.size() - 2;
  const double t = (r - static_cast<double>(i) * h) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * table_.phi[i] + (t3 - 2 * t2 + t) * h * table_.dphi[i] +
         (-2 * t3 + 3 * t2) * table_.phi[i + 1] + (t3 - t2) * h * table_.dphi[i + 1];
}

LinearFit phi_decay_fit(int n, double s, double r0, double r1) {
  const SphericalTable t = phi(n, s, r1, 0.01);
  std::vector<double> x, y;
  for (std::size_t k = 0; k < t.r.size(); ++k)
    if (t.r[k] >= r0 - 1e-9) {
      x.push_back(t.r[k]);
      y.push_back(std::log(t.phi[k]));
    }
  return fit_line(x, y);
}

void write_phi_csv(const SphericalTable& table, std::ostream& os) {
  os << "r,phi,residual\n";
  os.precision(17);
  for (std::size_t k = 0; k < table.r.size(); ++k)
    os << table.r[k] << ',' << table.phi[k] << ',' << table.residual[k] << '\n';
}

double simpson(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& options) {
  if (b == a) return 0.0;
  std::size_t n = std::max<std::size_t>(2, options.initial_intervals + options.initial_intervals % 2);
  double h = (b - a) / static_cast<double>(n);
  const double ends = f(a) + f(b);
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i < n; ++i) (i % 2 ? odd : even) += f(a + static_cast<double>(i) * h);
  double prev = h / 3 * (ends + 4 * odd + 2 * even);
  while (true) {
    even += odd;
    odd = 0.0;
    n *= 2;
    h /= 2;
    for (std::size_t i = 1; i < n; i += 2) odd += f(a + static_cast<double>(i) * h);
    const double cur = h / 3 * (ends + 4 * odd + 2 * even);
    if (std::abs(cur - prev) <= options.rel_tolerance * std::abs(cur) || (cur == 0.0 && prev == 0.0)) return cur;
    if (2 * n > options.max_intervals) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "Simpson refinement did not converge; last iterates " << prev << " and " << cur;
      fail(ErrorKind::kNumerical, msg.str());
    }
    prev = cur;
  }
}

double spherical_transform(const std::function<double(double)>& profile, const SphericalFunction& phi_s, double T,
                           const QuadratureOptions& options) {
  if (T < 0) fail(ErrorKind::kPrecondition, "support radius must be nonnegative");
  if (T > phi_s.r_max() + 1e-12) fail(ErrorKind::kPrecondition, "phi_s is not tabulated up to T");
  const int n = phi_s.n();
  return simpson([&](double r) { return profile(r) * phi_s(r) * std::pow(std::sinh(r), n); }, 0.0, T, options);
}

TransformGrowthReport transform_growth(int n, double s, const std::vector<double>& Ts) {
  check_parameters(n, s);
  if (Ts.size() < 2) fail(ErrorKind::kPrecondition, "growth fit needs at least two radii");
  TransformGrowthReport rep;
  rep.n = n;
  rep.s = s;
  rep.expected = 4 * (s - n / 2.0);
  const SphericalFunction ph(n, s, *std::max_element(Ts.begin(), Ts.end()));
  std::vector<double> x, y;
  for (double T : Ts) {
    TransformPoint p;
    p.T = T;
    p.f_hat = spherical_transform([&](double r) { return ph(r); }, ph, T);
    p.F_hat = p.f_hat * p.f_hat;
    if (p.F_hat < 0) fail(ErrorKind::kNumerical, "transform of F_s is negative");
    const double gk = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double r) { return ph(r) * ph(r) * std::pow(std::sinh(r), n); }, 0.0, T, 15, 1e-12);
    p.independent = gk * gk;
    p.rel_error = p.independent == 0 ? std::abs(p.F_hat) : std::abs(p.F_hat - p.independent) / p.independent;
    rep.max_homomorphism_error = std::max(rep.max_homomorphism_error, p.rel_error);
    x.push_back(T);
    y.push_back(std::log(p.F_hat));
    rep.points.push_back(p);
  }
  rep.fit = fit_line(x, y);
  rep.rel_deviation = std::abs(rep.fit.slope - rep.expected) / rep.expected;
  return rep;
}

KernelProfile kernel_profile_h3(double s, double T, double step) {
  check_parameters(2, s);
  if (!(T > 0) || !(step > 0)) fail(ErrorKind::kPrecondition, "kernel profile needs T > 0 and step > 0");
  const auto m = static_cast<std::size_t>(std::ceil(T / step - 1e-9));
  const double h = T / static_cast<double>(m);
  const SphericalFunction ph(2, s, T);
  const auto g = [&](double r) { return ph(r) * std::sinh(r); };

  // a[j] = int_{jh}^T phi sinh, Simpson per cell.
  std::vector<double> a(m + 1, 0.0), gv(m + 1);
  for (std::size_t j = 0; j <= m; ++j) gv[j] = g(static_cast<double>(j) * h);
  for (std::size_t j = m; j-- > 0;) {
    const double mid = g((static_cast<double>(j) + 0.5) * h);
    a[j] = a[j + 1] + h / 6 * (gv[j] + 4 * mid + gv[j + 1]);
  }
  const auto a_at = [&](std::ptrdiff_t k) -> double {
    const auto u = static_cast<std::size_t>(k < 0 ? -k : k);
    return u > m ? 0.0 : a[u];
  };

  const double f0 = simpson([&](double r) { return std::pow(ph(r) * std::sinh(r), 2); }, 0.0, T);
  KernelProfile out;
  const auto kmax = static_cast<std::ptrdiff_t>(std::ceil((2 * T + 0.5) / h));
  const auto mm = static_cast<std::ptrdiff_t>(m);
  for (std::ptrdiff_t k = 0; k <= kmax; ++k) {
    const double d = static_cast<double>(k) * h;
    out.d.push_back(d);
    if (k == 0) {
      out.value.push_back(f0);
      continue;
    }
    // Trapezoid over y in [-T, T]; the integrand vanishes at both ends.
    double sum = 0.0;
    for (std::ptrdiff_t j = -mm + 1; j < mm; ++j) {
      if (j == 0) continue;
      const double gj = j > 0 ? gv[static_cast<std::size_t>(j)] : -gv[static_cast<std::size_t>(-j)];
      sum += gj * a_at(k - j);
    }
    out.value.push_back(sum * h / (2 * std::sinh(d)));
  }
  return out;
}

void write_kernel_csv(const KernelProfile& profile, std::ostream& os) {
  os << "d,F\n";
  os.precision(17);
  for (std::size_t k = 0; k < profile.d.size(); ++k) os << profile.d[k] << ',' << profile.value[k] << '\n';
}

KernelReport kernel_diagonal_check(int n, double s, const std::vector<double>& Ts, const KernelOptions& options) {
  check_parameters(n, s);
  if (Ts.size() < 2) fail(ErrorKind::kPrecondition, "kernel check needs at least two radii");
  KernelReport rep;
  rep.n = n;
  rep.s = s;
  rep.expected = 2 * (s - n / 2.0);
  const SphericalFunction ph(n, s, *std::max_element(Ts.begin(), Ts.end()));
  std::vector<double> x, y;
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
  bool tails_ok = true;
  for (double T : Ts) {
    KernelRow row;
    row.T = T;
    row.diagonal = simpson([&](double r) { return std::pow(ph(r), 2) * std::pow(std::sinh(r), n); }, 0.0, T);
    const double scale = std::exp(rep.expected * T);
    row.c_estimate = row.diagonal / scale;
    cmin = std::min(cmin, row.c_estimate);
    cmax = std::max(cmax, row.c_estimate);
    x.push_back(T);
    y.push_back(std::log(row.diagonal));
    if (n == 2) {
      const KernelProfile prof = kernel_profile_h3(s, T, options.step);
      row.reconstructed = true;
      const double f0 = prof.value[0];
      for (std::size_t k = 0; k < prof.d.size(); ++k) {
        const double v = prof.value[k];
        row.profile_bound = std::max(row.profile_bound, v * std::exp(prof.d[k]) / scale);
        if (prof.d[k] > 2 * T + options.support_slack) row.tail = std::max(row.tail, std::abs(v) / f0);
        row.most_negative = std::min(row.most_negative, v / f0);
      }
      pmin = std::min(pmin, row.profile_bound);
      pmax = std::max(pmax, row.profile_bound);
      if (row.most_negative < -options.negativity_tolerance) rep.inconclusive = true;
      if (row.tail >= 1e-6) tails_ok = false;
    }
    rep.rows.push_back(row);
  }
  rep.fit = fit_line(x, y);
  rep.rel_deviation = std::abs(rep.fit.slope - rep.expected) / rep.expected;
  rep.c_ratio = cmax / cmin;
  if (n == 2) rep.profile_ratio = pmax / pmin;
  rep.passed = rep.rel_deviation <= options.exponent_tolerance && rep.c_ratio < options.constant_ratio &&
               (n != 2 || (tails_ok && !rep.inconclusive && rep.profile_ratio < options.constant_ratio));
  return rep;
}

namespace {

void check_threshold_n(int n) {
  if (n < 2) fail(ErrorKind::kPrecondition, "thresholds are defined for n >= 2");
}

Rational t_coefficient(int n) { return Rational((n + 1) * (n + 2), 4); }

}  // namespace

ThresholdReport critical_threshold(int n) {
  check_threshold_n(n);
  ThresholdReport r;
  r.n = n;
  r.s0 = Rational(n) - Rational(2 * (n - 1), (n + 1) * (n + 2));
  r.lambda0 = r.s0 * (Rational(n) - r.s0);
  r.multiplicity_exponent = n - 1;
  r.count_main_exponent = n;
  r.count_error_exponent = n - 1;
  r.t_coefficient = t_coefficient(n);
  return r;
}

ThresholdReport keystone_threshold(int n, const Rational& multiplicity_exponent, const Rational& count_main,
                                   const Rational& count_error) {
  check_threshold_n(n);
  if (multiplicity_exponent < 0) fail(ErrorKind::kPrecondition, "multiplicity exponent must be nonnegative");
  if (count_main != n) fail(ErrorKind::kPrecondition, "count main exponent must equal n");
  if (count_error < 0 || count_error > n - 1) fail(ErrorKind::kPrecondition, "count error exponent must lie in [0, n-1]");
  ThresholdReport r;
  r.n = n;
  r.multiplicity_exponent = multiplicity_exponent;
  r.count_main_exponent = count_main;
  r.count_error_exponent = count_error;
  r.t_coefficient = t_coefficient(n);
  // (2s - n) c + e_m <= main c  =>  s <= (n + main)/2 - e_m / (2c)
  r.s0 = (Rational(n) + count_main) / 2 - multiplicity_exponent / (2 * r.t_coefficient);
  r.lambda0 = r.s0 * (Rational(n) - r.s0);
  return r;
}

}  // namespace clab
