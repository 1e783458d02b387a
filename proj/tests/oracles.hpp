#ifndef MRPLAB_TESTS_ORACLES_HPP
#define MRPLAB_TESTS_ORACLES_HPP

// Reference integrators for tests. Deliberately unrelated to the library's
// Gauss-Kronrod code so that agreement between the two means something.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// Double-exponential (exp-sinh) rule for integrals over (0, inf). Tolerates
/// integrable endpoint singularities at 0.
inline double exp_sinh(const std::function<double(double)>& f, double rel_tol = 1e-14) {
  const double half_pi = std::numbers::pi / 2.0;
  const double t_max = 6.0;
  auto term = [&](double t) {
    const double x = std::exp(half_pi * std::sinh(t));
    if (x == 0.0 || std::isinf(x)) return 0.0;
    const double fx = f(x);
    return fx == 0.0 ? 0.0 : fx * x * half_pi * std::cosh(t);
  };
  double h = 0.5;
  double sum = term(0.0);
  for (double t = h; t <= t_max; t += h) sum += term(t) + term(-t);
  double estimate = sum * h;
  for (int level = 0; level < 14; ++level) {
    h /= 2.0;
    // new nodes sit at odd multiples of h
    for (double t = h; t <= t_max; t += 2.0 * h) sum += term(t) + term(-t);
    const double next = sum * h;
    if (level >= 3 && std::fabs(next - estimate) <= rel_tol * std::fabs(next)) return next;
    estimate = next;
  }
  return estimate;
}

/// Tanh-sinh rule on a finite interval; endpoint singularities are fine.
inline double tanh_sinh(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-14) {
  const double half_pi = std::numbers::pi / 2.0;
  const double r = 0.5 * (b - a);
  const double t_max = 3.5;
  auto term = [&](double t) {
    const double s = half_pi * std::sinh(t);
    // distance from the nearer endpoint, computed without cancellation
    const double gap = 1.0 / (std::exp(std::fabs(s)) * std::cosh(s));
    if (gap == 0.0) return 0.0;
    const double x = t >= 0 ? b - r * gap : a + r * gap;
    const double w = half_pi * std::cosh(t) / (std::cosh(s) * std::cosh(s));
    return f(x) * w;
  };
  double h = 0.5;
  double sum = term(0.0);
  for (double t = h; t <= t_max; t += h) sum += term(t) + term(-t);
  double estimate = sum * h * r;
  for (int level = 0; level < 14; ++level) {
    h /= 2.0;
    for (double t = h; t <= t_max; t += 2.0 * h) sum += term(t) + term(-t);
    const double next = sum * h * r;
    if (level >= 3 && std::fabs(next - estimate) <= rel_tol * std::fabs(next)) return next;
    estimate = next;
  }
  return estimate;
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson on a finite interval with a smooth integrand.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-15) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

}  // namespace oracle

#endif  // MRPLAB_TESTS_ORACLES_HPP
