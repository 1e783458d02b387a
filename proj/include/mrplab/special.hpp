#ifndef MRPLAB_SPECIAL_HPP
#define MRPLAB_SPECIAL_HPP

#include <cmath>
#include <limits>

#include "mrplab/error.hpp"

namespace mrplab {

namespace detail {

constexpr int kIncompleteGammaMaxIter = 100000;
constexpr double kIncompleteGammaEps = 1e-16;

// exp(-x + a log x - lgamma(a)), the common prefactor of both expansions.
inline double incomplete_gamma_prefactor(double a, double x) {
  return std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lower series, valid (and fast) for x < a + 1.
inline double lower_gamma_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kIncompleteGammaMaxIter; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kIncompleteGammaEps) break;
  }
  return sum * incomplete_gamma_prefactor(a, x);
}

// Upper continued fraction (modified Lentz), valid for x >= a + 1.
inline double upper_gamma_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kIncompleteGammaEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kIncompleteGammaMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kIncompleteGammaEps) break;
  }
  return incomplete_gamma_prefactor(a, x) * h;
}

inline void check_incomplete_gamma_args(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorKind::Domain, "incomplete gamma: shape must be positive");
  if (!(x >= 0.0) || std::isnan(x)) throw Error(ErrorKind::Domain, "incomplete gamma: x must be nonnegative");
}

}  // namespace detail

/// Lower regularized incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
/// Series for x < a + 1, continued fraction otherwise.
inline double regularized_incomplete_gamma(double a, double x) {
  detail::check_incomplete_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return std::fmin(1.0, detail::lower_gamma_series(a, x));
  return std::fmax(0.0, 1.0 - detail::upper_gamma_fraction(a, x));
}

/// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x), computed without
/// cancellation in the upper tail.
inline double regularized_upper_incomplete_gamma(double a, double x) {
  detail::check_incomplete_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return std::fmax(0.0, 1.0 - detail::lower_gamma_series(a, x));
  return std::fmin(1.0, detail::upper_gamma_fraction(a, x));
}

/// log of the rate-first gamma density rate^shape / Gamma(shape) x^(shape-1) e^(-rate x).
inline double gamma_log_density(double rate, double shape, double x) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double gamma_density(double rate, double shape, double x) {
  if (!(x > 0.0) || std::isinf(x)) return 0.0;
  return std::exp(gamma_log_density(rate, shape, x));
}

inline double poisson_pmf(long long n, double mean) {
  if (n < 0) return 0.0;
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double k = static_cast<double>(n);
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace mrplab

#endif  // MRPLAB_SPECIAL_HPP
