#ifndef MRPLAB_QUADRATURE_HPP
#define MRPLAB_QUADRATURE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace mrplab::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  int subdivisions = 0;
  bool converged = true;

  Result& operator+=(const Result& o) {
    value += o.value;
    error += o.error;
    evaluations += o.evaluations;
    subdivisions += o.subdivisions;
    converged = converged && o.converged;
    return *this;
  }
};

struct Tolerance {
  double abs = 1e-12;
  double rel = 1e-10;
  int max_subdivisions = 2000;
};

namespace detail {

// 15-point Kronrod abscissae with embedded 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename F>
Segment gk15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::fabs(resk);
  std::array<double, 7> fv1{};
  std::array<double, 7> fv2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::fabs(f1) + std::fabs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[7] * std::fabs(fc - reskh);
  for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));

  const double value = resk * half;
  resabs *= std::fabs(half);
  resasc *= std::fabs(half);
  double err = std::fabs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, value, err};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (15 point) on [a, b]: repeatedly bisects the
/// segment with the largest error estimate until the total estimate is below
/// max(abs, rel * |I|) or the subdivision budget runs out.
template <typename F>
Result integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
  Result out;
  if (a == b) return out;
  if (b < a) {
    out = integrate(f, b, a, tol);
    out.value = -out.value;
    return out;
  }
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gk15(f, a, b));
  out.evaluations = 15;
  double total = heap.top().value;
  double total_err = heap.top().error;
  // segments too narrow to split are retired here
  double retired_value = 0.0;
  double retired_err = 0.0;

  auto met = [&] { return total_err <= std::max(tol.abs, tol.rel * std::fabs(total)); };
  while (!met()) {
    if (heap.empty()) break;
    if (out.subdivisions >= tol.max_subdivisions) {
      out.converged = false;
      break;
    }
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        (worst.b - worst.a) < 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(mid), 1e-300)) {
      retired_value += worst.value;
      retired_err += worst.error;
      continue;
    }
    const detail::Segment left = detail::gk15(f, worst.a, mid);
    const detail::Segment right = detail::gk15(f, mid, worst.b);
    out.evaluations += 30;
    ++out.subdivisions;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // resum to shed drift from the incremental updates
  double value = retired_value;
  double err = retired_err;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error = err;
  // the resummed totals can differ from the running ones in the last ulp
  if (!met() && err > std::max(tol.abs, tol.rel * std::fabs(value))) out.converged = false;
  return out;
}

/// Integral over [lo, hi] with hi possibly infinite, through the map
/// x = lo + scale * u / (1 - u). Finite `hi` truncates the u-range.
template <typename F>
Result integrate_mapped(F&& f, double lo, double hi, double scale, const Tolerance& tol = {}) {
  const double u_max = std::isinf(hi) ? 1.0 : (hi - lo) / (scale + (hi - lo));
  auto g = [&](double u) {
    const double one_minus = 1.0 - u;
    const double x = lo + scale * u / one_minus;
    if (std::isinf(x)) return 0.0;
    const double fx = f(x);
    return fx == 0.0 ? 0.0 : fx * scale / (one_minus * one_minus);
  };
  return integrate(g, 0.0, u_max, tol);
}

}  // namespace mrplab::quad

#endif  // MRPLAB_QUADRATURE_HPP
