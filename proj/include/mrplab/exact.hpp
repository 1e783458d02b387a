#ifndef MRPLAB_EXACT_HPP
#define MRPLAB_EXACT_HPP

// Finite-dimensional probabilities of a mixed model, evaluated by integrating
// the conditional (product) law against the mixing measure:
//
//   P(W_k in (a_k, b_k], k = 1..r; theta in E)
//       = int_E prod_k [F_k(b_k; theta) - F_k(a_k; theta)] mu(dtheta).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mrplab/construction.hpp"
#include "mrplab/error.hpp"
#include "mrplab/kernels.hpp"
#include "mrplab/quadrature.hpp"
#include "mrplab/special.hpp"

namespace mrplab {

/// Finite-dimensional box: coordinate k (1-based in the process) ranges over
/// (a_k, b_k]. Upper-CDF queries use a_k = -inf.
struct BoxQuery {
  std::vector<Interval> bounds;

  static BoxQuery upper(const std::vector<double>& w) {
    BoxQuery q;
    for (double v : w) q.bounds.push_back({-kInf, v});
    return q;
  }

  std::size_t dimension() const { return bounds.size(); }

  void validate() const {
    if (bounds.empty()) throw Error(ErrorKind::Configuration, "box query needs at least one coordinate");
    for (std::size_t k = 0; k < bounds.size(); ++k) {
      const auto& iv = bounds[k];
      if (std::isnan(iv.lo) || std::isnan(iv.hi) || !(iv.lo < iv.hi))
        throw Error(ErrorKind::Configuration, "box coordinate " + std::to_string(k + 1) + " needs a_k < b_k");
    }
  }
};

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_subdivisions = 2000;
  /// Unbounded gamma mixing axes are truncated where the upper tail mass
  /// drops below abs_tol * tail_factor; that mass is added to the error.
  double tail_factor = 1e-3;
  std::size_t max_dimension = 16;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw Error(ErrorKind::Configuration, "tolerances must be positive");
    if (max_subdivisions < 1) throw Error(ErrorKind::Configuration, "max_subdivisions must be positive");
  }
  quad::Tolerance tolerance(double scale = 1.0) const { return {abs_tol * scale, rel_tol * scale, max_subdivisions}; }
};

struct ExactResult {
  double probability = 0.0;
  double error_estimate = 0.0;
  std::string method;
};

namespace detail {

inline Interval clip(const Interval& support, const std::optional<Box>& event, std::size_t j) {
  Interval iv = support;
  if (event && j < event->size()) {
    iv.lo = std::max(iv.lo, (*event)[j].lo);
    iv.hi = std::min(iv.hi, (*event)[j].hi);
  }
  return iv;
}

inline bool in_event(const Theta& theta, const std::optional<Box>& event) {
  if (!event) return true;
  for (std::size_t j = 0; j < event->size() && j < theta.size(); ++j) {
    const auto& iv = (*event)[j];
    // (lo, hi] like the interarrival boxes
    if (!(theta[j] > iv.lo && theta[j] <= iv.hi)) return false;
  }
  return true;
}

/// Smallest x with Q(shape, rate x) <= eps.
inline double gamma_truncation_point(double rate, double shape, double eps) {
  double hi = std::max(1.0, 2.0 * shape) / rate;
  while (regularized_upper_incomplete_gamma(shape, rate * hi) > eps) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (regularized_upper_incomplete_gamma(shape, rate * mid) > eps ? lo : hi) = mid;
  }
  return hi;
}

/// int over `range` of g(x) * Ga(rate, shape)(dx), for |g| <= 1.
template <typename G>
quad::Result integrate_gamma_axis(G&& g, double rate, double shape, Interval range, const QuadratureConfig& cfg,
                                  double tol_scale) {
  range.lo = std::max(range.lo, 0.0);
  quad::Result out;
  if (!(range.lo < range.hi)) return out;
  const double cut = gamma_truncation_point(rate, shape, cfg.abs_tol * tol_scale * cfg.tail_factor);
  double tail = 0.0;
  if (range.hi > cut) {
    tail = regularized_upper_incomplete_gamma(shape, rate * std::max(cut, range.lo));
    range.hi = std::max(cut, range.lo);
  }
  if (range.lo < range.hi) {
    auto f = [&](double x) { return g(x) * gamma_density(rate, shape, x); };
    out = quad::integrate_mapped(f, range.lo, range.hi, shape / rate, cfg.tolerance(tol_scale));
  }
  out.error += tail;
  return out;
}

/// int over `range` of g(x) * Beta(a, b) on (lo, hi). Endpoint singularities
/// (a < 1 or b < 1) are removed by u = v^(1/a) on the left half of the unit
/// interval and 1 - u = v^(1/b) on the right half.
template <typename G>
quad::Result integrate_beta_axis(G&& g, const BetaFactor& f, Interval range, const QuadratureConfig& cfg,
                                 double tol_scale) {
  const double w = f.hi - f.lo;
  const double u0 = std::clamp((range.lo - f.lo) / w, 0.0, 1.0);
  const double u1 = std::clamp((range.hi - f.lo) / w, 0.0, 1.0);
  const double lb = log_beta(f.a, f.b);
  const quad::Tolerance tol = cfg.tolerance(0.5 * tol_scale);
  auto x_at = [&](double u) { return f.lo + w * u; };
  quad::Result out;
  if (u0 < 0.5) {
    const double hi = std::min(u1, 0.5);
    if (f.a < 1.0) {
      auto h = [&](double v) {
        const double u = std::pow(v, 1.0 / f.a);
        return g(x_at(u)) * std::exp((f.b - 1.0) * std::log1p(-u) - lb) / f.a;
      };
      out += quad::integrate(h, std::pow(u0, f.a), std::pow(hi, f.a), tol);
    } else {
      auto h = [&](double u) {
        if (u <= 0.0) return 0.0;
        return g(x_at(u)) * std::exp((f.a - 1.0) * std::log(u) + (f.b - 1.0) * std::log1p(-u) - lb);
      };
      out += quad::integrate(h, u0, hi, tol);
    }
  }
  if (u1 > 0.5) {
    const double s0 = 1.0 - std::max(u0, 0.5);
    const double s1 = 1.0 - u1;
    if (f.b < 1.0) {
      auto h = [&](double v) {
        const double s = std::pow(v, 1.0 / f.b);
        return g(x_at(1.0 - s)) * std::exp((f.a - 1.0) * std::log1p(-s) - lb) / f.b;
      };
      out += quad::integrate(h, std::pow(s1, f.b), std::pow(s0, f.b), tol);
    } else {
      auto h = [&](double s) {
        if (s <= 0.0) return 0.0;
        return g(x_at(1.0 - s)) * std::exp((f.a - 1.0) * std::log1p(-s) + (f.b - 1.0) * std::log(s) - lb);
      };
      out += quad::integrate(h, s1, s0, tol);
    }
  }
  return out;
}

template <typename G>
quad::Result integrate_factor(G&& g, const Factor& factor, Interval range, const QuadratureConfig& cfg,
                              double tol_scale) {
  if (const auto* gf = std::get_if<GammaFactor>(&factor))
    return integrate_gamma_axis(g, gf->rate, gf->shape, range, cfg, tol_scale);
  const Interval s = factor_support(factor);
  range.lo = std::max(range.lo, s.lo);
  range.hi = std::min(range.hi, s.hi);
  if (!(range.lo < range.hi)) return {};
  if (const auto* bf = std::get_if<BetaFactor>(&factor)) return integrate_beta_axis(g, *bf, range, cfg, tol_scale);
  auto f = [&](double x) { return g(x) * factor_density(factor, x); };
  return quad::integrate(f, range.lo, range.hi, cfg.tolerance(tol_scale));
}

// Iterated integral over factors [0, level) with theta[level..] fixed.
// The last factor is the outermost integral. Inner errors are absolute and
// enter the outer error through their maximum (the outer measure has mass 1).
template <typename F>
quad::Result integrate_product(F& f, const ProductMixing& mix, Theta& theta, std::size_t level,
                               const std::optional<Box>& event, const QuadratureConfig& cfg, double tol_scale) {
  if (level == 0) return {f(theta), 0.0, 1, 0, true};
  const std::size_t j = level - 1;
  double worst_inner = 0.0;
  bool inner_ok = true;
  int inner_evals = 0;
  auto g = [&](double x) {
    theta[j] = x;
    const quad::Result inner = integrate_product(f, mix, theta, j, event, cfg, tol_scale * 0.1);
    worst_inner = std::max(worst_inner, inner.error);
    inner_ok = inner_ok && inner.converged;
    inner_evals += inner.evaluations;
    return inner.value;
  };
  quad::Result out = integrate_factor(g, mix.factors[j], clip(factor_support(mix.factors[j]), event, j), cfg, tol_scale);
  out.error += worst_inner;
  out.converged = out.converged && inner_ok;
  out.evaluations += inner_evals;
  return out;
}

}  // namespace detail

/// int_E f(theta) mu(dtheta) for |f| <= 1. Point-mass kinds are summed
/// exactly; continuous kinds use adaptive Gauss-Kronrod.
template <typename F>
ExactResult integrate_over_mixing(const MixingMeasure& mu, F&& f, const QuadratureConfig& cfg,
                                  const std::optional<Box>& event = std::nullopt) {
  cfg.validate();
  if (const auto* d = mu.as<DiracMixing>())
    return {detail::in_event(d->atom, event) ? f(d->atom) : 0.0, 0.0, "point-mass"};
  if (const auto* d = mu.as<DiscreteMixing>()) {
    double total = 0.0;
    for (std::size_t i = 0; i < d->atoms.size(); ++i)
      if (d->weights[i] > 0.0 && detail::in_event(d->atoms[i], event)) total += d->weights[i] * f(d->atoms[i]);
    return {total, 0.0, "atom-sum"};
  }
  quad::Result r;
  if (const auto* g = mu.as<GammaMixing>()) {
    Theta theta(1);
    auto h = [&](double x) {
      theta[0] = x;
      return f(theta);
    };
    r = detail::integrate_gamma_axis(h, g->rate, g->shape, detail::clip({0.0, kInf}, event, 0), cfg, 1.0);
  } else {
    const auto& p = *mu.as<ProductMixing>();
    Theta theta(p.factors.size());
    r = detail::integrate_product(f, p, theta, p.factors.size(), event, cfg, 1.0);
  }
  if (!r.converged)
    throw AccuracyError("adaptive quadrature did not converge within the subdivision budget", r.value, r.error);
  return {r.value, r.error, "gauss-kronrod-15"};
}

/// Total mass of a continuous mixing measure (should be 1).
inline ExactResult mixing_total_mass(const MixingMeasure& mu, const QuadratureConfig& cfg = {}) {
  return integrate_over_mixing(mu, [](const Theta&) { return 1.0; }, cfg);
}

/// prod_k Q_k(theta)((a_k, b_k]).
inline double conditional_box_probability(const KernelSpec& kernel, const BoxQuery& query, const Theta& theta) {
  double p = 1.0;
  for (std::size_t k = 0; k < query.bounds.size() && p != 0.0; ++k) {
    const int index = static_cast<int>(k + 1);
    const auto& iv = query.bounds[k];
    const double upper = iv.hi == kInf ? 1.0 : kernel_cdf(kernel, index, theta, iv.hi);
    const double lower = iv.lo == -kInf ? 0.0 : kernel_cdf(kernel, index, theta, iv.lo);
    p *= std::max(0.0, upper - lower);
  }
  return p;
}

/// P(W_k in (a_k, b_k] for k = 1..r [, theta in E]) for the mixed model.
inline ExactResult joint_interarrival_probability(const MrpModel& model, const BoxQuery& query,
                                                  const QuadratureConfig& cfg = {},
                                                  const std::optional<Box>& event = std::nullopt) {
  query.validate();
  if (query.dimension() > cfg.max_dimension)
    throw Error(ErrorKind::Configuration, "box dimension " + std::to_string(query.dimension()) +
                                              " exceeds the configured cap " + std::to_string(cfg.max_dimension));
  return integrate_over_mixing(
      model.mixing, [&](const Theta& theta) { return conditional_box_probability(model.kernel, query, theta); }, cfg,
      event);
}

/// Closed form of P(W_1 <= w1, W_2 <= w2) for Q_n(theta) = Exp(n theta) mixed
/// over Ga(2, 1):  w2/(w2+1) - 2[(w1+2)^-1 - (w1+2w2+2)^-1].
inline double example16_closed_form(double w1, double w2) {
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw Error(ErrorKind::Domain, "example16_closed_form needs w1, w2 >= 0");
  return w2 / (w2 + 1.0) - 2.0 * (1.0 / (w1 + 2.0) - 1.0 / (w1 + 2.0 * w2 + 2.0));
}

/// P(N_t = n) = int [F_{T_n}(t; theta) - F_{T_(n+1)}(t; theta)] mu(dtheta).
///
/// Needs an index-constant family: T_n given theta is then Ga(rate, n shape)
/// (a Poisson(rate t) count for exponential kernels).
inline ExactResult count_pmf(const MrpModel& model, double t, long long n, const QuadratureConfig& cfg = {}) {
  if (!model.is_proper_mrp)
    throw Error(ErrorKind::UnsupportedModel, "count_pmf needs an index-constant kernel family");
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::Domain, "count_pmf: t must be finite and >= 0");
  if (n < 0) throw Error(ErrorKind::Domain, "count_pmf: n must be nonnegative");
  if (t == 0.0) return {n == 0 ? 1.0 : 0.0, 0.0, "exact"};
  const KernelSpec& k = model.kernel;
  auto conditional = [&](const Theta& theta) -> double {
    const double rate = k.rate(1, theta);
    if (k.family == KernelFamily::Exponential) return poisson_pmf(n, rate * t);
    const double shape = k.shape_at(theta);
    const double x = rate * t;
    const double first = n == 0 ? 1.0 : regularized_incomplete_gamma(static_cast<double>(n) * shape, x);
    const double second = regularized_incomplete_gamma(static_cast<double>(n + 1) * shape, x);
    return std::max(0.0, first - second);
  };
  return integrate_over_mixing(model.mixing, conditional, cfg);
}

namespace detail {

// (rho^s / Gamma(s)) int_{(a, b]} w^(s-1) e^(-rho w) dw by quadrature after
// w = v^(1/s), which removes the w^(s-1) endpoint singularity:
//   int_a^b w^(s-1) e^(-rho w) dw = (1/s) int_{a^s}^{b^s} exp(-rho v^(1/s)) dv.
inline quad::Result gamma_cell_mass(double rho, double s, Interval cell, const QuadratureConfig& cfg,
                                    double tol_scale) {
  const double a = std::max(0.0, cell.lo);
  const double b = cell.hi;
  if (!(a < b)) return {};
  const double log_norm = s * std::log(rho) - std::lgamma(s) - std::log(s);
  auto h = [&](double v) { return std::exp(log_norm - rho * std::pow(v, 1.0 / s)); };
  const double va = std::pow(a, s);
  if (std::isinf(b)) return quad::integrate_mapped(h, va, kInf, std::pow(rho, -s), cfg.tolerance(tol_scale));
  return quad::integrate(h, va, std::pow(b, s), cfg.tolerance(tol_scale));
}

}  // namespace detail

/// P(box x E) through the explicit nested integral over parameter space and
/// interarrival cells, with no incomplete-gamma calls. An independent route
/// for cross-checking joint_interarrival_probability.
///
/// Supported configurations:
///  - fixed-shape gamma kernel Ga(b theta, s) with gamma mixing Ga(gamma, alpha):
///      gamma^alpha (b^s)^r / (Gamma(alpha) Gamma(s)^r)
///        int_E [prod_k int_{C_k} w^(s-1) e^(-b theta w) dw] theta^(alpha-1+r s) e^(-gamma theta) dtheta
///    (s = 1/2 gives Gamma(s)^r = pi^(r/2));
///  - gamma kernel Ga(theta_rate, theta_shape) with a two-factor product mixing:
///      int_E (theta_1^theta_2 / Gamma(theta_2))^r [prod_k int_{C_k} w^(theta_2-1) e^(-theta_1 w) dw] mu(dtheta),
///    evaluated as iterated 1-D integrals, shape axis outermost.
inline ExactResult cylinder_probability_density_form(const MrpModel& model, const BoxQuery& query,
                                                     const QuadratureConfig& cfg = {},
                                                     const std::optional<Box>& event = std::nullopt) {
  query.validate();
  cfg.validate();
  const KernelSpec& k = model.kernel;
  if (k.family != KernelFamily::Gamma || !k.is_constant_family())
    throw Error(ErrorKind::UnsupportedModel, "density form needs an index-constant gamma kernel");
  const double b = k.rate_map.intercept;
  const std::size_t r = query.dimension();
  const double inner_scale = 1e-2 / static_cast<double>(r);

  if (const auto* g = model.mixing.as<GammaMixing>(); g && k.shape_param < 0) {
    const double s = k.shape;
    const double alpha = g->shape;
    const double gam = g->rate;
    const double log_pref = alpha * std::log(gam) - std::lgamma(alpha) + static_cast<double>(r) * (s * std::log(b) - std::lgamma(s));
    const double rs = static_cast<double>(r) * s;
    double worst_inner = 0.0;
    bool inner_ok = true;
    // prod_k int_{C_k} w^(s-1) e^(-b theta w) dw, with the normalizer folded back out
    auto integrand = [&](double theta) {
      const double rho = b * theta;
      double prod = 1.0;
      for (std::size_t j = 0; j < r && prod != 0.0; ++j) {
        const quad::Result cell = detail::gamma_cell_mass(rho, s, query.bounds[j], cfg, inner_scale);
        worst_inner = std::max(worst_inner, cell.error);
        inner_ok = inner_ok && cell.converged;
        prod *= cell.value;
      }
      // cell masses carry rho^s / Gamma(s); undo it so the weight below is the displayed one
      const double unnormalized = prod == 0.0 ? 0.0 : std::log(prod) - static_cast<double>(r) * (s * std::log(rho) - std::lgamma(s));
      if (prod == 0.0) return 0.0;
      return std::exp(log_pref + unnormalized + (alpha - 1.0 + rs) * std::log(theta) - gam * theta);
    };
    Interval range = detail::clip({0.0, kInf}, event, 0);
    range.lo = std::max(range.lo, 0.0);
    const double cut = detail::gamma_truncation_point(gam, alpha, cfg.abs_tol * cfg.tail_factor);
    double tail = 0.0;
    if (range.hi > cut) {
      tail = regularized_upper_incomplete_gamma(alpha, gam * std::max(cut, range.lo));
      range.hi = std::max(cut, range.lo);
    }
    quad::Result res;
    if (range.lo < range.hi) res = quad::integrate_mapped(integrand, range.lo, range.hi, alpha / gam, cfg.tolerance());
    res.error += tail + static_cast<double>(r) * worst_inner;
    if (!res.converged || !inner_ok)
      throw AccuracyError("density-form quadrature did not converge", res.value, res.error);
    return {res.value, res.error, "density-form"};
  }

  if (const auto* p = model.mixing.as<ProductMixing>(); p && k.shape_param >= 0 && p->factors.size() == 2) {
    const auto rate_j = static_cast<std::size_t>(k.rate_param);
    const auto shape_j = static_cast<std::size_t>(k.shape_param);
    double worst_cell = 0.0;
    bool ok = true;
    auto conditional = [&](double rate, double shape) {
      const double rho = b * rate;
      double prod = 1.0;
      for (std::size_t j = 0; j < r && prod != 0.0; ++j) {
        const quad::Result cell = detail::gamma_cell_mass(rho, shape, query.bounds[j], cfg, inner_scale * 1e-1);
        worst_cell = std::max(worst_cell, cell.error);
        ok = ok && cell.converged;
        prod *= cell.value;
      }
      return prod;
    };
    double worst_middle = 0.0;
    auto outer = [&](double shape) {
      auto middle = [&](double rate) { return conditional(rate, shape); };
      const quad::Result m =
          detail::integrate_factor(middle, p->factors[rate_j], detail::clip(factor_support(p->factors[rate_j]), event, rate_j),
                                   cfg, 0.1);
      worst_middle = std::max(worst_middle, m.error);
      ok = ok && m.converged;
      return m.value;
    };
    quad::Result res = detail::integrate_factor(
        outer, p->factors[shape_j], detail::clip(factor_support(p->factors[shape_j]), event, shape_j), cfg, 1.0);
    res.error += worst_middle + static_cast<double>(r) * worst_cell;
    if (!res.converged || !ok) throw AccuracyError("density-form quadrature did not converge", res.value, res.error);
    return {res.value, res.error, "density-form-iterated"};
  }

  throw Error(ErrorKind::UnsupportedModel,
              "density form supports a fixed-shape gamma kernel with gamma mixing, or a (rate, shape) gamma kernel "
              "with a two-factor product mixing");
}

}  // namespace mrplab

#endif  // MRPLAB_EXACT_HPP
