#ifndef MRPLAB_KERNELS_HPP
#define MRPLAB_KERNELS_HPP

// Parameterized interarrival kernels Q_n(theta) and mixing measures mu.
//
// Gamma laws use the rate-first convention throughout:
//   Ga(rate, shape) has density rate^shape / Gamma(shape) x^(shape-1) e^(-rate x).
// Many libraries parameterize by scale instead; do not mix the two.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "mrplab/error.hpp"
#include "mrplab/random.hpp"
#include "mrplab/special.hpp"

namespace mrplab {

/// A point of the parameter space, theta in R^d.
using Theta = std::vector<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis-aligned box in parameter space.
using Box = std::vector<Interval>;

enum class KernelFamily { Exponential, Gamma, Poisson };

inline const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Exponential: return "exponential";
    case KernelFamily::Gamma: return "gamma";
    case KernelFamily::Poisson: return "poisson";
  }
  return "?";
}

/// Affine rate multiplier n -> slope * n + intercept. Exp(n theta) is
/// {slope = 1, intercept = 0}; a constant family has slope 0.
struct RateMap {
  double slope = 0.0;
  double intercept = 1.0;

  double at(int index) const { return slope * index + intercept; }
  bool is_constant() const { return slope == 0.0; }
  friend bool operator==(const RateMap&, const RateMap&) = default;
};

/// Kernel family n -> Q_n(theta).
///
/// The rate (Exponential, Gamma) or mean (Poisson) of Q_n(theta) is
/// rate_map(n) * theta[rate_param]. The Gamma shape is either the fixed
/// `shape` or, when `shape_param >= 0`, theta[shape_param].
struct KernelSpec {
  KernelFamily family = KernelFamily::Exponential;
  RateMap rate_map{};
  double shape = 1.0;
  int shape_param = -1;
  int rate_param = 0;

  std::size_t required_dimension() const {
    return static_cast<std::size_t>(std::max(rate_param, shape_param) + 1);
  }
  bool is_constant_family() const { return rate_map.is_constant(); }
  bool has_positive_support() const { return family != KernelFamily::Poisson; }

  void validate() const {
    if (rate_param < 0) throw Error(ErrorKind::Configuration, "kernel rate_param must be nonnegative");
    if (!std::isfinite(rate_map.slope) || !std::isfinite(rate_map.intercept))
      throw Error(ErrorKind::Configuration, "kernel rate_map must be finite");
    // positive for every index n >= 1
    if (rate_map.slope < 0.0 || rate_map.slope + rate_map.intercept <= 0.0)
      throw Error(ErrorKind::Configuration, "kernel rate_map must be positive for every index n >= 1");
    if (family == KernelFamily::Gamma && shape_param < 0 && !(shape > 0.0 && std::isfinite(shape)))
      throw Error(ErrorKind::Configuration, "gamma kernel shape must be positive");
    if (family != KernelFamily::Gamma && shape_param >= 0)
      throw Error(ErrorKind::Configuration, "only gamma kernels take a shape parameter");
  }

  /// Throws a domain error naming the offending component if theta is not
  /// admissible for this kernel.
  void check_admissible(const Theta& theta) const {
    if (theta.size() < required_dimension())
      throw Error(ErrorKind::Domain, "theta has dimension " + std::to_string(theta.size()) +
                                         ", kernel needs " + std::to_string(required_dimension()));
    const double r = theta[static_cast<std::size_t>(rate_param)];
    if (!(r > 0.0) || !std::isfinite(r))
      throw Error(ErrorKind::Domain,
                  "theta[" + std::to_string(rate_param) + "] = " + std::to_string(r) + " is not a positive rate");
    if (shape_param >= 0) {
      const double s = theta[static_cast<std::size_t>(shape_param)];
      if (!(s > 0.0) || !std::isfinite(s))
        throw Error(ErrorKind::Domain,
                    "theta[" + std::to_string(shape_param) + "] = " + std::to_string(s) + " is not a positive shape");
    }
  }

  double rate(int index, const Theta& theta) const {
    return rate_map.at(index) * theta[static_cast<std::size_t>(rate_param)];
  }
  double shape_at(const Theta& theta) const {
    return shape_param >= 0 ? theta[static_cast<std::size_t>(shape_param)] : shape;
  }
};

inline void check_index(int index) {
  if (index < 1) throw Error(ErrorKind::Domain, "kernel index must be a positive integer");
}

/// Q_index(theta)((-inf, x]).
inline double kernel_cdf(const KernelSpec& spec, int index, const Theta& theta, double x) {
  check_index(index);
  spec.check_admissible(theta);
  if (std::isnan(x)) throw Error(ErrorKind::Domain, "kernel_cdf: x is NaN");
  if (x <= 0.0 && spec.has_positive_support()) return 0.0;
  if (x == kInf) return 1.0;
  const double rate = spec.rate(index, theta);
  switch (spec.family) {
    case KernelFamily::Exponential:
      return -std::expm1(-rate * x);
    case KernelFamily::Gamma:
      return regularized_incomplete_gamma(spec.shape_at(theta), rate * x);
    case KernelFamily::Poisson: {
      if (x < 0.0) return 0.0;
      // P(X <= k) = Q(k + 1, mean)
      return regularized_upper_incomplete_gamma(std::floor(x) + 1.0, rate);
    }
  }
  return 0.0;
}

/// Density of Q_index(theta) (continuous families only).
inline double kernel_density(const KernelSpec& spec, int index, const Theta& theta, double x) {
  check_index(index);
  spec.check_admissible(theta);
  const double rate = spec.rate(index, theta);
  switch (spec.family) {
    case KernelFamily::Exponential:
      return x > 0.0 ? rate * std::exp(-rate * x) : 0.0;
    case KernelFamily::Gamma:
      return gamma_density(rate, spec.shape_at(theta), x);
    case KernelFamily::Poisson:
      throw Error(ErrorKind::UnsupportedOperation, "poisson kernel has no density");
  }
  return 0.0;
}

inline double kernel_mean(const KernelSpec& spec, int index, const Theta& theta) {
  check_index(index);
  spec.check_admissible(theta);
  const double rate = spec.rate(index, theta);
  switch (spec.family) {
    case KernelFamily::Exponential: return 1.0 / rate;
    case KernelFamily::Gamma: return spec.shape_at(theta) / rate;
    case KernelFamily::Poisson: return rate;
  }
  return 0.0;
}

namespace detail {

inline double poisson_draw(double mean, Rng& rng) {
  // Sequential inversion; fine for the moderate means used as kernels.
  if (mean > 500.0) {
    // split to keep e^-mean representable
    return poisson_draw(mean / 2.0, rng) + poisson_draw(mean - mean / 2.0, rng);
  }
  double p = std::exp(-mean);
  double cdf = p;
  const double u = rng.uniform();
  double k = 0.0;
  while (u > cdf && p > 0.0) {
    k += 1.0;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

}  // namespace detail

/// One draw from Q_index(theta). Positive-support kernels never return 0: an
/// underflowed draw is redrawn.
inline double kernel_sample(const KernelSpec& spec, int index, const Theta& theta, Rng& rng) {
  check_index(index);
  spec.check_admissible(theta);
  const double rate = spec.rate(index, theta);
  switch (spec.family) {
    case KernelFamily::Exponential:
      return rng.exponential(rate);
    case KernelFamily::Gamma: {
      const double shape = spec.shape_at(theta);
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const double x = rng.gamma(rate, shape);
        if (x > 0.0 && std::isfinite(x)) return x;
      }
      throw Error(ErrorKind::InvalidInterarrival, "gamma kernel draws keep underflowing to 0 (shape too small)");
    }
    case KernelFamily::Poisson:
      return detail::poisson_draw(rate, rng);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Mixing measures

struct DiracMixing {
  Theta atom;
};

/// Ga(rate, shape) on (0, inf), one-dimensional.
struct GammaMixing {
  double rate = 1.0;
  double shape = 1.0;
};

struct UniformFactor {
  double lo = 0.0;
  double hi = 1.0;
};
struct GammaFactor {
  double rate = 1.0;
  double shape = 1.0;
};
/// Beta(a, b) rescaled to (lo, hi).
struct BetaFactor {
  double a = 1.0;
  double b = 1.0;
  double lo = 0.0;
  double hi = 1.0;
};

using Factor = std::variant<UniformFactor, GammaFactor, BetaFactor>;

inline Interval factor_support(const Factor& f) {
  return std::visit(
      [](const auto& g) -> Interval {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, GammaFactor>) return {0.0, kInf};
        else return {g.lo, g.hi};
      },
      f);
}

inline double factor_density(const Factor& f, double x) {
  return std::visit(
      [x](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, UniformFactor>) {
          return (x >= g.lo && x <= g.hi) ? 1.0 / (g.hi - g.lo) : 0.0;
        } else if constexpr (std::is_same_v<T, GammaFactor>) {
          return gamma_density(g.rate, g.shape, x);
        } else {
          if (!(x > g.lo && x < g.hi)) return 0.0;
          const double w = g.hi - g.lo;
          const double u = (x - g.lo) / w;
          return std::exp((g.a - 1.0) * std::log(u) + (g.b - 1.0) * std::log1p(-u) - log_beta(g.a, g.b)) / w;
        }
      },
      f);
}

inline double factor_sample(const Factor& f, Rng& rng) {
  return std::visit(
      [&rng](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, UniformFactor>) return g.lo + (g.hi - g.lo) * rng.uniform();
        else if constexpr (std::is_same_v<T, GammaFactor>) return rng.gamma(g.rate, g.shape);
        else return g.lo + (g.hi - g.lo) * rng.beta(g.a, g.b);
      },
      f);
}

inline double factor_mean(const Factor& f) {
  return std::visit(
      [](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, UniformFactor>) return 0.5 * (g.lo + g.hi);
        else if constexpr (std::is_same_v<T, GammaFactor>) return g.shape / g.rate;
        else return g.lo + (g.hi - g.lo) * g.a / (g.a + g.b);
      },
      f);
}

/// Independent product of one-dimensional densities on intervals.
struct ProductMixing {
  std::vector<Factor> factors;
};

struct DiscreteMixing {
  std::vector<Theta> atoms;
  std::vector<double> weights;
};

/// Probability measure mu on the parameter space.
class MixingMeasure {
 public:
  using Kind = std::variant<DiracMixing, GammaMixing, ProductMixing, DiscreteMixing>;

  MixingMeasure(Kind kind) : kind_(std::move(kind)) { validate(); }  // NOLINT(google-explicit-constructor)

  static MixingMeasure dirac(Theta atom) { return MixingMeasure(DiracMixing{std::move(atom)}); }
  static MixingMeasure dirac(double atom) { return dirac(Theta{atom}); }
  static MixingMeasure gamma(double rate, double shape) { return MixingMeasure(GammaMixing{rate, shape}); }
  static MixingMeasure product(std::vector<Factor> factors) {
    return MixingMeasure(ProductMixing{std::move(factors)});
  }
  static MixingMeasure discrete(std::vector<Theta> atoms, std::vector<double> weights) {
    return MixingMeasure(DiscreteMixing{std::move(atoms), std::move(weights)});
  }

  const Kind& kind() const { return kind_; }
  template <typename T>
  const T* as() const {
    return std::get_if<T>(&kind_);
  }

  bool is_continuous() const { return as<GammaMixing>() != nullptr || as<ProductMixing>() != nullptr; }

  std::size_t dimension() const {
    return std::visit(
        [](const auto& m) -> std::size_t {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiracMixing>) return m.atom.size();
          else if constexpr (std::is_same_v<T, GammaMixing>) return 1;
          else if constexpr (std::is_same_v<T, ProductMixing>) return m.factors.size();
          else return m.atoms.empty() ? 0 : m.atoms.front().size();
        },
        kind_);
  }

  /// Smallest box containing the support.
  Box support() const {
    return std::visit(
        [](const auto& m) -> Box {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiracMixing>) {
            Box box;
            for (double v : m.atom) box.push_back({v, v});
            return box;
          } else if constexpr (std::is_same_v<T, GammaMixing>) {
            return {{0.0, kInf}};
          } else if constexpr (std::is_same_v<T, ProductMixing>) {
            Box box;
            for (const auto& f : m.factors) box.push_back(factor_support(f));
            return box;
          } else {
            Box box(m.atoms.front().size(), Interval{kInf, -kInf});
            for (std::size_t i = 0; i < m.atoms.size(); ++i) {
              if (m.weights[i] == 0.0) continue;
              for (std::size_t j = 0; j < box.size(); ++j) {
                box[j].lo = std::min(box[j].lo, m.atoms[i][j]);
                box[j].hi = std::max(box[j].hi, m.atoms[i][j]);
              }
            }
            return box;
          }
        },
        kind_);
  }

  Theta mean() const {
    return std::visit(
        [](const auto& m) -> Theta {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiracMixing>) {
            return m.atom;
          } else if constexpr (std::is_same_v<T, GammaMixing>) {
            return {m.shape / m.rate};
          } else if constexpr (std::is_same_v<T, ProductMixing>) {
            Theta out;
            for (const auto& f : m.factors) out.push_back(factor_mean(f));
            return out;
          } else {
            Theta out(m.atoms.front().size(), 0.0);
            for (std::size_t i = 0; i < m.atoms.size(); ++i)
              for (std::size_t j = 0; j < out.size(); ++j) out[j] += m.weights[i] * m.atoms[i][j];
            return out;
          }
        },
        kind_);
  }

 private:
  void validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiracMixing>) {
            if (m.atom.empty()) throw Error(ErrorKind::Configuration, "dirac mixing needs a nonempty atom");
            for (double v : m.atom)
              if (!std::isfinite(v)) throw Error(ErrorKind::Configuration, "dirac atom must be finite");
          } else if constexpr (std::is_same_v<T, GammaMixing>) {
            if (!positive(m.rate) || !positive(m.shape))
              throw Error(ErrorKind::Configuration, "gamma mixing needs positive rate and shape");
          } else if constexpr (std::is_same_v<T, ProductMixing>) {
            if (m.factors.empty()) throw Error(ErrorKind::Configuration, "product mixing needs at least one factor");
            for (const auto& f : m.factors) {
              std::visit(
                  [&](const auto& g) {
                    using G = std::decay_t<decltype(g)>;
                    if constexpr (std::is_same_v<G, GammaFactor>) {
                      if (!positive(g.rate) || !positive(g.shape))
                        throw Error(ErrorKind::Configuration, "gamma factor needs positive rate and shape");
                    } else {
                      if (!std::isfinite(g.lo) || !std::isfinite(g.hi) || !(g.lo < g.hi))
                        throw Error(ErrorKind::Configuration, "factor interval must be finite with lo < hi");
                      if constexpr (std::is_same_v<G, BetaFactor>) {
                        if (!positive(g.a) || !positive(g.b))
                          throw Error(ErrorKind::Configuration, "beta factor needs positive a and b");
                      }
                    }
                  },
                  f);
            }
          } else {
            if (m.atoms.empty() || m.atoms.size() != m.weights.size())
              throw Error(ErrorKind::Configuration, "discrete mixing needs matching, nonempty atoms and weights");
            const std::size_t d = m.atoms.front().size();
            if (d == 0) throw Error(ErrorKind::Configuration, "discrete atoms must be nonempty");
            double total = 0.0;
            for (std::size_t i = 0; i < m.atoms.size(); ++i) {
              if (m.atoms[i].size() != d)
                throw Error(ErrorKind::Configuration, "discrete atoms must share one dimension");
              for (double v : m.atoms[i])
                if (!std::isfinite(v)) throw Error(ErrorKind::Configuration, "discrete atoms must be finite");
              if (!(m.weights[i] >= 0.0) || !std::isfinite(m.weights[i]))
                throw Error(ErrorKind::Configuration, "discrete weights must be nonnegative");
              total += m.weights[i];
            }
            if (std::fabs(total - 1.0) > 1e-12)
              throw Error(ErrorKind::Configuration, "discrete weights must sum to 1 (got " + std::to_string(total) + ")");
          }
        },
        kind_);
  }

  Kind kind_;
};

/// Draw theta ~ mu.
inline Theta mixing_sample(const MixingMeasure& mu, Rng& rng) {
  return std::visit(
      [&rng](const auto& m) -> Theta {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiracMixing>) {
          return m.atom;
        } else if constexpr (std::is_same_v<T, GammaMixing>) {
          for (;;) {
            const double v = rng.gamma(m.rate, m.shape);
            if (v > 0.0) return {v};
          }
        } else if constexpr (std::is_same_v<T, ProductMixing>) {
          Theta out;
          out.reserve(m.factors.size());
          for (const auto& f : m.factors) {
            double v = factor_sample(f, rng);
            // continuous factors put no mass on the support endpoints
            while (std::holds_alternative<GammaFactor>(f) && !(v > 0.0)) v = factor_sample(f, rng);
            out.push_back(v);
          }
          return out;
        } else {
          double u = rng.uniform();
          for (std::size_t i = 0; i + 1 < m.atoms.size(); ++i) {
            if (u < m.weights[i]) return m.atoms[i];
            u -= m.weights[i];
          }
          return m.atoms.back();
        }
      },
      mu.kind());
}

/// Lebesgue density of mu at theta (continuous kinds only); 0 off the support.
inline double mixing_density(const MixingMeasure& mu, const Theta& theta) {
  if (theta.size() != mu.dimension())
    throw Error(ErrorKind::Domain, "theta dimension does not match mixing measure");
  if (const auto* g = mu.as<GammaMixing>()) return gamma_density(g->rate, g->shape, theta[0]);
  if (const auto* p = mu.as<ProductMixing>()) {
    double d = 1.0;
    for (std::size_t i = 0; i < p->factors.size() && d > 0.0; ++i) d *= factor_density(p->factors[i], theta[i]);
    return d;
  }
  throw Error(ErrorKind::UnsupportedOperation, "mixing_density: point-mass mixing has no Lebesgue density");
}

}  // namespace mrplab

#endif  // MRPLAB_KERNELS_HPP
