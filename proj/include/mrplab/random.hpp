#ifndef MRPLAB_RANDOM_HPP
#define MRPLAB_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mrplab {

/// splitmix64 finalizer. Used both as a 64-bit mixing function for seed
/// derivation and to expand user seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child seed for stream `index` under `root`:
///   mix64(root + (index + 1) * 0x9E3779B97F4A7C15).
/// A pure function of (root, index), so ensembles do not depend on how paths
/// are scheduled across threads.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return mix64(root + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Seeded generator. Every variate is built from the mt19937_64 stream with
/// our own transforms (std:: distributions are implementation-defined), so a
/// seed reproduces the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's nearly-divisionless method.
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Inverse-CDF exponential draw with the given rate.
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Rate-first gamma draw, Marsaglia-Tsang squeeze. Shapes below one use the
  /// boost Gamma(shape) = Gamma(shape + 1) * U^(1/shape), done in log space.
  double gamma(double rate, double shape) {
    if (shape < 1.0) {
      const double g = standard_gamma_ge1(shape + 1.0);
      return std::exp(std::log(g) + std::log(uniform()) / shape) / rate;
    }
    return standard_gamma_ge1(shape) / rate;
  }

  double beta(double a, double b) {
    const double x = gamma(1.0, a);
    const double y = gamma(1.0, b);
    return x / (x + y);
  }

  /// Binomial(n, p), exact, via the beta splitting recursion (Knuth, TAOCP
  /// 3.4.1). Cost is logarithmic in n.
  std::uint64_t binomial(std::uint64_t n, double p) {
    std::uint64_t offset = 0;
    while (n > 32) {
      if (p <= 0.0) return offset;
      if (p >= 1.0) return offset + n;
      const std::uint64_t a = 1 + n / 2;
      const std::uint64_t b = n + 1 - a;
      const double x = beta(static_cast<double>(a), static_cast<double>(b));
      if (x >= p) {
        n = a - 1;
        p = p / x;
      } else {
        offset += a;
        n = b - 1;
        p = (p - x) / (1.0 - x);
      }
    }
    std::uint64_t count = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      if (uniform() < p) ++count;
    }
    return offset + count;
  }

 private:
  double standard_gamma_ge1(double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::mt19937_64 engine_;
};

}  // namespace mrplab

#endif  // MRPLAB_RANDOM_HPP
