#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mrplab/exact.hpp"
#include "mrplab/kernels.hpp"
#include "mrplab/random.hpp"

using namespace mrplab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
KernelSpec exp_n() {
  KernelSpec k;
  k.rate_map = {1.0, 0.0};
  return k;
}
KernelSpec exp_const() { return KernelSpec{}; }
KernelSpec gamma_fixed(double shape) {
  KernelSpec k;
  k.family = KernelFamily::Gamma;
  k.shape = shape;
  return k;
}
}  // namespace

TEST_CASE("Exp(n theta) cdf at index 2, x = ln2/2 is one half") {
  const KernelSpec k = exp_n();
  const double x = std::numbers::ln2 / 2.0;
  CHECK_THAT(kernel_cdf(k, 2, {1.0}, x), WithinAbs(0.5, 1e-15));

  // empirical cdf over 10^7 draws from the sampler
  Rng rng(2024);
  const int n = 10000000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += kernel_sample(k, 2, {1.0}, rng) <= x;
  const double se = std::sqrt(0.25 / n);
  CHECK(std::fabs(below / double(n) - 0.5) < 4.0 * se);
}

TEST_CASE("cdf boundary values") {
  CHECK(kernel_cdf(exp_const(), 1, {1.0}, 0.0) == 0.0);
  CHECK(kernel_cdf(gamma_fixed(0.5), 3, {1.0}, 0.0) == 0.0);
  CHECK(kernel_cdf(gamma_fixed(0.5), 1, {1.0}, -2.0) == 0.0);
  CHECK(kernel_cdf(gamma_fixed(0.5), 1, {1.0}, kInf) == 1.0);
  CHECK_THAT(kernel_cdf(gamma_fixed(0.5), 1, {1.0}, 1e3), WithinAbs(1.0, 1e-15));
}

TEST_CASE("gamma kernel with shape parameter") {
  KernelSpec k;
  k.family = KernelFamily::Gamma;
  k.shape_param = 1;
  REQUIRE(k.required_dimension() == 2);
  CHECK_THAT(kernel_cdf(k, 1, {2.0, 1.0}, 0.7), WithinAbs(-std::expm1(-1.4), 1e-15));
  CHECK_THAT(kernel_mean(k, 5, {2.0, 0.5}), WithinRel(0.25, 1e-15));
  CHECK_THROWS_AS(kernel_cdf(k, 1, {2.0, -0.5}, 1.0), Error);
  CHECK_THROWS_AS(kernel_cdf(k, 1, {2.0}, 1.0), Error);
}

TEST_CASE("kernel index must be positive") {
  CHECK_THROWS_AS(kernel_cdf(exp_const(), 0, {1.0}, 1.0), Error);
}

TEST_CASE("sampler is deterministic for a seed") {
  Rng a(99);
  Rng b(99);
  CHECK(kernel_sample(exp_const(), 1, {2.0}, a) == kernel_sample(exp_const(), 1, {2.0}, b));
}

TEST_CASE("sample means match kernel means", "[moments]") {
  const int n = 1000000;
  {
    Rng rng(1);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += kernel_sample(exp_const(), 1, {2.0}, rng);
    // sd of Exp(2) is 0.5
    CHECK(std::fabs(s / n - 0.5) < 4.0 * 0.5 / std::sqrt(n));
  }
  {
    Rng rng(2);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += kernel_sample(gamma_fixed(0.5), 1, {1.0}, rng);
    // Ga(1, 1/2): variance 1/2
    CHECK(std::fabs(s / n - 0.5) < 4.0 * std::sqrt(0.5 / n));
  }
}

TEST_CASE("small gamma shapes never produce zero interarrivals") {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) REQUIRE(kernel_sample(gamma_fixed(0.02), 1, {1.0}, rng) > 0.0);
}

TEST_CASE("poisson kernel is a discrete law") {
  KernelSpec k;
  k.family = KernelFamily::Poisson;
  CHECK_THAT(kernel_cdf(k, 1, {2.0}, 0.0), WithinAbs(std::exp(-2.0), 1e-15));
  CHECK_THAT(kernel_cdf(k, 1, {2.0}, 1.5), WithinAbs(3.0 * std::exp(-2.0), 1e-15));
  CHECK_THROWS_AS(kernel_density(k, 1, {2.0}, 1.0), Error);
}

TEST_CASE("mixing samples") {
  Rng rng(4);
  const MixingMeasure dirac = MixingMeasure::dirac(3.0);
  for (int i = 0; i < 10; ++i) CHECK(mixing_sample(dirac, rng) == Theta{3.0});

  const int n = 1000000;
  const MixingMeasure g = MixingMeasure::gamma(2.0, 1.0);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += mixing_sample(g, rng)[0];
  CHECK(std::fabs(s / n - 0.5) < 4.0 * 0.5 / std::sqrt(n));

  const MixingMeasure square = MixingMeasure::product({UniformFactor{0.0, 1.0}, UniformFactor{0.0, 1.0}});
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const Theta t = mixing_sample(square, rng);
    hits += t[0] <= 0.5 && t[1] <= 0.5;
  }
  CHECK(std::fabs(hits / double(n) - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / n));

  const MixingMeasure disc = MixingMeasure::discrete({{1.0}, {2.0}}, {0.25, 0.75});
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += mixing_sample(disc, rng)[0] == 1.0;
  CHECK(std::fabs(ones / double(n) - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("mixing density") {
  const MixingMeasure g = MixingMeasure::gamma(2.0, 1.0);
  CHECK_THAT(mixing_density(g, {0.5}), WithinRel(2.0 * std::exp(-1.0), 1e-14));
  CHECK(mixing_density(g, {-1.0}) == 0.0);
  const MixingMeasure p = MixingMeasure::product({GammaFactor{2.0, 3.0}, UniformFactor{0.2, 0.8}});
  CHECK(mixing_density(p, {1.0, 0.9}) == 0.0);
  CHECK_THAT(mixing_density(p, {1.0, 0.5}), WithinRel(4.0 * std::exp(-2.0) / 0.6, 1e-14));
  CHECK_THROWS_AS(mixing_density(MixingMeasure::dirac(1.0), {1.0}), Error);

  const ExactResult mass = mixing_total_mass(g);
  CHECK_THAT(mass.probability, WithinAbs(1.0, 1e-8));
  CHECK_THAT(mixing_total_mass(p).probability, WithinAbs(1.0, 1e-8));
}

TEST_CASE("mixing validation") {
  CHECK_THROWS_AS(MixingMeasure::gamma(-1.0, 1.0), Error);
  CHECK_THROWS_AS(MixingMeasure::product({UniformFactor{1.0, 0.0}}), Error);
  CHECK_THROWS_AS(MixingMeasure::discrete({{1.0}, {2.0}}, {0.5, 0.6}), Error);
  CHECK_THROWS_AS(MixingMeasure::dirac(Theta{}), Error);
  CHECK(MixingMeasure::product({GammaFactor{2.0, 3.0}, UniformFactor{0.2, 0.8}}).dimension() == 2);
}
