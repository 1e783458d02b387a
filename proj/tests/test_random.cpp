#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "mrplab/random.hpp"

using namespace mrplab;

namespace {
struct Moments {
  double mean = 0.0;
  double var = 0.0;
};
template <typename F>
Moments moments(int n, F draw) {
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  return {m, s2 / n - m * m};
}
}  // namespace

TEST_CASE("same seed, same stream") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.gamma(1.3, 0.4) == b.gamma(1.3, 0.4));
  Rng c(43);
  CHECK(Rng(42).next_u64() != c.next_u64());
}

TEST_CASE("derived seeds are distinct and depend only on root and index") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(7, i));
  CHECK(seen.size() == 10000);
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("uniform stays in the open unit interval") {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("below is unbiased across residues") {
  Rng rng(5);
  int counts[3] = {0, 0, 0};
  const int n = 300000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(3)];
  for (int c : counts) CHECK(std::fabs(c - n / 3.0) < 4.0 * std::sqrt(n * (1.0 / 3) * (2.0 / 3)));
}

TEST_CASE("gamma moments", "[moments]") {
  const int n = 400000;
  for (auto [rate, shape] : {std::pair{1.0, 0.5}, {2.0, 3.0}, {0.5, 0.05}, {4.0, 1.0}}) {
    Rng rng(11);
    const Moments m = moments(n, [&] { return rng.gamma(rate, shape); });
    const double mean = shape / rate;
    const double var = shape / (rate * rate);
    INFO("rate " << rate << " shape " << shape);
    CHECK(std::fabs(m.mean - mean) < 4.0 * std::sqrt(var / n));
    CHECK(std::fabs(m.var - var) / var < 0.05);
  }
}

TEST_CASE("normal and beta moments", "[moments]") {
  const int n = 400000;
  Rng rng(3);
  const Moments z = moments(n, [&] { return rng.normal(); });
  CHECK(std::fabs(z.mean) < 4.0 / std::sqrt(n));
  CHECK(std::fabs(z.var - 1.0) < 0.02);
  const Moments b = moments(n, [&] { return rng.beta(2.0, 5.0); });
  const double var = 2.0 * 5.0 / (49.0 * 8.0);
  CHECK(std::fabs(b.mean - 2.0 / 7.0) < 4.0 * std::sqrt(var / n));
}

TEST_CASE("binomial moments, small and large n", "[moments]") {
  for (auto [n_trials, p] : {std::pair<std::uint64_t, double>{10, 0.3}, {1000000, 0.01}, {5000, 0.5}}) {
    Rng rng(17);
    const int reps = 20000;
    const Moments m = moments(reps, [&] { return static_cast<double>(rng.binomial(n_trials, p)); });
    const double mean = n_trials * p;
    const double var = n_trials * p * (1 - p);
    INFO("n " << n_trials << " p " << p);
    CHECK(std::fabs(m.mean - mean) < 4.0 * std::sqrt(var / reps));
    CHECK(std::fabs(m.var - var) / var < 0.06);
  }
  Rng rng(1);
  CHECK(rng.binomial(100, 0.0) == 0);
  CHECK(rng.binomial(100, 1.0) == 100);
}
