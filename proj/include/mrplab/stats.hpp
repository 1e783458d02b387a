#ifndef MRPLAB_STATS_HPP
#define MRPLAB_STATS_HPP

// Statistical checks on simulated paths: exchangeability of the interarrival
// sequence, conditional i.i.d. structure given theta, Monte Carlo versus exact
// box probabilities, and the mixed Poisson count law.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrplab/construction.hpp"
#include "mrplab/error.hpp"
#include "mrplab/exact.hpp"
#include "mrplab/random.hpp"
#include "mrplab/report.hpp"
#include "mrplab/special.hpp"

namespace mrplab {

inline constexpr const char* kStandardBorelCaveat =
    "parameter and path spaces are standard Borel, so exchangeability, conditional i.i.d. and the mixture "
    "representation are treated as equivalent";

// ---------------------------------------------------------------------------
// Classical test statistics

/// Kolmogorov limiting survival function Q_KS(lambda) = P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // small-lambda (Jacobi theta) form: P(K <= lambda)
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double odd = 2.0 * j - 1.0;
      cdf += std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Stephens' finite-sample scaling of the KS distance.
inline double ks_lambda(double effective_n, double distance) {
  const double root = std::sqrt(effective_n);
  return (root + 0.12 + 0.11 / root) * distance;
}

/// Smallest distance rejected at `alpha` for an n-sample one-sample KS test.
inline double ks_critical_value(std::size_t n, double alpha) {
  double lo = 0.0;
  double hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_survival(mid) > alpha ? lo : hi) = mid;
  }
  const double root = std::sqrt(static_cast<double>(n));
  return hi / (root + 0.12 + 0.11 / root);
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
};

/// One-sample KS distance sup_x |F_n(x) - F(x)| and asymptotic p-value.
inline TestResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error(ErrorKind::InsufficientData, "KS test on an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, kolmogorov_survival(ks_lambda(n, d)), 0.0};
}

inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InsufficientData, "KS test on an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, kolmogorov_survival(ks_lambda(na * nb / (na + nb), d)), 0.0};
}

inline double chi_square_survival(double statistic, double df) {
  if (df <= 0.0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return regularized_upper_incomplete_gamma(0.5 * df, 0.5 * statistic);
}

namespace detail {

// Merge adjacent cells (right to left, then the leftmost leftovers) until
// every cell has expected count >= min_expected.
inline std::vector<std::size_t> pool_cells(std::span<const double> expected, double min_expected) {
  std::vector<std::size_t> group(expected.size());
  std::size_t current = 0;
  double acc = 0.0;
  bool open = false;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    group[i] = current;
    acc += expected[i];
    open = true;
    if (acc >= min_expected) {
      acc = 0.0;
      open = false;
      ++current;
    }
  }
  if (open && current > 0) {
    // short tail joins the previous group
    for (auto& g : group)
      if (g == current) g = current - 1;
  }
  return group;
}

}  // namespace detail

/// Pearson goodness of fit of observed counts to cell probabilities (which
/// should sum to 1). Cells with expected count < 5 are pooled.
inline TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probabilities) {
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  std::vector<double> expected(probabilities.size());
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = n * probabilities[i];
  const auto group = detail::pool_cells(expected, 5.0);
  const std::size_t groups = group.empty() ? 0 : group.back() + 1;
  std::vector<double> o(groups, 0.0);
  std::vector<double> e(groups, 0.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    o[group[i]] += observed[i];
    e[group[i]] += expected[i];
  }
  double stat = 0.0;
  for (std::size_t g = 0; g < groups; ++g)
    if (e[g] > 0.0) stat += (o[g] - e[g]) * (o[g] - e[g]) / e[g];
  const double df = groups > 1 ? static_cast<double>(groups - 1) : 0.0;
  return {stat, chi_square_survival(stat, df), df};
}

/// Pearson test of independence on a contingency table (rows x cols).
inline TestResult chi_square_independence(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  const std::size_t cols = rows ? table.front().size() : 0;
  std::vector<double> rs(rows, 0.0);
  std::vector<double> cs(cols, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      rs[i] += table[i][j];
      cs[j] += table[i][j];
      n += table[i][j];
    }
  double stat = 0.0;
  std::size_t live_rows = 0;
  std::size_t live_cols = 0;
  for (double v : rs) live_rows += v > 0.0;
  for (double v : cs) live_cols += v > 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = rs[i] * cs[j] / n;
      if (e > 0.0) stat += (table[i][j] - e) * (table[i][j] - e) / e;
    }
  const double df = live_rows > 1 && live_cols > 1 ? static_cast<double>((live_rows - 1) * (live_cols - 1)) : 0.0;
  return {stat, chi_square_survival(stat, df), df};
}

/// Two-sample chi-square homogeneity test on integer-valued samples.
inline TestResult chi_square_two_sample(std::span<const long long> a, std::span<const long long> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InsufficientData, "two-sample chi-square on an empty sample");
  std::map<long long, std::pair<double, double>> counts;
  for (long long v : a) counts[v].first += 1.0;
  for (long long v : b) counts[v].second += 1.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  // pool on the smaller expected count of the two rows
  std::vector<double> min_expected;
  std::vector<std::pair<double, double>> cells;
  for (const auto& [v, c] : counts) {
    const double total = c.first + c.second;
    min_expected.push_back(total * std::min(na, nb) / n);
    cells.push_back(c);
  }
  const auto group = detail::pool_cells(min_expected, 5.0);
  const std::size_t groups = group.empty() ? 0 : group.back() + 1;
  std::vector<std::vector<double>> table(2, std::vector<double>(groups, 0.0));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    table[0][group[i]] += cells[i].first;
    table[1][group[i]] += cells[i].second;
  }
  return chi_square_independence(table);
}

// ---------------------------------------------------------------------------
// Exchangeability

struct ExchangeabilityOptions {
  std::size_t prefix_length = 2;
  std::size_t resamples = 199;
  /// Thresholds probed in addition to the pooled quartiles. When unset and
  /// the prefix has length 2, {1, 2} is used so boxes (2,1) and (1,2) are
  /// always on the grid.
  std::optional<std::vector<double>> extra_thresholds;
  double level = 0.01;
  std::uint64_t seed = 1;
  std::size_t sampled_permutations = 64;  // used when r! > 720
};

namespace detail {

inline std::vector<std::vector<std::size_t>> permutation_set(std::size_t r, std::size_t sampled, Rng& rng) {
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> p(r);
  std::iota(p.begin(), p.end(), 0);
  std::size_t factorial = 1;
  for (std::size_t i = 2; i <= r && factorial <= 720; ++i) factorial *= i;
  if (factorial <= 720) {
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return perms;
  }
  perms.push_back(p);
  while (perms.size() < sampled) {
    for (std::size_t i = r; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    perms.push_back(p);
  }
  return perms;
}

// Grid of empirical joint CDF values on thresholds^r built from per-cell counts.
struct EcdfGrid {
  std::size_t r;
  std::size_t bins;  // thresholds + 1
  std::vector<std::size_t> stride;

  std::size_t cells() const { return stride.back() * bins; }

  // In place: counts per cell -> counts of {bin_k <= g_k for all k}.
  void cumulate(std::vector<double>& v) const {
    for (std::size_t axis = 0; axis < r; ++axis) {
      const std::size_t s = stride[axis];
      for (std::size_t c = 0; c < v.size(); ++c)
        if ((c / s) % bins != 0) v[c] += v[c - s];
    }
  }

  // max over grid points (indices < bins - 1) and permutations of |F(g) - F(pi g)|
  double statistic(const std::vector<double>& cum, const std::vector<std::vector<std::size_t>>& perms,
                   double n) const {
    double best = 0.0;
    std::vector<std::size_t> g(r, 0);
    const std::size_t points = [&] {
      std::size_t t = 1;
      for (std::size_t i = 0; i < r; ++i) t *= bins - 1;
      return t;
    }();
    for (std::size_t idx = 0; idx < points; ++idx) {
      std::size_t rem = idx;
      std::size_t cell = 0;
      for (std::size_t k = 0; k < r; ++k) {
        g[k] = rem % (bins - 1);
        rem /= (bins - 1);
        cell += g[k] * stride[k];
      }
      const double f = cum[cell];
      for (const auto& p : perms) {
        std::size_t other = 0;
        for (std::size_t k = 0; k < r; ++k) other += g[p[k]] * stride[k];
        best = std::max(best, std::fabs(f - cum[other]));
      }
    }
    return best / n;
  }
};

}  // namespace detail

/// Permutation test of H0: (W_1, ..., W_r) is exchangeable.
///
/// Statistic: D = max over probe points w on the grid thresholds^r and over
/// permutations pi of |F_n(w) - F_n(w o pi)|, F_n the empirical joint CDF.
/// Thresholds are the pooled quartiles of all r coordinates (invariant under
/// reordering within a path) plus optional fixed values. The null law is
/// obtained by independently permuting each path's r coordinates; paths
/// sharing a multiset of grid cells are permuted jointly through a
/// multinomial draw, which has the same distribution as shuffling them one
/// by one. p = (1 + #{D* >= D}) / (1 + resamples).
inline VerificationReport exchangeability_test(const Ensemble& ensemble, const ExchangeabilityOptions& opt) {
  const std::size_t r = opt.prefix_length;
  if (r < 2) throw Error(ErrorKind::DegenerateTest, "exchangeability needs a prefix of at least two interarrivals");
  if (ensemble.n_events() < r)
    throw Error(ErrorKind::Configuration, "ensemble paths are shorter than the requested prefix");
  const std::size_t n = ensemble.size();

  std::vector<double> pooled;
  pooled.reserve(n * r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k) pooled.push_back(ensemble.interarrival(i, k));
  std::vector<double> thresholds;
  for (double q : {0.25, 0.5, 0.75}) {
    const auto pos = static_cast<std::size_t>(q * static_cast<double>(pooled.size() - 1));
    std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(pos), pooled.end());
    thresholds.push_back(pooled[pos]);
  }
  std::vector<double> extras = opt.extra_thresholds.value_or(r == 2 ? std::vector<double>{1.0, 2.0} : std::vector<double>{});
  thresholds.insert(thresholds.end(), extras.begin(), extras.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  detail::EcdfGrid grid{r, thresholds.size() + 1, std::vector<std::size_t>(r)};
  {
    std::size_t s = 1;
    for (std::size_t k = 0; k < r; ++k) {
      grid.stride[k] = s;
      if (s > (std::size_t{1} << 22) / grid.bins)
        throw Error(ErrorKind::Configuration, "exchangeability grid too large; shorten the prefix or the thresholds");
      s *= grid.bins;
    }
  }

  Rng rng(opt.seed);
  const auto perms = detail::permutation_set(r, opt.sampled_permutations, rng);

  // bin tuple per path, grouped by its sorted multiset
  std::map<std::vector<std::size_t>, std::uint64_t> classes;
  std::vector<double> counts(grid.cells(), 0.0);
  std::vector<std::size_t> tuple(r);
  std::vector<std::vector<std::size_t>> per_path;  // only used when r! > 720
  const bool multinomial = perms.size() <= 720 && [&] {
    std::size_t f = 1;
    for (std::size_t i = 2; i <= r; ++i) f *= i;
    return f == perms.size();
  }();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cell = 0;
    for (std::size_t k = 0; k < r; ++k) {
      const double w = ensemble.interarrival(i, k);
      tuple[k] = static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), w) - thresholds.begin());
      cell += tuple[k] * grid.stride[k];
    }
    counts[cell] += 1.0;
    if (multinomial) {
      auto key = tuple;
      std::sort(key.begin(), key.end());
      ++classes[key];
    } else {
      per_path.push_back(tuple);
    }
  }
  grid.cumulate(counts);
  const double observed = grid.statistic(counts, perms, static_cast<double>(n));

  std::vector<std::vector<std::size_t>> all_orders;
  if (multinomial) {
    std::vector<std::size_t> p(r);
    std::iota(p.begin(), p.end(), 0);
    do all_orders.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
  }

  std::size_t exceed = 0;
  std::vector<double> resampled(grid.cells());
  for (std::size_t b = 0; b < opt.resamples; ++b) {
    std::fill(resampled.begin(), resampled.end(), 0.0);
    if (multinomial) {
      for (const auto& [key, count] : classes) {
        std::uint64_t remaining = count;
        for (std::size_t j = 0; j < all_orders.size() && remaining > 0; ++j) {
          const std::uint64_t take =
              j + 1 == all_orders.size()
                  ? remaining
                  : rng.binomial(remaining, 1.0 / static_cast<double>(all_orders.size() - j));
          if (take == 0) continue;
          std::size_t cell = 0;
          for (std::size_t k = 0; k < r; ++k) cell += key[all_orders[j][k]] * grid.stride[k];
          resampled[cell] += static_cast<double>(take);
          remaining -= take;
        }
      }
    } else {
      for (auto t : per_path) {
        for (std::size_t i = r; i > 1; --i) std::swap(t[i - 1], t[rng.below(i)]);
        std::size_t cell = 0;
        for (std::size_t k = 0; k < r; ++k) cell += t[k] * grid.stride[k];
        resampled[cell] += 1.0;
      }
    }
    grid.cumulate(resampled);
    const double stat = grid.statistic(resampled, perms, static_cast<double>(n));
    if (stat >= observed - 1e-12) ++exceed;
  }

  VerificationReport report;
  report.check = "exchangeability";
  report.rule = DecisionRule::PValueAtLeastLevel;
  report.statistic = observed;
  report.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(opt.resamples));
  report.level = opt.level;
  report.seeds = {ensemble.root_seed(), opt.seed};
  report.sizes = {{"paths", n}, {"prefix_length", r}, {"resamples", opt.resamples},
                  {"thresholds", thresholds.size()}, {"permutations", perms.size()}};
  report.caveats.push_back(kStandardBorelCaveat);
  return report.finalize();
}

// ---------------------------------------------------------------------------
// Conditional i.i.d. given theta

struct ConditionalIidOptions {
  std::size_t n_samples = 2000;
  std::size_t max_index = 4;
  double level = 0.01;
  std::uint64_t seed = 1;
  std::size_t min_samples = 100;
};

/// Under P_theta: per-index one-sample KS of W_k against K(theta) = Q_1(theta),
/// and pairwise independence by chi-square on a 5 x 5 grid of empirical
/// quintiles. Every sub-test is held to level / (number of sub-tests).
inline VerificationReport conditional_iid_test(const MrpModel& model, const Theta& theta,
                                               const ConditionalIidOptions& opt) {
  if (opt.n_samples < opt.min_samples)
    throw Error(ErrorKind::InsufficientData, "conditional_iid_test needs at least " + std::to_string(opt.min_samples) +
                                                 " samples, got " + std::to_string(opt.n_samples));
  if (opt.max_index < 1) throw Error(ErrorKind::Configuration, "max_index must be at least 1");
  const std::size_t m = opt.max_index;
  std::vector<std::vector<double>> columns(m, std::vector<double>(opt.n_samples));
  for (std::size_t i = 0; i < opt.n_samples; ++i) {
    Rng rng(derive_seed(opt.seed, i));
    const MrpPath p = sample_conditional_path(model, theta, m, rng);
    for (std::size_t k = 0; k < m; ++k) columns[k][i] = p.interarrivals[k];
  }
  const std::size_t tests = m + m * (m - 1) / 2;
  const double sub_level = opt.level / static_cast<double>(tests);

  VerificationReport report;
  report.check = "conditional-iid";
  report.rule = DecisionRule::AllChildren;
  report.level = opt.level;
  report.seeds = {opt.seed};
  report.sizes = {{"samples", opt.n_samples}, {"max_index", m}, {"subtests", tests}};
  report.caveats.push_back("Bonferroni: each sub-test at level/" + std::to_string(tests));
  report.caveats.push_back(kStandardBorelCaveat);

  double min_p = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    const TestResult ks =
        ks_one_sample(columns[k], [&](double x) { return kernel_cdf(model.kernel, 1, theta, x); });
    VerificationReport c;
    c.check = "ks:W" + std::to_string(k + 1) + "~K(theta)";
    c.rule = DecisionRule::PValueAtLeastLevel;
    c.statistic = ks.statistic;
    c.p_value = ks.p_value;
    c.level = sub_level;
    report.children.push_back(c.finalize());
    min_p = std::min(min_p, ks.p_value);
  }

  std::vector<std::vector<std::size_t>> quintile(m, std::vector<std::size_t>(opt.n_samples));
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> sorted = columns[k];
    std::sort(sorted.begin(), sorted.end());
    std::array<double, 4> cuts{};
    for (std::size_t q = 0; q < 4; ++q)
      cuts[q] = sorted[(q + 1) * (opt.n_samples - 1) / 5];
    for (std::size_t i = 0; i < opt.n_samples; ++i)
      quintile[k][i] = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), columns[k][i]) - cuts.begin());
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      std::vector<std::vector<double>> table(5, std::vector<double>(5, 0.0));
      for (std::size_t i = 0; i < opt.n_samples; ++i) table[quintile[a][i]][quintile[b][i]] += 1.0;
      const TestResult chi = chi_square_independence(table);
      VerificationReport c;
      c.check = "independence:W" + std::to_string(a + 1) + ",W" + std::to_string(b + 1);
      c.rule = DecisionRule::PValueAtLeastLevel;
      c.statistic = chi.statistic;
      c.p_value = chi.p_value;
      c.level = sub_level;
      report.children.push_back(c.finalize());
      min_p = std::min(min_p, chi.p_value);
    }
  }
  report.statistic = min_p;
  report.p_value = std::min(1.0, min_p * static_cast<double>(tests));
  return report.finalize();
}

// ---------------------------------------------------------------------------
// Monte Carlo against exact values

/// Fraction of ensemble paths whose first r interarrivals fall in the box.
inline double empirical_box_frequency(const Ensemble& ensemble, const BoxQuery& query) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    bool in = true;
    for (std::size_t k = 0; k < query.bounds.size() && in; ++k) {
      const double w = ensemble.interarrival(i, k);
      in = w > query.bounds[k].lo && w <= query.bounds[k].hi;
    }
    hits += in;
  }
  return static_cast<double>(hits) / static_cast<double>(ensemble.size());
}

/// Per query: pass iff |frequency - exact| <= 4 SE + (exact error estimate),
/// SE = sqrt(p (1 - p) / n) at the exact p.
inline VerificationReport mc_vs_exact(const Ensemble& ensemble, std::span<const BoxQuery> queries,
                                      std::span<const ExactResult> exact) {
  if (queries.size() != exact.size()) throw Error(ErrorKind::Configuration, "one exact value per query is required");
  VerificationReport report;
  report.check = "mc-vs-exact";
  report.rule = DecisionRule::AllChildren;
  report.seeds = {ensemble.root_seed()};
  report.sizes = {{"paths", ensemble.size()}, {"queries", queries.size()}};
  report.caveats.push_back("each query is held to 4 standard errors without multiplicity correction");
  const double n = static_cast<double>(ensemble.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (queries[q].dimension() > ensemble.n_events())
      throw Error(ErrorKind::Configuration, "query " + std::to_string(q) + " is longer than the simulated paths");
    const double p = std::clamp(exact[q].probability, 0.0, 1.0);
    const double freq = empirical_box_frequency(ensemble, queries[q]);
    VerificationReport c;
    c.check = "box#" + std::to_string(q);
    c.rule = DecisionRule::StatisticAtMostThreshold;
    c.statistic = std::fabs(freq - p);
    c.reference = p;
    c.threshold = 4.0 * std::sqrt(p * (1.0 - p) / n) + exact[q].error_estimate;
    c.caveats.push_back("empirical frequency " + std::to_string(freq));
    report.children.push_back(c.finalize());
  }
  return report.finalize();
}

// ---------------------------------------------------------------------------
// Mixed Poisson

struct MixedPoissonOptions {
  std::vector<double> t_grid{0.5, 1.0, 2.0, 5.0};
  double h = 1.0;
  std::size_t n_paths = 100000;
  double level = 0.01;
  std::uint64_t seed = 1;
  std::uint64_t max_events_per_path = 10'000'000;
};

namespace detail {

// N at each of `times` (sorted) for one path simulated past times.back().
inline void count_path(const MrpModel& model, std::span<const double> times, Rng& rng, std::uint64_t cap,
                       std::span<long long> out) {
  const Theta theta = mixing_sample(model.mixing, rng);
  double t = 0.0;
  long long n = 0;
  std::size_t next = 0;
  while (next < times.size()) {
    const double w = kernel_sample(model.kernel, static_cast<int>(n + 1), theta, rng);
    const double arrival = t + w;
    while (next < times.size() && times[next] < arrival) out[next++] = n;
    t = arrival;
    if (next < times.size() && ++n > static_cast<long long>(cap))
      throw Error(ErrorKind::Capacity, "path exceeded the per-path event cap before the horizon");
  }
}

}  // namespace detail

/// (a) N_t against the exact count law for each t (chi-square, plus the
/// P(N_t = 0) 4-SE check); (b) stationary increments: N_(t+h) - N_t from the
/// first half of the paths against N_h from the second half (two-sample
/// chi-square). p-value sub-tests are Bonferroni-corrected.
inline VerificationReport mixed_poisson_check(const MrpModel& model, const MixedPoissonOptions& opt,
                                              const QuadratureConfig& cfg = {}) {
  if (model.kernel.family != KernelFamily::Exponential || !model.is_proper_mrp)
    throw Error(ErrorKind::UnsupportedModel, "mixed_poisson_check needs an index-constant exponential kernel");
  if (opt.n_paths < 2) throw Error(ErrorKind::InsufficientData, "mixed_poisson_check needs at least two paths");
  for (double t : opt.t_grid)
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::Domain, "t_grid values must be finite and >= 0");
  if (!(opt.h > 0.0)) throw Error(ErrorKind::Domain, "increment length h must be positive");

  std::vector<double> times(opt.t_grid.begin(), opt.t_grid.end());
  for (double t : opt.t_grid) times.push_back(t + opt.h);
  times.push_back(opt.h);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  auto slot = [&](double t) {
    return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
  };

  std::vector<long long> counts(opt.n_paths * times.size());
  for (std::size_t i = 0; i < opt.n_paths; ++i) {
    Rng rng(derive_seed(opt.seed, i));
    detail::count_path(model, times, rng, opt.max_events_per_path,
                       std::span<long long>(counts.data() + i * times.size(), times.size()));
  }
  auto at = [&](std::size_t path, double t) { return counts[path * times.size() + slot(t)]; };

  std::size_t p_tests = 0;
  for (double t : opt.t_grid) p_tests += t > 0.0 ? 2 : 0;
  const double sub_level = opt.level / static_cast<double>(std::max<std::size_t>(p_tests, 1));
  const double n = static_cast<double>(opt.n_paths);

  VerificationReport report;
  report.check = "mixed-poisson";
  report.rule = DecisionRule::AllChildren;
  report.level = opt.level;
  report.seeds = {opt.seed};
  report.sizes = {{"paths", opt.n_paths}, {"times", opt.t_grid.size()}, {"p_value_subtests", p_tests}};
  report.caveats.push_back("Bonferroni: each chi-square sub-test at level/" + std::to_string(std::max<std::size_t>(p_tests, 1)));

  for (double t : opt.t_grid) {
    char tagbuf[48];
    std::snprintf(tagbuf, sizeof tagbuf, "t=%g", t);
    const std::string tag = tagbuf;
    if (t == 0.0) {
      std::size_t nonzero = 0;
      for (std::size_t i = 0; i < opt.n_paths; ++i) nonzero += at(i, 0.0) != 0;
      VerificationReport c;
      c.check = "N0=0";
      c.rule = DecisionRule::StatisticAtMostThreshold;
      c.statistic = static_cast<double>(nonzero);
      c.threshold = 0.0;
      report.children.push_back(c.finalize());
      continue;
    }
    long long max_seen = 0;
    for (std::size_t i = 0; i < opt.n_paths; ++i) max_seen = std::max(max_seen, at(i, t));
    std::vector<double> observed(static_cast<std::size_t>(max_seen) + 2, 0.0);
    for (std::size_t i = 0; i < opt.n_paths; ++i) observed[static_cast<std::size_t>(at(i, t))] += 1.0;
    std::vector<double> probs(observed.size(), 0.0);
    double cum = 0.0;
    double worst_err = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
      const ExactResult e = count_pmf(model, t, static_cast<long long>(k), cfg);
      probs[k] = e.probability;
      worst_err = std::max(worst_err, e.error_estimate);
      cum += e.probability;
    }
    probs.back() = std::max(0.0, 1.0 - cum);  // everything above the observed maximum

    const double p0 = probs[0];
    VerificationReport zero;
    zero.check = "P(N_t=0)@" + tag;
    zero.rule = DecisionRule::StatisticAtMostThreshold;
    zero.statistic = std::fabs(observed[0] / n - p0);
    zero.reference = p0;
    zero.threshold = 4.0 * std::sqrt(p0 * (1.0 - p0) / n) + worst_err;
    report.children.push_back(zero.finalize());

    const TestResult gof = chi_square_gof(observed, probs);
    VerificationReport c;
    c.check = "pmf@" + tag;
    c.rule = DecisionRule::PValueAtLeastLevel;
    c.statistic = gof.statistic;
    c.p_value = gof.p_value;
    c.level = sub_level;
    c.sizes = {{"df", static_cast<std::uint64_t>(gof.df)}};
    report.children.push_back(c.finalize());

    const std::size_t half = opt.n_paths / 2;
    std::vector<long long> increments;
    std::vector<long long> base;
    for (std::size_t i = 0; i < half; ++i) increments.push_back(at(i, t + opt.h) - at(i, t));
    for (std::size_t i = half; i < opt.n_paths; ++i) base.push_back(at(i, opt.h));
    const TestResult two = chi_square_two_sample(increments, base);
    VerificationReport s;
    s.check = "stationary-increment@" + tag;
    s.rule = DecisionRule::PValueAtLeastLevel;
    s.statistic = two.statistic;
    s.p_value = two.p_value;
    s.level = sub_level;
    report.children.push_back(s.finalize());
  }
  return report.finalize();
}

}  // namespace mrplab

#endif  // MRPLAB_STATS_HPP
