// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mrplab/cli.hpp"
#include "mrplab/construction.hpp"
#include "mrplab/counting.hpp"
#include "mrplab/exact.hpp"
#include "mrplab/model_io.hpp"
#include "mrplab/stats.hpp"
#include "oracles.hpp"

using namespace mrplab;
namespace fs = std::filesystem;

namespace {

const std::string kSource = MRPLAB_SOURCE_DIR;

struct Outcome {
  bool passed;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ModelFile bundled(const std::string& name) { return load_model_file(kSource + "/models/" + name); }

double se(double p, double n) { return std::sqrt(p * (1 - p) / n); }

// ---------------------------------------------------------------------------

Outcome c1_exact_route() {
  const fs::path out = fs::temp_directory_path() / "mrplab_acceptance_c1.csv";
  cli::ExactOptions opt;
  opt.model_path = kSource + "/models/example16.json";
  opt.queries_path = kSource + "/queries/example16_boxes.json";
  opt.out_path = out.string();
  std::ostringstream err;
  const auto start = std::chrono::steady_clock::now();
  const int code = cli::cmd_exact(opt, err);
  const double elapsed = seconds_since(start);
  if (code != 0) return {false, "cmd_exact exit " + std::to_string(code) + ": " + err.str()};
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  std::vector<double> p;
  while (std::getline(in, line)) {
    // ids are quoted and contain commas; the probability is the third-from-last field
    const auto last = line.rfind(',');
    const auto mid = line.rfind(',', last - 1);
    const auto first = line.rfind(',', mid - 1);
    p.push_back(std::stod(line.substr(first + 1, mid - first - 1)));
  }
  fs::remove(out);
  if (p.size() < 2) return {false, "results file has fewer than two rows"};
  const double d13 = std::fabs(p[0] - 1.0 / 3.0);
  const double d27 = std::fabs(p[1] - 2.0 / 7.0);
  const double c13 = std::fabs(p[0] - example16_closed_form(2, 1));
  const double c27 = std::fabs(p[1] - example16_closed_form(1, 2));
  const bool ok = d13 <= 1e-9 && d27 <= 1e-9 && c13 <= 1e-8 && c27 <= 1e-8 && elapsed < 1.0;
  return {ok, fmt("P(W1<=2,W2<=1)=%.15f P(W1<=1,W2<=2)=%.15f", p[0], p[1]) +
                  fmt(" |err| vs 1/3, 2/7 = %.1e, %.1e;", d13, d27) + fmt(" runtime %.3fs", elapsed)};
}

Outcome c2_monte_carlo_route() {
  const MrpModel m = bundled("example16.json").model;
  const std::size_t n = 1000000;
  const auto start = std::chrono::steady_clock::now();
  const Ensemble e = simulate_ensemble(m, n, 2, 20240611, 1);
  const double f21 = empirical_box_frequency(e, BoxQuery::upper({2, 1}));
  const double f12 = empirical_box_frequency(e, BoxQuery::upper({1, 2}));
  const double elapsed = seconds_since(start);
  const double z21 = (f21 - 1.0 / 3.0) / se(1.0 / 3.0, n);
  const double z12 = (f12 - 2.0 / 7.0) / se(2.0 / 7.0, n);
  const bool ok = std::fabs(z21) <= 4.0 && std::fabs(z12) <= 4.0 && elapsed < 120.0;
  return {ok, fmt("freq(2,1)=%.5f (z=%.2f) freq(1,2)=%.5f (z=%.2f);", f21, z21, f12, z12) +
                  fmt(" 1e6 paths in %.1fs single-threaded", elapsed)};
}

Outcome c3_exchangeability_dichotomy() {
  const int runs = 200;
  const std::size_t paths = 100000;
  struct Case {
    const char* file;
    std::size_t r;
    bool expect_reject;
  };
  const Case cases[] = {{"gamma_half.json", 3, false}, {"bivariate.json", 3, false}, {"example16.json", 2, true}};
  std::string detail;
  bool ok = true;
  const auto start = std::chrono::steady_clock::now();
  std::uint64_t stream = 0;
  for (const Case& c : cases) {
    const MrpModel m = bundled(c.file).model;
    int rejections = 0;
    for (int s = 0; s < runs; ++s, ++stream) {
      const Ensemble e = simulate_ensemble(m, paths, c.r, derive_seed(3003, 2 * stream));
      ExchangeabilityOptions opt;
      opt.prefix_length = c.r;
      opt.level = 0.01;
      opt.seed = derive_seed(3003, 2 * stream + 1);
      rejections += !exchangeability_test(e, opt).passed;
    }
    const bool case_ok = c.expect_reject ? rejections >= 199 : runs - rejections >= 195;
    ok = ok && case_ok;
    detail += std::string(c.file) + (c.expect_reject ? " rejected " : " not rejected ") +
              std::to_string(c.expect_reject ? rejections : runs - rejections) + "/200; ";
  }
  detail += fmt("%.0fs", seconds_since(start));
  return {ok, detail};
}

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform()); }

MrpModel random_proper_model(Rng& rng) {
  KernelSpec k;
  k.rate_map = {0.0, log_uniform(rng, 0.5, 2.0)};
  switch (rng.below(5)) {
    case 0:
      return build_model(k, MixingMeasure::gamma(log_uniform(rng, 0.5, 3.0), log_uniform(rng, 0.3, 4.0)));
    case 1:
      k.family = KernelFamily::Gamma;
      k.shape = log_uniform(rng, 0.3, 3.0);
      return build_model(k, MixingMeasure::gamma(log_uniform(rng, 0.5, 3.0), log_uniform(rng, 0.5, 4.0)));
    case 2: {
      k.family = KernelFamily::Gamma;
      k.shape_param = 1;
      const double lo = log_uniform(rng, 0.2, 1.0);
      return build_model(k, MixingMeasure::product({GammaFactor{log_uniform(rng, 1.0, 3.0), log_uniform(rng, 1.0, 4.0)},
                                                    UniformFactor{lo, lo + log_uniform(rng, 0.2, 2.0)}}));
    }
    case 3: {
      const double lo = log_uniform(rng, 0.2, 1.0);
      return build_model(k, MixingMeasure::product({BetaFactor{log_uniform(rng, 0.5, 4.0), log_uniform(rng, 0.5, 4.0), lo,
                                                               lo + log_uniform(rng, 0.5, 3.0)}}));
    }
    default: {
      k.family = KernelFamily::Gamma;
      k.shape = log_uniform(rng, 0.3, 3.0);
      std::vector<Theta> atoms;
      std::vector<double> w;
      for (int i = 0; i < 3; ++i) {
        atoms.push_back({log_uniform(rng, 0.3, 3.0)});
        w.push_back(rng.uniform());
      }
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      for (auto& v : w) v /= total;
      w.back() = 1.0 - w[0] - w[1];
      return build_model(k, MixingMeasure::discrete(atoms, w));
    }
  }
}

Outcome c4_permutation_invariance() {
  Rng rng(4004);
  double worst = 0.0;
  int evaluations = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int model_i = 0; model_i < 50; ++model_i) {
    const MrpModel m = random_proper_model(rng);
    for (int box_i = 0; box_i < 20; ++box_i) {
      const std::size_t r = 2 + rng.below(3);
      std::vector<double> w(r);
      for (auto& v : w) v = rng.below(10) == 0 ? kInf : log_uniform(rng, 0.05, 8.0);
      const double f = joint_interarrival_probability(m, BoxQuery::upper(w)).probability;
      for (int p = 0; p < 5; ++p) {
        std::vector<double> pw = w;
        for (std::size_t i = r; i > 1; --i) std::swap(pw[i - 1], pw[rng.below(i)]);
        const double fp = joint_interarrival_probability(m, BoxQuery::upper(pw)).probability;
        worst = std::max(worst, std::fabs(f - fp));
        ++evaluations;
      }
    }
  }
  return {worst <= 2e-9, fmt("max |F(w) - F(w o pi)| = %.2e over %.0f permuted boxes; %.1fs", worst, evaluations,
                             seconds_since(start))};
}

Outcome c5_disintegration() {
  Rng rng(5005);
  int passes = 0;
  std::string failures;
  for (int i = 0; i < 20; ++i) {
    const MrpModel m = random_proper_model(rng);
    const Theta theta = mixing_sample(m.mixing, rng);
    ConditionalIidOptions opt;
    opt.level = 0.01;
    opt.seed = derive_seed(5006, i);
    const VerificationReport r = conditional_iid_test(m, theta, opt);
    if (r.passed) ++passes;
    else failures += " #" + std::to_string(i) + fmt("(p=%.2g)", *r.p_value);
  }
  // Dirac mixing: the joint law factorizes into kernel marginals
  KernelSpec k;
  k.family = KernelFamily::Gamma;
  k.shape = 0.7;
  const Theta theta0{1.6};
  const MrpModel dirac = build_model(k, MixingMeasure::dirac(theta0));
  const Ensemble e = simulate_ensemble(dirac, 100000, 3, 5007);
  std::vector<BoxQuery> boxes;
  std::vector<ExactResult> product;
  double route_gap = 0.0;
  for (const auto& w : std::vector<std::vector<double>>{{0.2, 0.5, 1.0}, {1.0, 0.1, 0.6}, {0.4, 0.4, kInf}, {2.0, 0.05, 0.3}}) {
    BoxQuery q = BoxQuery::upper(w);
    double p = 1.0;
    for (std::size_t j = 0; j < w.size(); ++j) p *= kernel_cdf(k, static_cast<int>(j + 1), theta0, w[j]);
    route_gap = std::max(route_gap, std::fabs(joint_interarrival_probability(dirac, q).probability - p));
    boxes.push_back(q);
    product.push_back({p, 0.0, "product of marginals"});
  }
  const VerificationReport mc = mc_vs_exact(e, boxes, product);
  const bool ok = passes == 20 && mc.passed && route_gap == 0.0;
  return {ok, std::to_string(passes) + "/20 (model, theta) pairs pass conditional-iid" +
                  (failures.empty() ? "" : " [failed:" + failures + "]") +
                  "; Dirac factorization on 1e5 paths " + (mc.passed ? "holds" : "violated") + " within 4 SE"};
}

Outcome c6_mixed_poisson() {
  const ModelFile f = bundled("mixed_poisson.json");
  const auto* g = f.model.mixing.as<GammaMixing>();
  MixedPoissonOptions opt;
  opt.n_paths = 100000;
  opt.level = 0.01;
  opt.seed = 6006;
  const VerificationReport r = mixed_poisson_check(f.model, opt);
  bool references_ok = true;
  std::string zeros;
  for (const auto& c : r.children) {
    if (c.check.rfind("P(N_t=0)", 0) != 0) continue;
    const double t = std::stod(c.check.substr(c.check.rfind("t=") + 2));
    const double closed = std::pow(g->rate / (g->rate + t), g->shape);
    references_ok = references_ok && std::fabs(*c.reference - closed) <= 1e-10;
    zeros += fmt(" t=%g:%.2fSE", t, c.statistic / se(closed, opt.n_paths));
  }
  int pvals = 0;
  int pval_pass = 0;
  for (const auto& c : r.children)
    if (c.rule == DecisionRule::PValueAtLeastLevel) {
      ++pvals;
      pval_pass += c.passed;
    }
  return {r.passed && references_ok,
          "P(N_t=0) deviations" + zeros + "; chi-square pmf/increment sub-tests passing " + std::to_string(pval_pass) + "/" +
              std::to_string(pvals)};
}

Outcome c7_counting_algebra() {
  Rng rng(7007);
  int vectors = 0;
  int discarded = 0;
  long long duality_checks = 0;
  bool ok = true;
  const MrpModel sim = bundled("gamma_half.json").model;
  while (vectors < 10000) {
    std::vector<double> w;
    std::vector<double> t;
    const std::size_t n = 1 + rng.below(50);
    if (vectors % 2 == 0) {
      w.resize(n);
      for (auto& v : w) v = std::exp(3.0 * rng.normal());
      t.resize(n + 1);
      if (!canonicalize_interarrivals(w, t)) {
        ++discarded;
        continue;
      }
    } else {
      const MrpPath p = sample_path(sim, n, rng);
      w = p.interarrivals;
      t = p.arrivals;
    }
    ++vectors;
    const std::vector<double> t1 = arrivals_from_interarrivals(w);
    const CountingPath path = CountingPath::from_arrivals(t1);
    const std::vector<double> t2 = arrivals_from_counting(path);
    const std::vector<double> w2 = interarrivals_from_arrivals(t2);
    ok = ok && t1 == t && t2 == t1 && w2 == w;
    for (int q = 0; q < 100; ++q) {
      const double s = rng.uniform() * path.horizon();
      const long long count = count_at(path, s);
      for (std::size_t k = 1; k < t1.size(); ++k) {
        ok = ok && ((count >= static_cast<long long>(k)) == (t1[k] <= s));
        ++duality_checks;
      }
    }
  }
  return {ok, std::to_string(vectors) + " vectors (half random, half simulated) round-trip W->T->N->T->W bitwise; " +
                  std::to_string(duality_checks) + " duality checks; " + std::to_string(discarded) +
                  " raw vectors not representable as strictly increasing sums were redrawn"};
}

Outcome c8_mixture_marginals() {
  Rng rng(8008);
  double worst_oracle = 0.0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double gam = log_uniform(rng, 0.2, 10.0);
    const double alpha = log_uniform(rng, 0.2, 10.0);
    const double w = log_uniform(rng, 0.01, 50.0);
    // oracle: the defining theta-integral by double-exponential quadrature
    const double log_norm = alpha * std::log(gam) - std::lgamma(alpha);
    const double oracle_value = oracle::exp_sinh(
        [&](double th) { return -std::expm1(-th * w) * std::exp(log_norm + (alpha - 1) * std::log(th) - gam * th); }, 1e-15);
    const double closed = 1.0 - std::pow(gam / (gam + w), alpha);
    worst_oracle = std::max(worst_oracle, std::fabs(oracle_value - closed));
    KernelSpec k;
    const MrpModel m = build_model(k, MixingMeasure::gamma(gam, alpha));
    const double got = joint_interarrival_probability(m, BoxQuery::upper({w})).probability;
    worst = std::max(worst, std::max(std::fabs(got - closed), std::fabs(got - oracle_value)));
  }
  return {worst <= 1e-9 && worst_oracle <= 1e-10,
          fmt("oracle vs closed form max %.1e; library vs both max %.1e over 100 triples", worst_oracle, worst)};
}

BoxQuery random_cylinder(Rng& rng, std::size_t r) {
  BoxQuery q;
  for (std::size_t k = 0; k < r; ++k) {
    double a = rng.below(3) == 0 ? -kInf : log_uniform(rng, 0.01, 3.0);
    double b = rng.below(4) == 0 ? kInf : log_uniform(rng, 0.02, 6.0);
    if (std::isfinite(a) && std::isfinite(b) && a >= b) std::swap(a, b);
    if (a == b) b = a * 2.0;
    q.bounds.push_back({a, b});
  }
  return q;
}

Outcome c9_route_equivalence() {
  Rng rng(9009);
  std::string detail;
  bool ok = true;
  const auto start = std::chrono::steady_clock::now();
  for (const char* file : {"gamma_half.json", "bivariate.json"}) {
    const MrpModel m = bundled(file).model;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const BoxQuery q = random_cylinder(rng, 1 + rng.below(3));
      std::optional<Box> event;
      if (rng.below(3) == 0) {
        const Box support = m.mixing.support();
        Box e;
        for (const auto& s : support) {
          const double lo = std::isfinite(s.hi) ? s.lo + (s.hi - s.lo) * 0.3 * rng.uniform() : log_uniform(rng, 0.05, 1.0);
          const double hi = std::isfinite(s.hi) ? s.hi - (s.hi - s.lo) * 0.3 * rng.uniform() : lo + log_uniform(rng, 0.5, 4.0);
          e.push_back({lo, hi});
        }
        event = e;
      }
      const double a = cylinder_probability_density_form(m, q, {}, event).probability;
      const double b = joint_interarrival_probability(m, q, {}, event).probability;
      worst = std::max(worst, std::fabs(a - b));
    }
    ok = ok && worst <= 1e-8;
    detail += std::string(file) + fmt(" max gap %.1e; ", worst);
  }
  detail += fmt("%.1fs", seconds_since(start));
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"C1 exact route: Example 16 boxes 1/3 and 2/7", c1_exact_route},
      {"C2 Monte Carlo route: 1e6 paths within 4 SE", c2_monte_carlo_route},
      {"C3 exchangeability dichotomy over 200 seeds", c3_exchangeability_dichotomy},
      {"C4 exact permutation invariance, proper models", c4_permutation_invariance},
      {"C5 disintegration consistency", c5_disintegration},
      {"C6 mixed Poisson special case", c6_mixed_poisson},
      {"C7 counting algebra round trips and duality", c7_counting_algebra},
      {"C8 analytic mixture marginals vs oracle", c8_mixture_marginals},
      {"C9 density form vs product-cdf form", c9_route_equivalence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.passed;
    std::cout << (o.passed ? "[PASS] " : "[FAIL] ") << c.name << " | " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
