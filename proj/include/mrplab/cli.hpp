#ifndef MRPLAB_CLI_HPP
#define MRPLAB_CLI_HPP

// Command implementations behind the `mrplab` executable. They take parsed
// options and return the process exit code:
//   0 pass, 1 verification rejection, 2 usage/schema, 3 capacity, 4 accuracy.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrplab/construction.hpp"
#include "mrplab/counting.hpp"
#include "mrplab/error.hpp"
#include "mrplab/exact.hpp"
#include "mrplab/model_io.hpp"
#include "mrplab/report.hpp"
#include "mrplab/stats.hpp"

namespace mrplab::cli {

enum ExitCode : int { kPass = 0, kRejected = 1, kUsage = 2, kCapacity = 3, kAccuracy = 4 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Capacity: return kCapacity;
    case ErrorKind::Accuracy: return kAccuracy;
    default: return kUsage;
  }
}

/// Writes through a sibling temp file and renames it into place.
inline void write_atomically(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Configuration, "cannot write '" + tmp + "'");
    body(out);
    out.flush();
    if (!out) throw Error(ErrorKind::Configuration, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Configuration, "cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "mrplab: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "mrplab: " << e.what() << '\n';
    return kUsage;
  }
}

struct SimulateOptions {
  std::string model_path;
  std::size_t n_paths = 1000;
  std::size_t n_events = 10;
  std::uint64_t seed = 1;
  std::string out_path;
  unsigned threads = 1;
};

/// Ensemble CSV at out_path, JSON manifest at out_path + ".manifest.json".
inline int cmd_simulate(const SimulateOptions& opt, std::ostream& err) {
  return guarded(err, [&] {
    const ModelFile file = load_model_file(opt.model_path);
    const Ensemble ensemble = simulate_ensemble(file.model, opt.n_paths, opt.n_events, opt.seed, opt.threads);
    write_atomically(opt.out_path, [&](std::ostream& out) { write_ensemble_csv(out, ensemble); });
    nlohmann::json manifest{
        {"schema", "mrplab.ensemble-manifest/1"},
        {"model", to_json(file.model)},
        {"model_name", file.name},
        {"model_hash", hex64(model_hash(file.model))},
        {"is_proper_mrp", file.model.is_proper_mrp},
        {"warnings", file.model.warnings},
        {"root_seed", opt.seed},
        {"seed_rule", "path i uses mix64(root_seed + (i + 1) * 0x9E3779B97F4A7C15) with splitmix64 finalizer"},
        {"n_paths", opt.n_paths},
        {"n_events", opt.n_events},
        {"truncation", opt.n_events},
        {"csv", std::filesystem::path(opt.out_path).filename().string()},
        {"created", utc_timestamp()},
    };
    write_atomically(opt.out_path + ".manifest.json", [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
    for (const auto& w : file.model.warnings) err << "mrplab: warning: " << w << '\n';
    return static_cast<int>(kPass);
  });
}

struct ExactOptions {
  std::string model_path;
  std::string queries_path;
  std::string out_path;
  QuadratureConfig quadrature{};
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct ExactRow {
  std::string id;
  double probability;
  double error_estimate;
  std::string method;
};

/// Results CSV: query_id, probability, error_estimate, method. Unconverged
/// quadratures keep their best estimate, are tagged "<method>:unconverged"
/// and make the command exit 4.
inline int cmd_exact(const ExactOptions& opt, std::ostream& err) {
  return guarded(err, [&] {
    const ModelFile file = load_model_file(opt.model_path);
    const std::vector<Query> queries = [&] {
      try {
        return parse_queries(read_json_file(opt.queries_path));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Schema) throw Error(ErrorKind::Schema, opt.queries_path + ": " + e.what());
        throw;
      }
    }();
    std::vector<ExactRow> rows;
    int code = kPass;
    for (const Query& q : queries) {
      try {
        const ExactResult r = q.type == Query::Type::Box
                                  ? joint_interarrival_probability(file.model, q.box, opt.quadrature, q.theta_event)
                                  : count_pmf(file.model, q.t, q.n, opt.quadrature);
        rows.push_back({q.id, r.probability, r.error_estimate, r.method});
      } catch (const AccuracyError& e) {
        rows.push_back({q.id, e.estimate(), e.error_estimate(), "gauss-kronrod-15:unconverged"});
        err << "mrplab: query " << q.id << ": " << e.what() << '\n';
        code = kAccuracy;
      }
    }
    write_atomically(opt.out_path, [&](std::ostream& out) {
      out << "query_id,probability,error_estimate,method\n";
      char buf[96];
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.3e,", r.probability, r.error_estimate);
        out << csv_field(r.id) << buf << r.method << '\n';
      }
    });
    return code;
  });
}

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> suites{"exchangeability", "conditional-iid", "mc-vs-exact",
                                               "mixed-poisson",   "counting-axioms", "all"};
  return suites;
}

struct VerifyOptions {
  std::string model_path;
  std::string suite = "all";
  std::uint64_t seed = 1;
  std::string out_path;
  double level = 0.01;
  std::size_t n_paths = 20000;
  std::size_t prefix_length = 2;
  QuadratureConfig quadrature{};
  unsigned threads = 1;
};

namespace detail {

// Sub-seeds per suite so suites do not share random streams.
enum SuiteStream : std::uint64_t {
  kExchangeEnsemble = 1,
  kExchangeResample,
  kConditionalTheta,
  kConditionalPaths,
  kPilot,
  kMonteCarlo,
  kMixedPoisson,
  kCountingPaths,
};

inline VerificationReport run_exchangeability(const ModelFile& f, const VerifyOptions& o) {
  const Ensemble e = simulate_ensemble(f.model, o.n_paths, o.prefix_length, derive_seed(o.seed, kExchangeEnsemble), o.threads);
  ExchangeabilityOptions x;
  x.prefix_length = o.prefix_length;
  x.level = o.level;
  x.seed = derive_seed(o.seed, kExchangeResample);
  return exchangeability_test(e, x);
}

inline VerificationReport run_conditional_iid(const ModelFile& f, const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, kConditionalTheta));
  const Theta theta = mixing_sample(f.model.mixing, rng);
  ConditionalIidOptions c;
  c.n_samples = std::min<std::size_t>(o.n_paths, 5000);
  c.max_index = 4;
  c.level = o.level;
  c.seed = derive_seed(o.seed, kConditionalPaths);
  VerificationReport r = conditional_iid_test(f.model, theta, c);
  std::ostringstream th;
  for (std::size_t j = 0; j < theta.size(); ++j) th << (j ? "," : "") << theta[j];
  r.caveats.push_back("theta drawn from the mixing measure: (" + th.str() + ")");
  return r;
}

inline VerificationReport run_mc_vs_exact(const ModelFile& f, const VerifyOptions& o) {
  // Probe points come from an independent pilot run.
  const std::size_t r = o.prefix_length;
  const Ensemble pilot = simulate_ensemble(f.model, 2000, r, derive_seed(o.seed, kPilot), o.threads);
  std::vector<std::vector<double>> quartiles(r);
  for (std::size_t k = 0; k < r; ++k) {
    std::vector<double> col(pilot.size());
    for (std::size_t i = 0; i < pilot.size(); ++i) col[i] = pilot.interarrival(i, k);
    std::sort(col.begin(), col.end());
    for (double q : {0.25, 0.5, 0.75}) quartiles[k].push_back(col[static_cast<std::size_t>(q * (col.size() - 1))]);
  }
  std::vector<BoxQuery> queries;
  for (std::size_t a = 0; a < 3; ++a) {
    std::vector<double> w(r);
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t k = 0; k < r; ++k) w[k] = quartiles[k][(a + b * k) % 3];
      queries.push_back(BoxQuery::upper(w));
    }
  }
  std::vector<ExactResult> exact;
  for (const auto& q : queries) exact.push_back(joint_interarrival_probability(f.model, q, o.quadrature));
  const Ensemble e = simulate_ensemble(f.model, o.n_paths, r, derive_seed(o.seed, kMonteCarlo), o.threads);
  return mc_vs_exact(e, queries, exact);
}

inline VerificationReport run_mixed_poisson(const ModelFile& f, const VerifyOptions& o) {
  if (f.model.kernel.family != KernelFamily::Exponential || !f.model.is_proper_mrp)
    return VerificationReport::skipped_check("mixed-poisson",
                                             "model is not an index-constant exponential kernel; stationary "
                                             "increments need not hold");
  MixedPoissonOptions m;
  m.n_paths = o.n_paths;
  m.level = o.level;
  m.seed = derive_seed(o.seed, kMixedPoisson);
  return mixed_poisson_check(f.model, m, o.quadrature);
}

inline VerificationReport run_counting_axioms(const ModelFile& f, const VerifyOptions& o) {
  const std::size_t paths = 200;
  const Ensemble e = simulate_ensemble(f.model, paths, 50, derive_seed(o.seed, kCountingPaths), o.threads);
  VerificationReport agg;
  agg.check = "counting-axioms";
  agg.rule = DecisionRule::StatisticAtMostThreshold;
  agg.threshold = 0.0;
  agg.seeds = {e.root_seed()};
  agg.sizes = {{"paths", paths}, {"events", 50}};
  std::size_t failing = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const CountingPath cp = CountingPath::from_arrivals(e.arrivals(i));
    const auto samples = step_function_samples(cp);
    const VerificationReport r = validate_counting_axioms(samples);
    if (!r.passed) {
      if (failing == 0) agg.children.push_back(r);
      ++failing;
    }
  }
  agg.statistic = static_cast<double>(failing);
  agg.caveats.push_back("statistic counts simulated paths whose sampled step function violates (n1)-(n4); "
                        "(n5) is not falsifiable on finite data");
  return agg.finalize();
}

}  // namespace detail

/// Runs the selected suite(s) and writes a JSON report to out_path (and a
/// text table to `text`). Unsupported suites are recorded as skipped.
inline int cmd_verify(const VerifyOptions& opt, std::ostream& err, std::ostream* text = nullptr) {
  const auto& suites = verify_suites();
  if (std::find(suites.begin(), suites.end(), opt.suite) == suites.end()) {
    err << "mrplab: unknown suite '" << opt.suite << "'; expected one of:";
    for (const auto& s : suites) err << ' ' << s;
    err << '\n';
    return kUsage;
  }
  return guarded(err, [&] {
    const ModelFile file = load_model_file(opt.model_path);
    VerificationReport top;
    top.check = "verify:" + opt.suite;
    top.rule = DecisionRule::AllChildren;
    top.level = opt.level;
    top.seeds = {opt.seed};
    const bool all = opt.suite == "all";
    auto want = [&](const char* s) { return all || opt.suite == s; };
    if (want("exchangeability")) top.children.push_back(detail::run_exchangeability(file, opt));
    if (want("conditional-iid")) top.children.push_back(detail::run_conditional_iid(file, opt));
    if (want("mc-vs-exact")) top.children.push_back(detail::run_mc_vs_exact(file, opt));
    if (want("mixed-poisson")) top.children.push_back(detail::run_mixed_poisson(file, opt));
    if (want("counting-axioms")) top.children.push_back(detail::run_counting_axioms(file, opt));
    top.finalize();

    nlohmann::json j = to_json(top);
    j["model_name"] = file.name;
    j["model_hash"] = hex64(model_hash(file.model));
    j["expected_rejection"] = file.expects_rejection;
    j["is_proper_mrp"] = file.model.is_proper_mrp;
    write_atomically(opt.out_path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
    if (text) print_report(*text, top);
    return top.passed ? static_cast<int>(kPass) : static_cast<int>(kRejected);
  });
}

}  // namespace mrplab::cli

#endif  // MRPLAB_CLI_HPP
