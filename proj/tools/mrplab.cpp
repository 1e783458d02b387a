#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mrplab/cli.hpp"

namespace {

unsigned thread_budget() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MRPLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    } catch (const std::exception&) {
      std::cerr << "mrplab: ignoring malformed MRPLAB_THREADS='" << env << "'\n";
    }
  }
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mrplab::cli;
  CLI::App app{"mrplab: simulate, evaluate and verify mixed renewal processes"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "simulate an ensemble of paths to CSV");
  simulate->add_option("--model", sim.model_path, "model JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--paths", sim.n_paths, "number of paths")->check(CLI::PositiveNumber);
  simulate->add_option("--events", sim.n_events, "interarrivals per path")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "root seed");
  simulate->add_option("--out", sim.out_path, "output CSV (manifest written next to it)")->required();

  ExactOptions ex;
  auto* exact = app.add_subcommand("exact", "evaluate box and count probabilities by quadrature");
  exact->add_option("--model", ex.model_path, "model JSON file")->required()->check(CLI::ExistingFile);
  exact->add_option("--queries", ex.queries_path, "queries JSON file")->required()->check(CLI::ExistingFile);
  exact->add_option("--out", ex.out_path, "results CSV")->required();
  exact->add_option("--tol", ex.quadrature.rel_tol, "relative tolerance")->check(CLI::PositiveNumber);
  exact->add_option("--abs-tol", ex.quadrature.abs_tol, "absolute tolerance")->check(CLI::PositiveNumber);

  VerifyOptions ver;
  auto* verify = app.add_subcommand("verify", "run statistical verification suites");
  verify->add_option("--model", ver.model_path, "model JSON file")->required()->check(CLI::ExistingFile);
  verify->add_option("--suite", ver.suite, "exchangeability | conditional-iid | mc-vs-exact | mixed-poisson | "
                                           "counting-axioms | all");
  verify->add_option("--paths", ver.n_paths, "paths per Monte Carlo ensemble")->check(CLI::PositiveNumber);
  verify->add_option("--events", ver.prefix_length, "prefix length for joint checks")->check(CLI::Range(2, 16));
  verify->add_option("--seed", ver.seed, "root seed");
  verify->add_option("--level", ver.level, "test level")->check(CLI::Range(0.0, 1.0));
  verify->add_option("--tol", ver.quadrature.rel_tol, "quadrature relative tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--abs-tol", ver.quadrature.abs_tol, "quadrature absolute tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--out", ver.out_path, "JSON report")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  const unsigned threads = thread_budget();
  if (simulate->parsed()) {
    sim.threads = threads;
    return cmd_simulate(sim, std::cerr);
  }
  if (exact->parsed()) return cmd_exact(ex, std::cerr);
  ver.threads = threads;
  return cmd_verify(ver, std::cerr, &std::cout);
}
