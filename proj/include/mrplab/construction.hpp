#ifndef MRPLAB_CONSTRUCTION_HPP
#define MRPLAB_CONSTRUCTION_HPP

// Product construction of a mixed renewal process: theta ~ mu, then
// W_1, W_2, ... independent with W_n ~ Q_n(theta).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mrplab/counting.hpp"
#include "mrplab/error.hpp"
#include "mrplab/kernels.hpp"
#include "mrplab/random.hpp"

namespace mrplab {

struct MrpModel {
  KernelSpec kernel;
  MixingMeasure mixing;
  /// Q_n(theta) = K(theta) for every n, i.e. the rate map is index-constant.
  bool is_proper_mrp = true;
  std::vector<std::string> warnings;

  std::size_t dimension() const { return mixing.dimension(); }
};

namespace detail {

inline bool is_kernel_parameter(const KernelSpec& k, std::size_t j) {
  return static_cast<int>(j) == k.rate_param || static_cast<int>(j) == k.shape_param;
}

inline void check_support_admissible(const KernelSpec& kernel, const MixingMeasure& mixing) {
  if (mixing.dimension() < kernel.required_dimension())
    throw Error(ErrorKind::Configuration, "mixing dimension " + std::to_string(mixing.dimension()) +
                                              " is smaller than the kernel needs (" +
                                              std::to_string(kernel.required_dimension()) + ")");
  if (mixing.is_continuous()) {
    const Box support = mixing.support();
    for (std::size_t j = 0; j < support.size(); ++j) {
      if (is_kernel_parameter(kernel, j) && support[j].lo < 0.0)
        throw Error(ErrorKind::Configuration, "mixing support along theta[" + std::to_string(j) +
                                                  "] reaches below 0, outside the kernel's admissible region");
    }
    return;
  }
  auto check_atom = [&](const Theta& atom) {
    try {
      kernel.check_admissible(atom);
    } catch (const Error& e) {
      throw Error(ErrorKind::Configuration, std::string("mixing atom not admissible for kernel: ") + e.what());
    }
  };
  if (const auto* d = mixing.as<DiracMixing>()) check_atom(d->atom);
  if (const auto* d = mixing.as<DiscreteMixing>()) {
    for (std::size_t i = 0; i < d->atoms.size(); ++i)
      if (d->weights[i] > 0.0) check_atom(d->atoms[i]);
  }
}

}  // namespace detail

/// Cross-validates a kernel family against a mixing measure.
///
/// A non-constant rate map does not fail: such a family (e.g. Exp(n theta))
/// still defines a process, just not a mixed renewal one, and the model is
/// flagged with is_proper_mrp = false plus a warning.
inline MrpModel build_model(KernelSpec kernel, MixingMeasure mixing) {
  kernel.validate();
  if (!kernel.has_positive_support())
    throw Error(ErrorKind::InvalidInterarrival,
                std::string(to_string(kernel.family)) + " kernel puts mass at 0; interarrival times must be positive");
  detail::check_support_admissible(kernel, mixing);
  MrpModel model{std::move(kernel), std::move(mixing), true, {}};
  model.is_proper_mrp = model.kernel.is_constant_family();
  if (!model.is_proper_mrp)
    model.warnings.push_back("rate_map depends on the index: interarrivals are conditionally independent but not "
                             "identically distributed, so this is not a mixed renewal process");
  return model;
}

struct MrpPath {
  Theta theta;
  std::vector<double> interarrivals;  // W_1..W_n
  std::vector<double> arrivals;       // T_0 = 0, T_1..T_n
};

namespace detail {

constexpr int kMaxPathAttempts = 64;

// Fills W from Q_k(theta) and canonicalizes (W, T). Degenerate paths are
// redrawn; they have probability zero in exact arithmetic.
inline void draw_interarrivals(const MrpModel& model, const Theta& theta, std::span<double> w, std::span<double> t,
                               Rng& rng) {
  for (int attempt = 0; attempt < kMaxPathAttempts; ++attempt) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = kernel_sample(model.kernel, static_cast<int>(k + 1), theta, rng);
    if (canonicalize_interarrivals(w, t)) return;
  }
  throw Error(ErrorKind::InvalidInterarrival, "could not draw a path with strictly increasing arrivals");
}

inline void check_events(std::size_t n_events) {
  if (n_events < 1) throw Error(ErrorKind::Configuration, "n_events must be at least 1");
}

}  // namespace detail

/// theta ~ mu, then W_k ~ Q_k(theta) independently, T = prefix sums.
inline MrpPath sample_path(const MrpModel& model, std::size_t n_events, Rng& rng) {
  detail::check_events(n_events);
  MrpPath path;
  path.theta = mixing_sample(model.mixing, rng);
  path.interarrivals.resize(n_events);
  path.arrivals.resize(n_events + 1);
  detail::draw_interarrivals(model, path.theta, path.interarrivals, path.arrivals, rng);
  return path;
}

inline bool in_mixing_support(const MixingMeasure& mu, const Theta& theta) {
  if (theta.size() != mu.dimension()) return false;
  if (const auto* d = mu.as<DiracMixing>()) return d->atom == theta;
  if (const auto* d = mu.as<DiscreteMixing>()) {
    for (std::size_t i = 0; i < d->atoms.size(); ++i)
      if (d->weights[i] > 0.0 && d->atoms[i] == theta) return true;
    return false;
  }
  const Box support = mu.support();
  for (std::size_t j = 0; j < theta.size(); ++j)
    if (!support[j].contains(theta[j])) return false;
  return true;
}

/// Path under the disintegrating measure P_theta: theta is fixed, W_k ~ Q_k(theta).
inline MrpPath sample_conditional_path(const MrpModel& model, const Theta& theta, std::size_t n_events, Rng& rng) {
  detail::check_events(n_events);
  if (!in_mixing_support(model.mixing, theta))
    throw Error(ErrorKind::Domain, "theta lies outside the mixing support");
  model.kernel.check_admissible(theta);
  MrpPath path;
  path.theta = theta;
  path.interarrivals.resize(n_events);
  path.arrivals.resize(n_events + 1);
  detail::draw_interarrivals(model, path.theta, path.interarrivals, path.arrivals, rng);
  return path;
}

/// Cap on stored doubles per ensemble (about 2 GiB).
inline constexpr std::uint64_t kMaxEnsembleValues = 1ULL << 28;

/// Flat store of n_paths truncated paths. Path i was drawn from
/// Rng(derive_seed(root_seed, i)).
class Ensemble {
 public:
  Ensemble(std::size_t n_paths, std::size_t n_events, std::size_t dim, std::uint64_t root_seed)
      : n_paths_(n_paths),
        n_events_(n_events),
        dim_(dim),
        root_seed_(root_seed),
        thetas_(n_paths * dim),
        interarrivals_(n_paths * n_events),
        arrivals_(n_paths * (n_events + 1)) {}

  std::size_t size() const { return n_paths_; }
  std::size_t n_events() const { return n_events_; }
  std::size_t dimension() const { return dim_; }
  std::uint64_t root_seed() const { return root_seed_; }
  std::uint64_t path_seed(std::size_t i) const { return derive_seed(root_seed_, i); }

  std::span<const double> theta(std::size_t i) const { return {thetas_.data() + i * dim_, dim_}; }
  std::span<const double> interarrivals(std::size_t i) const {
    return {interarrivals_.data() + i * n_events_, n_events_};
  }
  std::span<const double> arrivals(std::size_t i) const {
    return {arrivals_.data() + i * (n_events_ + 1), n_events_ + 1};
  }
  double interarrival(std::size_t i, std::size_t k) const { return interarrivals_[i * n_events_ + k]; }

  MrpPath path(std::size_t i) const {
    auto th = theta(i);
    auto w = interarrivals(i);
    auto t = arrivals(i);
    return {Theta(th.begin(), th.end()), {w.begin(), w.end()}, {t.begin(), t.end()}};
  }

  void store(std::size_t i, const MrpPath& p) {
    std::copy(p.theta.begin(), p.theta.end(), thetas_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
    std::copy(p.interarrivals.begin(), p.interarrivals.end(),
              interarrivals_.begin() + static_cast<std::ptrdiff_t>(i * n_events_));
    std::copy(p.arrivals.begin(), p.arrivals.end(),
              arrivals_.begin() + static_cast<std::ptrdiff_t>(i * (n_events_ + 1)));
  }

  friend bool operator==(const Ensemble&, const Ensemble&) = default;

 private:
  std::size_t n_paths_;
  std::size_t n_events_;
  std::size_t dim_;
  std::uint64_t root_seed_;
  std::vector<double> thetas_;
  std::vector<double> interarrivals_;
  std::vector<double> arrivals_;
};

/// Monte Carlo batch. Each path owns its generator seeded with
/// derive_seed(root_seed, path_index), so the result does not depend on
/// `threads`.
inline Ensemble simulate_ensemble(const MrpModel& model, std::size_t n_paths, std::size_t n_events,
                                  std::uint64_t root_seed, unsigned threads = 1) {
  if (n_paths < 1) throw Error(ErrorKind::Configuration, "n_paths must be at least 1");
  detail::check_events(n_events);
  const std::uint64_t per_path = 2 * n_events + 1 + model.dimension();
  if (n_paths > kMaxEnsembleValues / per_path)
    throw Error(ErrorKind::Capacity, "ensemble of " + std::to_string(n_paths) + " x " + std::to_string(n_events) +
                                         " exceeds the in-memory limit");
  Ensemble ensemble(n_paths, n_events, model.dimension(), root_seed);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(root_seed, i));
      ensemble.store(i, sample_path(model, n_events, rng));
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(n_paths, 256))));
  if (threads == 1) {
    run(0, n_paths);
    return ensemble;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n_paths + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n_paths, begin + chunk);
    pool.emplace_back([&, begin, end, t] {
      try {
        run(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return ensemble;
}

/// CSV with columns path_id, theta_0..theta_{d-1}, k, W, T; one row per event.
inline void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble) {
  out << "path_id";
  for (std::size_t j = 0; j < ensemble.dimension(); ++j) out << ",theta_" << j;
  out << ",k,W,T\n";
  std::string row;
  char buf[96];
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    std::string prefix = std::to_string(i);
    for (double v : ensemble.theta(i)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      prefix += buf;
    }
    const auto w = ensemble.interarrivals(i);
    const auto t = ensemble.arrivals(i);
    for (std::size_t k = 0; k < w.size(); ++k) {
      row = prefix;
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g\n", k + 1, w[k], t[k + 1]);
      row += buf;
      out << row;
    }
  }
}

}  // namespace mrplab

#endif  // MRPLAB_CONSTRUCTION_HPP
