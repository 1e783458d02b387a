#ifndef MRPLAB_COUNTING_HPP
#define MRPLAB_COUNTING_HPP

// Conversions between interarrival times W_n, arrival times T_n and the
// counting process N_t, and checks of the counting-process axioms on sampled
// step functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mrplab/error.hpp"
#include "mrplab/report.hpp"

namespace mrplab {

/// T_0 = 0, T_n = W_1 + ... + W_n (running double sum, left to right).
inline std::vector<double> arrivals_from_interarrivals(std::span<const double> interarrivals) {
  std::vector<double> arrivals;
  arrivals.reserve(interarrivals.size() + 1);
  arrivals.push_back(0.0);
  double t = 0.0;
  for (std::size_t k = 0; k < interarrivals.size(); ++k) {
    const double w = interarrivals[k];
    if (!(w > 0.0) || !std::isfinite(w))
      throw Error(ErrorKind::InvalidInterarrival,
                  "W_" + std::to_string(k + 1) + " = " + std::to_string(w) + " is not a positive finite time");
    t += w;
    arrivals.push_back(t);
  }
  return arrivals;
}

/// W_n = T_n - T_(n-1). Expects T_0 = 0 at the front.
inline std::vector<double> interarrivals_from_arrivals(std::span<const double> arrivals) {
  if (arrivals.empty() || arrivals.front() != 0.0)
    throw Error(ErrorKind::InvalidInterarrival, "arrival sequence must start with T_0 = 0");
  std::vector<double> out;
  out.reserve(arrivals.size() - 1);
  for (std::size_t k = 1; k < arrivals.size(); ++k) {
    if (!(arrivals[k] > arrivals[k - 1]))
      throw Error(ErrorKind::InvalidInterarrival, "arrivals must increase strictly at T_" + std::to_string(k));
    out.push_back(arrivals[k] - arrivals[k - 1]);
  }
  return out;
}

/// Replace each W_k by fl(T_k - T_(k-1)), where T is the running sum. Stored
/// this way the pair (W, T) round-trips exactly: summing the new W reproduces
/// T bit for bit and differencing T returns the new W. Returns false when the
/// path degenerates (an increment vanished against T_(k-1), or the round trip
/// cannot be made exact); such paths must be discarded.
inline bool canonicalize_interarrivals(std::span<double> interarrivals, std::span<double> arrivals_out) {
  if (arrivals_out.size() != interarrivals.size() + 1) return false;
  arrivals_out[0] = 0.0;
  double t = 0.0;
  for (std::size_t k = 0; k < interarrivals.size(); ++k) {
    const double w = interarrivals[k];
    if (!(w > 0.0) || !std::isfinite(w)) return false;
    const double next = t + w;
    if (!(next > t)) return false;
    const double snapped = next - t;
    if (!(snapped > 0.0) || t + snapped != next) return false;
    interarrivals[k] = snapped;
    arrivals_out[k + 1] = next;
    t = next;
  }
  return true;
}

/// Observed event times of one counting path on [0, horizon].
class CountingPath {
 public:
  CountingPath(std::vector<double> event_times, double horizon)
      : event_times_(std::move(event_times)), horizon_(horizon) {
    double prev = 0.0;
    for (std::size_t k = 0; k < event_times_.size(); ++k) {
      const double t = event_times_[k];
      if (!std::isfinite(t) || !(t > prev))
        throw Error(ErrorKind::InvalidInterarrival,
                    "event time T_" + std::to_string(k + 1) + " must be finite and exceed T_" + std::to_string(k));
      prev = t;
    }
    if (!(horizon_ >= prev) || !std::isfinite(horizon_) || !(horizon_ > 0.0))
      throw Error(ErrorKind::Configuration, "horizon must be positive, finite and at least the last event time");
  }

  /// Path observed up to its last event.
  static CountingPath from_arrivals(std::span<const double> arrivals) {
    std::vector<double> events(arrivals.begin() + (arrivals.empty() ? 0 : 1), arrivals.end());
    const double horizon = events.empty() ? 1.0 : events.back();
    return CountingPath(std::move(events), horizon);
  }

  const std::vector<double>& event_times() const { return event_times_; }
  double horizon() const { return horizon_; }

 private:
  std::vector<double> event_times_;
  double horizon_;
};

/// N_t = #{k : T_k <= t} (right-continuous).
inline long long count_at(const CountingPath& path, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::Domain, "count_at: t must be nonnegative");
  if (t > path.horizon())
    throw Error(ErrorKind::OutOfHorizon,
                "t = " + std::to_string(t) + " lies beyond the observed horizon " + std::to_string(path.horizon()));
  const auto& ev = path.event_times();
  return std::upper_bound(ev.begin(), ev.end(), t) - ev.begin();
}

/// T_n = inf{t : N_t = n}: the jump locations of the step function, with T_0 = 0.
inline std::vector<double> arrivals_from_counting(const CountingPath& path) {
  std::vector<double> out{0.0};
  const auto& ev = path.event_times();
  // N jumps by one at each event; the n-th jump sits at the first t where N_t reaches n.
  long long n = 0;
  for (double t : ev) {
    const long long next = count_at(path, t);
    while (n < next) {
      ++n;
      out.push_back(t);
    }
  }
  return out;
}

struct CountSample {
  double t;
  double n;
};

/// Step function sampled at 0, at every event time and at the horizon.
inline std::vector<CountSample> step_function_samples(const CountingPath& path) {
  std::vector<CountSample> out{{0.0, 0.0}};
  const auto& ev = path.event_times();
  for (std::size_t k = 0; k < ev.size(); ++k) out.push_back({ev[k], static_cast<double>(k + 1)});
  if (ev.empty() || path.horizon() > ev.back()) out.push_back({path.horizon(), static_cast<double>(ev.size())});
  return out;
}

/// Checks the counting-process axioms on a sorted sample of (t, N_t):
///   (n1) N_0 = 0, (n2) N_t in N_0, (n3) right-continuity on the grid,
///   (n4) nondecreasing with unit jumps between adjacent grid points,
///   (n5) unbounded growth, which finite data cannot falsify and is reported
///        as informational with the observed maximum.
inline VerificationReport validate_counting_axioms(std::span<const CountSample> samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].t)) throw Error(ErrorKind::Ingestion, "sample times must be finite");
    if (samples[i].t < 0.0) throw Error(ErrorKind::Ingestion, "sample times must be nonnegative");
    if (i > 0 && samples[i].t < samples[i - 1].t)
      throw Error(ErrorKind::Ingestion, "samples must be sorted by t (row " + std::to_string(i + 1) + ")");
  }

  VerificationReport report;
  report.check = "counting-axioms";
  report.rule = DecisionRule::AllChildren;
  report.sizes["samples"] = samples.size();

  auto sub = [](const char* name, std::size_t violations, std::string detail) {
    VerificationReport r;
    r.check = name;
    r.rule = DecisionRule::StatisticAtMostThreshold;
    r.statistic = static_cast<double>(violations);
    r.threshold = 0.0;
    if (!detail.empty()) r.caveats.push_back(std::move(detail));
    return r.finalize();
  };

  // (n1)
  std::size_t n1 = 0;
  std::string n1_detail;
  bool saw_zero = false;
  for (const auto& s : samples) {
    if (s.t != 0.0) break;
    saw_zero = true;
    if (s.n != 0.0) {
      ++n1;
      n1_detail = "N_0 = " + std::to_string(s.n);
    }
  }
  if (!saw_zero) n1_detail = "no sample at t = 0; (n1) not observed";
  report.children.push_back(sub("n1:N0=0", n1, n1_detail));

  // (n2)
  std::size_t n2 = 0;
  std::string n2_detail;
  for (const auto& s : samples) {
    if (!(s.n >= 0.0) || !std::isfinite(s.n) || std::floor(s.n) != s.n) {
      if (n2 == 0) n2_detail = "first offending value N = " + std::to_string(s.n) + " at t = " + std::to_string(s.t);
      ++n2;
    }
  }
  report.children.push_back(sub("n2:integer-valued", n2, n2_detail));

  // (n3) N_t = inf over later samples: nothing later may be smaller, and
  // repeated t must agree.
  std::size_t n3 = 0;
  std::string n3_detail;
  double suffix_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = samples.size(); i-- > 0;) {
    if (samples[i].n > suffix_min) {
      if (n3 == 0) n3_detail = "N exceeds a later value at t = " + std::to_string(samples[i].t);
      ++n3;
    }
    if (i + 1 < samples.size() && samples[i + 1].t == samples[i].t && samples[i + 1].n != samples[i].n) {
      if (n3 == 0) n3_detail = "conflicting values at t = " + std::to_string(samples[i].t);
      ++n3;
    }
    suffix_min = std::min(suffix_min, samples[i].n);
  }
  report.children.push_back(sub("n3:right-continuous", n3, n3_detail));

  // (n4) sup_{u<t} N_u <= N_t <= sup_{u<t} N_u + 1
  std::size_t n4 = 0;
  std::string n4_detail;
  double running_sup = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && samples[i].t > samples[i - 1].t) {
      const bool low = samples[i].n < running_sup;
      const bool high = samples[i].n > running_sup + 1.0;
      if (low || high) {
        if (n4 == 0)
          n4_detail = std::string(high ? "jump larger than one" : "decrease") + " at t = " + std::to_string(samples[i].t);
        ++n4;
      }
    }
    running_sup = std::max(running_sup, samples[i].n);
  }
  report.children.push_back(sub("n4:unit-jumps", n4, n4_detail));

  VerificationReport n5;
  n5.check = "n5:unbounded";
  n5.rule = DecisionRule::Informational;
  n5.statistic = samples.empty() ? 0.0 : running_sup;
  n5.caveats.push_back("not falsifiable on finite data; statistic is the observed maximum of N");
  report.children.push_back(n5.finalize());

  return report.finalize();
}

/// Reads a `t,N` CSV (header required).
inline std::vector<CountSample> read_counting_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Ingestion, "empty counting CSV");
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  {
    const auto comma = line.find(',');
    if (comma == std::string::npos || trim(line.substr(0, comma)) != "t" || trim(line.substr(comma + 1)) != "N")
      throw Error(ErrorKind::Ingestion, "counting CSV header must be `t,N`");
  }
  std::vector<CountSample> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::Ingestion, "row " + std::to_string(row) + ": expected two columns");
    try {
      std::size_t pos = 0;
      const std::string a = trim(line.substr(0, comma));
      const std::string b = trim(line.substr(comma + 1));
      const double t = std::stod(a, &pos);
      if (pos != a.size()) throw std::invalid_argument("t");
      const double n = std::stod(b, &pos);
      if (pos != b.size()) throw std::invalid_argument("N");
      out.push_back({t, n});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Ingestion, "row " + std::to_string(row) + ": unparsable number");
    }
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].t < out[i - 1].t) throw Error(ErrorKind::Ingestion, "row " + std::to_string(i + 2) + ": t not sorted");
  return out;
}

inline void write_counting_csv(std::ostream& out, std::span<const CountSample> samples) {
  out << "t,N\n";
  char buf[64];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.t, s.n);
    out << buf;
  }
}

}  // namespace mrplab

#endif  // MRPLAB_COUNTING_HPP
