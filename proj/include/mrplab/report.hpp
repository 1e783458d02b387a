#ifndef MRPLAB_REPORT_HPP
#define MRPLAB_REPORT_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace mrplab {

inline constexpr const char* kReportSchema = "mrplab.verification-report/1";

/// How `passed` follows from the recorded numbers.
enum class DecisionRule {
  PValueAtLeastLevel,       // passed iff p_value >= level
  StatisticAtMostThreshold, // passed iff statistic <= threshold
  AllChildren,              // passed iff every non-skipped child passed
  Informational,            // never fails; carries a caveat
};

inline const char* to_string(DecisionRule r) {
  switch (r) {
    case DecisionRule::PValueAtLeastLevel: return "p_value>=level";
    case DecisionRule::StatisticAtMostThreshold: return "statistic<=threshold";
    case DecisionRule::AllChildren: return "all_children";
    case DecisionRule::Informational: return "informational";
  }
  return "?";
}

/// Result of one statistical or exact check. Everything needed to re-derive
/// `passed` is stored alongside it.
struct VerificationReport {
  std::string check;
  DecisionRule rule = DecisionRule::AllChildren;
  double statistic = std::nan("");
  std::optional<double> reference;
  std::optional<double> threshold;
  std::optional<double> p_value;
  double level = std::nan("");
  bool passed = false;
  bool skipped = false;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::uint64_t> sizes;
  std::vector<std::string> caveats;
  std::vector<VerificationReport> children;

  /// Decide `passed` from the recorded fields.
  bool decide() const {
    switch (rule) {
      case DecisionRule::PValueAtLeastLevel:
        return p_value.has_value() && *p_value >= level;
      case DecisionRule::StatisticAtMostThreshold:
        return threshold.has_value() && statistic <= *threshold;
      case DecisionRule::AllChildren:
        for (const auto& c : children)
          if (!c.skipped && !c.decide()) return false;
        return true;
      case DecisionRule::Informational:
        return true;
    }
    return false;
  }

  VerificationReport& finalize() {
    passed = skipped || decide();
    return *this;
  }

  static VerificationReport skipped_check(std::string name, std::string reason) {
    VerificationReport r;
    r.check = std::move(name);
    r.rule = DecisionRule::Informational;
    r.skipped = true;
    r.passed = true;
    r.caveats.push_back(std::move(reason));
    return r;
  }
};

inline nlohmann::json to_json(const VerificationReport& r, bool top_level = true) {
  using nlohmann::json;
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  if (top_level) j["schema"] = kReportSchema;
  j["check"] = r.check;
  j["rule"] = to_string(r.rule);
  j["statistic"] = num(r.statistic);
  j["reference"] = r.reference ? num(*r.reference) : json(nullptr);
  j["threshold"] = r.threshold ? num(*r.threshold) : json(nullptr);
  j["p_value"] = r.p_value ? num(*r.p_value) : json(nullptr);
  j["level"] = num(r.level);
  j["passed"] = r.passed;
  j["skipped"] = r.skipped;
  j["seeds"] = r.seeds;
  j["sizes"] = r.sizes;
  j["caveats"] = r.caveats;
  j["children"] = json::array();
  for (const auto& c : r.children) j["children"].push_back(to_json(c, false));
  return j;
}

namespace detail {
inline void print_report(std::ostream& os, const VerificationReport& r, int depth) {
  char line[256];
  const char* verdict = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
  std::snprintf(line, sizeof line, "%-*s%-40s %-4s stat=%-12.6g", depth * 2, "", r.check.c_str(), verdict,
                r.statistic);
  os << line;
  if (r.threshold) {
    std::snprintf(line, sizeof line, " thr=%-12.6g", *r.threshold);
    os << line;
  }
  if (r.p_value) {
    std::snprintf(line, sizeof line, " p=%-10.4g level=%g", *r.p_value, r.level);
    os << line;
  }
  os << '\n';
  for (const auto& c : r.children) print_report(os, c, depth + 1);
}
}  // namespace detail

/// Human-readable table, one line per check.
inline void print_report(std::ostream& os, const VerificationReport& r) { detail::print_report(os, r, 0); }

}  // namespace mrplab

#endif  // MRPLAB_REPORT_HPP
