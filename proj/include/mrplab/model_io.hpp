#ifndef MRPLAB_MODEL_IO_HPP
#define MRPLAB_MODEL_IO_HPP

// JSON model and query files. The schema is strict: unknown fields are
// rejected, and every diagnostic names the JSON path that failed.
//
// Model file:
//   {"kernel": {"family": "exponential" | "gamma",
//               "rate_map": {"a": <slope>, "b": <intercept>},
//               "shape": <number> | {"param": <theta index>},
//               "rate_param": <theta index>},
//    "mixing": {"kind": "dirac", "theta": [..]}
//            | {"kind": "gamma", "rate": .., "shape": ..}
//            | {"kind": "product", "factors": [{"dist": "uniform", "lo": .., "hi": ..}
//                                              | {"dist": "gamma", "rate": .., "shape": ..}
//                                              | {"dist": "beta", "a": .., "b": .., "lo": .., "hi": ..}]}
//            | {"kind": "discrete", "atoms": [[..], ..], "weights": [..]},
//    "meta": {"name": .., "description": .., "expects_rejection": bool}}
//
// Query file: a JSON array whose items are
//   {"id": .., "upper": [w_1, .., w_r]}                  P(W_k <= w_k)
//   {"id": .., "box": [[a_1, b_1], ..]}                   P(W_k in (a_k, b_k]); null = unbounded
//   {"id": .., "count": {"t": .., "n": ..}}               P(N_t = n)
// "box"/"upper" items may add "theta": [[lo, hi], ..] to restrict theta.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrplab/construction.hpp"
#include "mrplab/error.hpp"
#include "mrplab/exact.hpp"
#include "mrplab/kernels.hpp"

namespace mrplab {

using nlohmann::json;

struct ModelFile {
  MrpModel model;
  std::string name;
  std::string description;
  bool expects_rejection = false;
};

namespace detail {

inline Error schema_error(const std::string& path, const std::string& msg) {
  return Error(ErrorKind::Schema, (path.empty() ? std::string("/") : path) + ": " + msg);
}

inline void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw schema_error(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw schema_error(path + "/" + key, "unknown field");
}

inline const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw schema_error(path + "/" + key, "missing required field");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw schema_error(path, "expected a number");
  return j.get<double>();
}

inline double number_at(const json& j, const std::string& path, const char* key) {
  return number(require(j, path, key), path + "/" + key);
}

inline double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), path + "/" + key) : fallback;
}

inline int index_at(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0 || j.get<long long>() > 64)
    throw schema_error(path, "expected a small nonnegative integer");
  return j.get<int>();
}

inline std::string string_at(const json& j, const std::string& path, const char* key) {
  const json& v = require(j, path, key);
  if (!v.is_string()) throw schema_error(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

inline Theta theta_vector(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty()) throw schema_error(path, "expected a number or a nonempty array of numbers");
  Theta out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
  return out;
}

// null means unbounded in the given direction
inline double bound(const json& j, const std::string& path, double if_null) {
  if (j.is_null()) return if_null;
  return number(j, path);
}

inline std::vector<Interval> intervals(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw schema_error(path, "expected a nonempty array of [lo, hi] pairs");
  std::vector<Interval> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (!j[i].is_array() || j[i].size() != 2) throw schema_error(p, "expected [lo, hi]");
    out.push_back({bound(j[i][0], p + "/0", -kInf), bound(j[i][1], p + "/1", kInf)});
  }
  return out;
}

// Config errors raised while building carry the field they came from.
template <typename F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    throw schema_error(path, e.what());
  }
}

}  // namespace detail

inline KernelSpec parse_kernel(const json& j, const std::string& path = "/kernel") {
  using namespace detail;
  only_keys(j, path, {"family", "rate_map", "shape", "rate_param"});
  KernelSpec k;
  const std::string family = string_at(j, path, "family");
  if (family == "exponential") k.family = KernelFamily::Exponential;
  else if (family == "gamma") k.family = KernelFamily::Gamma;
  else if (family == "poisson") k.family = KernelFamily::Poisson;
  else throw schema_error(path + "/family", "unknown kernel family '" + family + "'");
  if (j.contains("rate_map")) {
    const json& rm = j.at("rate_map");
    only_keys(rm, path + "/rate_map", {"a", "b"});
    k.rate_map.slope = number_or(rm, path + "/rate_map", "a", 0.0);
    k.rate_map.intercept = number_or(rm, path + "/rate_map", "b", 1.0);
  }
  if (j.contains("rate_param")) k.rate_param = index_at(j.at("rate_param"), path + "/rate_param");
  if (j.contains("shape")) {
    if (k.family != KernelFamily::Gamma) throw schema_error(path + "/shape", "only gamma kernels take a shape");
    const json& s = j.at("shape");
    if (s.is_object()) {
      only_keys(s, path + "/shape", {"param"});
      k.shape_param = index_at(require(s, path + "/shape", "param"), path + "/shape/param");
    } else {
      k.shape = number(s, path + "/shape");
    }
  } else if (k.family == KernelFamily::Gamma) {
    throw schema_error(path + "/shape", "gamma kernel needs a shape");
  }
  at_path(path, [&] {
    k.validate();
    return 0;
  });
  return k;
}

inline Factor parse_factor(const json& j, const std::string& path) {
  using namespace detail;
  const std::string dist = string_at(j, path, "dist");
  if (dist == "uniform") {
    only_keys(j, path, {"dist", "lo", "hi"});
    return UniformFactor{number_at(j, path, "lo"), number_at(j, path, "hi")};
  }
  if (dist == "gamma") {
    only_keys(j, path, {"dist", "rate", "shape"});
    return GammaFactor{number_at(j, path, "rate"), number_at(j, path, "shape")};
  }
  if (dist == "beta") {
    only_keys(j, path, {"dist", "a", "b", "lo", "hi"});
    return BetaFactor{number_at(j, path, "a"), number_at(j, path, "b"), number_or(j, path, "lo", 0.0),
                      number_or(j, path, "hi", 1.0)};
  }
  throw schema_error(path + "/dist", "unknown factor distribution '" + dist + "'");
}

inline MixingMeasure parse_mixing(const json& j, const std::string& path = "/mixing") {
  using namespace detail;
  const std::string kind = string_at(j, path, "kind");
  if (kind == "dirac") {
    only_keys(j, path, {"kind", "theta"});
    const Theta atom = theta_vector(require(j, path, "theta"), path + "/theta");
    return at_path(path, [&] { return MixingMeasure::dirac(atom); });
  }
  if (kind == "gamma") {
    only_keys(j, path, {"kind", "rate", "shape"});
    const double rate = number_at(j, path, "rate");
    const double shape = number_at(j, path, "shape");
    return at_path(path, [&] { return MixingMeasure::gamma(rate, shape); });
  }
  if (kind == "product") {
    only_keys(j, path, {"kind", "factors"});
    const json& fs = require(j, path, "factors");
    if (!fs.is_array() || fs.empty()) throw schema_error(path + "/factors", "expected a nonempty array");
    std::vector<Factor> factors;
    for (std::size_t i = 0; i < fs.size(); ++i) factors.push_back(parse_factor(fs[i], path + "/factors/" + std::to_string(i)));
    return at_path(path, [&] { return MixingMeasure::product(factors); });
  }
  if (kind == "discrete") {
    only_keys(j, path, {"kind", "atoms", "weights"});
    const json& atoms = require(j, path, "atoms");
    const json& weights = require(j, path, "weights");
    if (!atoms.is_array() || !weights.is_array()) throw schema_error(path, "atoms and weights must be arrays");
    std::vector<Theta> as;
    std::vector<double> ws;
    for (std::size_t i = 0; i < atoms.size(); ++i) as.push_back(theta_vector(atoms[i], path + "/atoms/" + std::to_string(i)));
    for (std::size_t i = 0; i < weights.size(); ++i) ws.push_back(number(weights[i], path + "/weights/" + std::to_string(i)));
    return at_path(path, [&] { return MixingMeasure::discrete(as, ws); });
  }
  throw schema_error(path + "/kind", "unknown mixing kind '" + kind + "'");
}

inline ModelFile parse_model(const json& j) {
  using namespace detail;
  only_keys(j, "", {"kernel", "mixing", "meta"});
  KernelSpec kernel = parse_kernel(require(j, "", "kernel"));
  MixingMeasure mixing = parse_mixing(require(j, "", "mixing"));
  ModelFile file{at_path("", [&] { return build_model(kernel, mixing); }), {}, {}, false};
  if (j.contains("meta")) {
    const json& meta = j.at("meta");
    only_keys(meta, "/meta", {"name", "description", "expects_rejection"});
    if (meta.contains("name")) file.name = string_at(meta, "/meta", "name");
    if (meta.contains("description")) file.description = string_at(meta, "/meta", "description");
    if (meta.contains("expects_rejection")) {
      if (!meta.at("expects_rejection").is_boolean())
        throw schema_error("/meta/expects_rejection", "expected a boolean");
      file.expects_rejection = meta.at("expects_rejection").get<bool>();
    }
  }
  return file;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Schema, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, path + ": malformed JSON: " + e.what());
  }
}

inline ModelFile load_model_file(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return parse_model(j);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw Error(ErrorKind::Schema, path + ": " + e.what());
    throw;
  }
}

inline json to_json(const Factor& f) {
  return std::visit(
      [](const auto& g) -> json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, UniformFactor>) return {{"dist", "uniform"}, {"lo", g.lo}, {"hi", g.hi}};
        else if constexpr (std::is_same_v<T, GammaFactor>) return {{"dist", "gamma"}, {"rate", g.rate}, {"shape", g.shape}};
        else return {{"dist", "beta"}, {"a", g.a}, {"b", g.b}, {"lo", g.lo}, {"hi", g.hi}};
      },
      f);
}

inline json to_json(const KernelSpec& k) {
  json j{{"family", to_string(k.family)}, {"rate_map", {{"a", k.rate_map.slope}, {"b", k.rate_map.intercept}}}};
  if (k.rate_param != 0) j["rate_param"] = k.rate_param;
  if (k.family == KernelFamily::Gamma) {
    if (k.shape_param >= 0) j["shape"] = {{"param", k.shape_param}};
    else j["shape"] = k.shape;
  }
  return j;
}

inline json to_json(const MixingMeasure& mu) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiracMixing>) {
          return {{"kind", "dirac"}, {"theta", m.atom}};
        } else if constexpr (std::is_same_v<T, GammaMixing>) {
          return {{"kind", "gamma"}, {"rate", m.rate}, {"shape", m.shape}};
        } else if constexpr (std::is_same_v<T, ProductMixing>) {
          json fs = json::array();
          for (const auto& f : m.factors) fs.push_back(to_json(f));
          return {{"kind", "product"}, {"factors", fs}};
        } else {
          return {{"kind", "discrete"}, {"atoms", m.atoms}, {"weights", m.weights}};
        }
      },
      mu.kind());
}

inline json to_json(const MrpModel& model) { return {{"kernel", to_json(model.kernel)}, {"mixing", to_json(model.mixing)}}; }

/// FNV-1a over the canonical (sorted-key) JSON dump of kernel and mixing.
inline std::uint64_t model_hash(const MrpModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(model).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Query {
  std::string id;
  enum class Type { Box, Count } type = Type::Box;
  BoxQuery box;
  std::optional<Box> theta_event;
  double t = 0.0;
  long long n = 0;
};

inline std::vector<Query> parse_queries(const json& j) {
  using namespace detail;
  if (!j.is_array()) throw schema_error("", "query file must be a JSON array");
  std::vector<Query> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "/" + std::to_string(i);
    const json& item = j[i];
    only_keys(item, path, {"id", "upper", "box", "count", "theta"});
    Query q;
    q.id = item.contains("id") ? (item.at("id").is_string() ? item.at("id").get<std::string>() : item.at("id").dump())
                               : std::to_string(i);
    const int forms = static_cast<int>(item.contains("upper")) + static_cast<int>(item.contains("box")) +
                      static_cast<int>(item.contains("count"));
    if (forms != 1) throw schema_error(path, "exactly one of upper, box, count is required");
    if (item.contains("upper")) {
      const json& up = item.at("upper");
      if (!up.is_array() || up.empty()) throw schema_error(path + "/upper", "expected a nonempty array");
      for (std::size_t k = 0; k < up.size(); ++k)
        q.box.bounds.push_back({-kInf, bound(up[k], path + "/upper/" + std::to_string(k), kInf)});
    } else if (item.contains("box")) {
      q.box.bounds = intervals(item.at("box"), path + "/box");
    } else {
      const json& c = item.at("count");
      only_keys(c, path + "/count", {"t", "n"});
      q.type = Query::Type::Count;
      q.t = number_at(c, path + "/count", "t");
      const json& n = require(c, path + "/count", "n");
      if (!n.is_number_integer() || n.get<long long>() < 0) throw schema_error(path + "/count/n", "expected an integer >= 0");
      q.n = n.get<long long>();
    }
    if (item.contains("theta")) {
      if (q.type == Query::Type::Count) throw schema_error(path + "/theta", "theta restriction applies to boxes only");
      q.theta_event = intervals(item.at("theta"), path + "/theta");
    }
    if (q.type == Query::Type::Box) at_path(path, [&] {
        q.box.validate();
        return 0;
      });
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace mrplab

#endif  // MRPLAB_MODEL_IO_HPP
