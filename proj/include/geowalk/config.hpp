#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geowalk/io.hpp"

namespace geowalk {

/// Schema violation; `what()` starts with the JSON pointer of the field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& msg) : std::runtime_error(path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RecurrenceSettings {
  std::vector<int> ns;
  std::size_t replicas = 0;
};

struct AnnuliSettings {
  int i0 = 1;
  int imax = 1;
};

struct EnvelopeSettings {
  std::vector<int> indices;
  /// Estimated from the process when absent.
  std::optional<double> c1;
  std::optional<double> c2;
};

struct BoxSettings {
  BoxParameters params;
  bool paths = true;
  bool rough_embedding = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  ProcessDescriptor process = ProcessDescriptor::poisson(1.0);
  Window window = Window::cube(2, 0.0, 40.0, 8.0);
  std::vector<GraphKind> graphs{GraphKind::DT};
  ConductanceModel conductance = ConductanceModel::unit();
  std::optional<RecurrenceSettings> recurrence;
  std::optional<AnnuliSettings> annuli;
  std::optional<EnvelopeSettings> envelopes;
  std::optional<BoxSettings> boxes;
  std::string output = "geowalk-out";
  /// 0 = available parallelism.
  unsigned threads = 0;
};

namespace detail {

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(path + "/" + it.key(), "unknown field");
}

template <class T>
T field(const json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "/" + key, "wrong type");
  }
}

inline double positive(const json& j, const std::string& path, const char* key, double fallback) {
  const double x = field<double>(j, path, key, fallback);
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(path + "/" + key, "must be > 0");
  return x;
}

inline std::vector<int> int_list(const json& j, const std::string& path, const char* key) {
  const auto v = field<std::vector<int>>(j, path, key, {});
  if (v.empty()) throw ConfigError(path + "/" + key, "must be a nonempty list of integers");
  for (int x : v)
    if (x < 1) throw ConfigError(path + "/" + key, "entries must be >= 1");
  return v;
}

/// Wraps library validation so the message carries the field path.
template <class F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  ExperimentConfig c;
  allow_keys(j, "", {"seed", "process", "window", "graphs", "conductance", "analysis", "output", "threads"});
  c.seed = field<std::uint64_t>(j, "", "seed", c.seed);
  c.threads = field<unsigned>(j, "", "threads", c.threads);
  c.output = field<std::string>(j, "", "output", c.output);
  if (j.contains("process")) {
    const json& p = j["process"];
    allow_keys(p, "/process", {"kind", "params"});
    if (!p.contains("kind")) throw ConfigError("/process/kind", "required");
    if (p.contains("params")) allow_keys(p["params"], "/process/params", {"intensity", "daughter_intensity", "radius", "variant"});
    c.process = at_path("/process", [&] { return process_from_json(p); });
  }
  if (j.contains("window")) {
    const json& w = j["window"];
    allow_keys(w, "/window", {"dimension", "lower", "sides", "side", "buffer"});
    const int dim = field<int>(w, "/window", "dimension", 2);
    if (dim != 2 && dim != 3) throw ConfigError("/window/dimension", "must be 2 or 3");
    if (w.contains("side")) {
      c.window = Window::cube(dim, field<double>(w, "/window", "lower", 0.0), positive(w, "/window", "side", 1.0),
                              field<double>(w, "/window", "buffer", 0.0));
    } else {
      json full = w;
      if (!full.contains("lower")) full["lower"] = std::vector<double>(dim, 0.0);
      if (!full.contains("sides")) throw ConfigError("/window/sides", "required (or give 'side')");
      c.window = at_path("/window", [&] { return window_from_json(full, dim); });
    }
    at_path("/window", [&] {
      c.window.validate();
      return 0;
    });
  }
  if (j.contains("graphs")) {
    const auto names = field<std::vector<std::string>>(j, "", "graphs", {});
    if (names.empty()) throw ConfigError("/graphs", "must list at least one of DT, GAB, VS");
    c.graphs.clear();
    for (std::size_t k = 0; k < names.size(); ++k)
      c.graphs.push_back(at_path("/graphs/" + std::to_string(k), [&] { return graph_kind_from_string(names[k]); }));
  }
  if (j.contains("conductance")) {
    allow_keys(j["conductance"], "/conductance", {"kind", "kappa", "rate", "exponent"});
    c.conductance = at_path("/conductance", [&] { return conductance_from_json(j["conductance"]); });
  }
  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    allow_keys(a, "/analysis", {"recurrence", "annuli", "envelopes", "boxes"});
    if (a.contains("recurrence")) {
      const json& r = a["recurrence"];
      allow_keys(r, "/analysis/recurrence", {"ns", "replicas"});
      c.recurrence = RecurrenceSettings{int_list(r, "/analysis/recurrence", "ns"),
                                        field<std::size_t>(r, "/analysis/recurrence", "replicas", 0)};
    }
    if (a.contains("annuli")) {
      const json& r = a["annuli"];
      allow_keys(r, "/analysis/annuli", {"i0", "imax"});
      AnnuliSettings s{field<int>(r, "/analysis/annuli", "i0", 1), field<int>(r, "/analysis/annuli", "imax", 0)};
      if (s.i0 < 1) throw ConfigError("/analysis/annuli/i0", "must be >= 1");
      if (s.imax < s.i0) throw ConfigError("/analysis/annuli/imax", "must be >= i0");
      c.annuli = s;
    }
    if (a.contains("envelopes")) {
      const json& r = a["envelopes"];
      allow_keys(r, "/analysis/envelopes", {"indices", "c1", "c2"});
      EnvelopeSettings s;
      s.indices = int_list(r, "/analysis/envelopes", "indices");
      if (r.contains("c1")) s.c1 = positive(r, "/analysis/envelopes", "c1", 1.0);
      if (r.contains("c2")) s.c2 = positive(r, "/analysis/envelopes", "c2", 1.0);
      c.envelopes = s;
    }
    if (a.contains("boxes")) {
      const json& r = a["boxes"];
      const std::string p = "/analysis/boxes";
      allow_keys(r, p, {"variant", "M", "c4", "m", "alpha", "paths", "rough_embedding"});
      BoxSettings s;
      const auto v = field<std::string>(r, p, "variant", "VS");
      if (v != "VS" && v != "GAB") throw ConfigError(p + "/variant", "must be VS or GAB");
      s.params.variant = v == "VS" ? BoxVariant::VS : BoxVariant::GAB;
      s.params.M = positive(r, p, "M", 8.0);
      if (s.params.M < 1.0) throw ConfigError(p + "/M", "must be >= 1");
      s.params.c4 = field<double>(r, p, "c4", 0.0);
      s.params.m = field<int>(r, p, "m", 0);
      s.params.alpha = field<long long>(r, p, "alpha", 0);
      if (s.params.alpha < 0) throw ConfigError(p + "/alpha", "must be >= 0");
      if (s.params.variant == BoxVariant::GAB && s.params.m < 1) throw ConfigError(p + "/m", "Gabriel boxes need m >= 1");
      if (s.params.variant == BoxVariant::GAB && s.params.alpha > 0 && s.params.alpha % 2 == 0)
        throw ConfigError(p + "/alpha", "must be odd for Gabriel boxes");
      if (s.params.variant == BoxVariant::VS && r.contains("c4") && !(s.params.c4 > 0.0))
        throw ConfigError(p + "/c4", "must be > 0");
      if (s.params.variant == BoxVariant::VS && !r.contains("c4")) {
        if (c.process.kind != ProcessKind::poisson) throw ConfigError(p + "/c4", "required for non-Poisson processes");
        s.params.c4 = poisson_c4(c.process.intensity);
      }
      s.paths = field<bool>(r, p, "paths", true);
      s.rough_embedding = field<bool>(r, p, "rough_embedding", true);
      c.boxes = s;
    }
  }
  return c;
}

/// Canonical JSON of the resolved configuration (every field explicit).
inline json config_json(const ExperimentConfig& c, bool with_runtime = true) {
  json j;
  j["seed"] = c.seed;
  j["process"] = process_json(c.process);
  json w = window_json(c.window);
  w["dimension"] = c.window.dimension;
  j["window"] = w;
  json g = json::array();
  for (auto k : c.graphs) g.push_back(to_string(k));
  j["graphs"] = g;
  j["conductance"] = conductance_json(c.conductance);
  json a = json::object();
  if (c.recurrence) a["recurrence"] = json{{"ns", c.recurrence->ns}, {"replicas", c.recurrence->replicas}};
  if (c.annuli) a["annuli"] = json{{"i0", c.annuli->i0}, {"imax", c.annuli->imax}};
  if (c.envelopes) {
    json e{{"indices", c.envelopes->indices}};
    if (c.envelopes->c1) e["c1"] = *c.envelopes->c1;
    if (c.envelopes->c2) e["c2"] = *c.envelopes->c2;
    a["envelopes"] = e;
  }
  if (c.boxes) {
    const auto& p = c.boxes->params;
    json b{{"variant", to_string(p.variant)}, {"M", p.M}};
    if (p.variant == BoxVariant::VS)
      b["c4"] = p.c4;
    else
      b["m"] = p.m;
    b["alpha"] = p.alpha;
    b["paths"] = c.boxes->paths;
    b["rough_embedding"] = c.boxes->rough_embedding;
    a["boxes"] = b;
  }
  j["analysis"] = a;
  if (with_runtime) {
    j["output"] = c.output;
    j["threads"] = c.threads;
  }
  return j;
}

/// FNV-1a (64 bit) as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, h >>= 4) out[k] = digits[h & 0xf];
  return out;
}

/// Hash of everything that affects results; output directory and thread
/// count are excluded.
inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(config_json(c, false).dump()); }

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

/// Seed resolution: an explicit flag, then GEOWALK_SEED, then the config.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GEOWALK_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError("$GEOWALK_SEED", "not an unsigned integer");
    return v;
  }
  return config_seed;
}

}  // namespace geowalk
