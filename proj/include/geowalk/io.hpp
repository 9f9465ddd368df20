#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geowalk/boxes.hpp"
#include "geowalk/error.hpp"
#include "geowalk/graph.hpp"
#include "geowalk/network.hpp"
#include "geowalk/point_process.hpp"
#include "geowalk/version.hpp"

namespace geowalk {

using json = nlohmann::ordered_json;

/// Provenance attached to every emitted record.
struct Stamp {
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline void stamp(json& record, const Stamp& s) {
  record["config_hash"] = s.config_hash;
  record["seed"] = s.seed;
  record["version"] = kVersion;
}

/// Shortest decimal string that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParameterError("not a number: '" + s + "'");
  return x;
}

// ---------------------------------------------------------------------------
// Core value types.

inline json coords_json(const Point& p, int dim) {
  json a = json::array();
  for (int k = 0; k < dim; ++k) a.push_back(p[k]);
  return a;
}

inline Point point_from_json(const json& a, int dim) {
  if (!a.is_array() || static_cast<int>(a.size()) != dim) throw ParameterError("expected " + std::to_string(dim) + " coordinates");
  Point p{0.0, 0.0, 0.0};
  for (int k = 0; k < dim; ++k) p[k] = a[k].get<double>();
  return p;
}

inline json window_json(const Window& w) {
  return json{{"lower", coords_json(w.lower, w.dimension)}, {"sides", coords_json(w.sides, w.dimension)}, {"buffer", w.buffer}};
}

inline Window window_from_json(const json& j, int dim) {
  Window w;
  w.dimension = dim;
  w.lower = point_from_json(j.at("lower"), dim);
  w.sides = point_from_json(j.at("sides"), dim);
  w.buffer = j.value("buffer", 0.0);
  w.validate();
  return w;
}

inline std::string to_string(ProcessKind k) {
  switch (k) {
    case ProcessKind::poisson:
      return "poisson";
    case ProcessKind::matern_cluster:
      return "matern_cluster";
    case ProcessKind::matern_hardcore:
      return "matern_hardcore";
  }
  return "?";
}

inline ProcessKind process_kind_from_string(const std::string& s) {
  if (s == "poisson" || s == "ppp") return ProcessKind::poisson;
  if (s == "matern_cluster" || s == "mcp") return ProcessKind::matern_cluster;
  if (s == "matern_hardcore" || s == "mhp") return ProcessKind::matern_hardcore;
  throw ParameterError("unknown process kind '" + s + "'");
}

inline json process_json(const ProcessDescriptor& d) {
  json params{{"intensity", d.intensity}};
  if (d.kind == ProcessKind::matern_cluster) {
    params["daughter_intensity"] = d.daughter_intensity;
    params["radius"] = d.radius;
  }
  if (d.kind == ProcessKind::matern_hardcore) {
    params["radius"] = d.radius;
    params["variant"] = d.variant == HardcoreVariant::I ? "I" : "II";
  }
  return json{{"kind", to_string(d.kind)}, {"params", params}};
}

inline ProcessDescriptor process_from_json(const json& j) {
  ProcessDescriptor d;
  d.kind = process_kind_from_string(j.at("kind").get<std::string>());
  const json& p = j.contains("params") ? j.at("params") : j;
  d.intensity = p.value("intensity", 1.0);
  d.daughter_intensity = p.value("daughter_intensity", 0.0);
  d.radius = p.value("radius", 0.0);
  const std::string v = p.value("variant", std::string("I"));
  if (v != "I" && v != "II") throw ParameterError("hardcore variant must be I or II");
  d.variant = v == "I" ? HardcoreVariant::I : HardcoreVariant::II;
  d.validate();
  return d;
}

inline json conductance_json(const ConductanceModel& m) {
  json j{{"kind", m.name()}};
  if (m.kind == ConductanceKind::constant) j["kappa"] = m.kappa;
  if (m.kind == ConductanceKind::exponential) j["rate"] = m.a;
  if (m.kind == ConductanceKind::power) j["exponent"] = m.p;
  return j;
}

inline ConductanceModel conductance_from_json(const json& j) {
  const std::string k = j.at("kind").get<std::string>();
  ConductanceModel m;
  if (k == "unit")
    m = ConductanceModel::unit();
  else if (k == "constant")
    m = ConductanceModel::constant(j.value("kappa", 1.0));
  else if (k == "exponential")
    m = ConductanceModel::exponential(j.value("rate", 1.0));
  else if (k == "power")
    m = ConductanceModel::power(j.value("exponent", 1.0));
  else
    throw ParameterError("unknown conductance kind '" + k + "'");
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Point sets: CSV rows plus a JSON sidecar.

inline void write_points_csv(const PointSet& s, std::ostream& os) {
  const int dim = s.dimension();
  const bool marks = !s.marks.empty();
  os << "x,y";
  if (dim == 3) os << ",z";
  if (marks) os << ",mark";
  os << '\n';
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    for (int k = 0; k < dim; ++k) os << (k ? "," : "") << format_double(s.points[i][k]);
    if (marks) os << ',' << format_double(s.marks[i]);
    os << '\n';
  }
}

inline json points_metadata(const PointSet& s) {
  return json{{"dimension", s.dimension()}, {"window", window_json(s.window)}, {"process", process_json(s.process)}, {"seed", s.seed}};
}

inline PointSet read_points(std::istream& csv, const json& meta) {
  PointSet s;
  const int dim = meta.at("dimension").get<int>();
  if (dim != 2 && dim != 3) throw ParameterError("point file dimension must be 2 or 3");
  s.window = window_from_json(meta.at("window"), dim);
  s.process = process_from_json(meta.at("process"));
  s.seed = meta.value("seed", std::uint64_t{0});
  std::string line;
  if (!std::getline(csv, line)) throw ParameterError("point file is empty");
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
  }
  const bool marks = !header.empty() && header.back() == "mark";
  if (static_cast<int>(header.size()) != dim + (marks ? 1 : 0)) throw ParameterError("point file header does not match dimension");
  std::size_t row = 1;
  while (std::getline(csv, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<std::string> f;
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    if (f.size() != header.size()) throw ParameterError("point file row " + std::to_string(row) + " has the wrong field count");
    Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = parse_double(f[k]);
    s.points.push_back(p);
    if (marks) s.marks.push_back(parse_double(f.back()));
  }
  s.ids.resize(s.points.size());
  for (std::size_t i = 0; i < s.ids.size(); ++i) s.ids[i] = i;
  return s;
}

// ---------------------------------------------------------------------------
// Graphs: NDJSON header, vertex and edge records.

inline void write_graph_ndjson(const GeometricGraph& g, std::ostream& os, const Stamp& st,
                               const std::vector<double>* conductance = nullptr,
                               const ConductanceModel* model = nullptr) {
  json h{{"type", "header"},
         {"kind", to_string(g.kind)},
         {"dimension", g.dimension},
         {"window", window_json(g.window)},
         {"trimmed", g.trimmed},
         {"untrusted_boundary", g.untrusted_boundary},
         {"trim_warning", g.trim_warning},
         {"detached_vertices", g.detached_vertices},
         {"dropped_unbounded", g.dropped_unbounded},
         {"vertices", g.vertices.size()},
         {"edges", g.edges.size()},
         {"fingerprint", g.fingerprint}};
  if (model) h["conductance"] = conductance_json(*model);
  stamp(h, st);
  os << h.dump() << '\n';
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    json v{{"type", "vertex"}, {"id", i}, {"coords", coords_json(g.vertices[i], g.dimension)}};
    if (i < g.origin.size()) v[g.kind == GraphKind::VS ? "simplex" : "point"] = g.origin[i];
    v["trusted"] = i < g.vertex_trusted.size() ? g.vertex_trusted[i] != 0 : true;
    os << v.dump() << '\n';
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    json r{{"type", "edge"}, {"u", g.edges[e].u}, {"v", g.edges[e].v}, {"length", g.edges[e].length}};
    r["trusted"] = e < g.edge_trusted.size() ? g.edge_trusted[e] != 0 : true;
    if (conductance) r["C"] = (*conductance)[e];
    os << r.dump() << '\n';
  }
}

struct GraphFile {
  GeometricGraph graph;
  std::optional<std::vector<double>> conductance;
  std::optional<ConductanceModel> model;
};

inline GraphFile read_graph_ndjson(std::istream& is) {
  GraphFile out;
  auto& g = out.graph;
  std::string line;
  bool header = false;
  std::vector<double> C;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json r;
    try {
      r = json::parse(line);
    } catch (const json::exception& e) {
      throw ParameterError("graph file line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string type = r.at("type").get<std::string>();
    if (type == "header") {
      header = true;
      g.kind = graph_kind_from_string(r.at("kind").get<std::string>());
      g.dimension = r.at("dimension").get<int>();
      g.window = window_from_json(r.at("window"), g.dimension);
      g.trimmed = r.value("trimmed", false);
      g.untrusted_boundary = r.value("untrusted_boundary", false);
      g.trim_warning = r.value("trim_warning", false);
      g.detached_vertices = r.value("detached_vertices", std::size_t{0});
      g.dropped_unbounded = r.value("dropped_unbounded", std::size_t{0});
      g.fingerprint = r.value("fingerprint", std::uint64_t{0});
      if (r.contains("conductance")) out.model = conductance_from_json(r.at("conductance"));
    } else if (type == "vertex") {
      if (!header) throw ParameterError("graph file: vertex before header");
      if (r.at("id").get<std::size_t>() != g.vertices.size()) throw ParameterError("graph file: vertex ids must be 0, 1, ...");
      g.vertices.push_back(point_from_json(r.at("coords"), g.dimension));
      g.origin.push_back(r.contains("simplex") ? r["simplex"].get<std::int64_t>() : r.value("point", std::int64_t(g.origin.size())));
      g.vertex_trusted.push_back(r.value("trusted", true));
    } else if (type == "edge") {
      if (!header) throw ParameterError("graph file: edge before header");
      Edge e{r.at("u").get<int>(), r.at("v").get<int>(), r.at("length").get<double>()};
      const int n = static_cast<int>(g.vertices.size());
      if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n || e.u == e.v) throw ParameterError("graph file: bad edge endpoints");
      if (e.u > e.v) std::swap(e.u, e.v);
      g.edges.push_back(e);
      g.edge_trusted.push_back(r.value("trusted", true));
      if (r.contains("C")) C.push_back(r["C"].get<double>());
    }
  }
  if (!header) throw ParameterError("graph file has no header record");
  if (!C.empty()) {
    if (C.size() != g.edges.size()) throw ParameterError("graph file: conductance missing on some edges");
    out.conductance = std::move(C);
  }
  return out;
}

/// Network from a graph file: stored "C" values win over `fallback`.
inline Network network_from_file(const GraphFile& f, const ConductanceModel& fallback) {
  if (f.conductance) {
    Network net = make_network(f.graph, *f.conductance);
    net.model = f.model.value_or(fallback);
    return net;
  }
  return assign_conductances(f.graph, f.model.value_or(fallback));
}

// ---------------------------------------------------------------------------
// Box fields.

inline json lattice_json(const LatticePoint& z, int dim) {
  json a = json::array();
  for (int k = 0; k < dim; ++k) a.push_back(z[k]);
  return a;
}

inline void write_box_field_ndjson(const BoxField& f, std::ostream& os, const Stamp& st) {
  json h{{"type", "header"},
         {"variant", to_string(f.params.variant)},
         {"dimension", f.dimension},
         {"M", f.params.M},
         {"alpha", f.alpha},
         {"window", window_json(f.window)},
         {"boxes", f.boxes.size()},
         {"good", f.good_count()},
         {"partial_boxes", f.partial_boxes},
         {"paths", f.paths.size()},
         {"demoted_paths", f.demoted_paths()},
         {"hop_bound", f.hop_bound},
         {"length_bound", f.length_bound}};
  if (f.params.variant == BoxVariant::VS)
    h["c4"] = f.params.c4;
  else
    h["m"] = f.params.m;
  stamp(h, st);
  os << h.dump() << '\n';
  for (const auto& b : f.boxes) {
    json r{{"type", "box"},
           {"z", lattice_json(b.z, f.dimension)},
           {"good", b.good},
           {"demoted", b.demoted},
           {"count", b.count},
           {"empty_subboxes", b.empty_subboxes}};
    if (f.params.variant == BoxVariant::GAB) r["overfull_subboxes"] = b.overfull_subboxes;
    if (b.reference >= 0) {
      r["reference"] = b.reference;
      r["reference_point"] = coords_json(b.reference_point, f.dimension);
    }
    os << r.dump() << '\n';
  }
  for (const auto& p : f.paths) {
    json r{{"type", "path"},
           {"z1", lattice_json(p.z1, f.dimension)},
           {"z2", lattice_json(p.z2, f.dimension)},
           {"valid", p.valid},
           {"hops", p.hops},
           {"max_length", p.max_length},
           {"vertices", p.vertices}};
    if (!p.valid) r["failure"] = p.failure;
    if (f.params.variant == BoxVariant::VS) {
      r["stabbed_cells"] = p.stabbed_cells;
      r["cell_vertex_bound"] = p.cell_vertex_bound;
    } else {
      r["segments"] = p.segments;
      r["max_long_edges"] = p.max_long_edges;
      r["max_short_group"] = p.max_short_group;
      r["max_segment_squared_sum"] = p.max_segment_squared_sum;
      r["max_segment_radius"] = p.max_segment_radius;
    }
    os << r.dump() << '\n';
  }
}

}  // namespace geowalk
