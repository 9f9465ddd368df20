#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geowalk/geowalk.hpp"
#include "geowalk/pipeline.hpp"

using namespace geowalk;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kAssertion = 3;
constexpr int kNumeric = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Output sink: a file, or stdout for "-".
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError(path, "cannot write");
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  ExperimentConfig base() const {
    ExperimentConfig c;
    if (!config_path.empty()) c = parse_config(load_json_file(config_path));
    c.seed = resolve_seed(seed, c.seed);
    if (threads != 0) c.threads = threads;
    return c;
  }
};

/// Process and window flags; unset flags keep the configured values.
struct SampleFlags {
  std::string process;
  double intensity = 1.0, daughter = 0.0, radius = 0.0;
  std::string variant = "I";
  int dim = 2;
  double side = 40.0, lower = 0.0, buffer = 8.0;
  CLI::Option *o_process{}, *o_intensity{}, *o_daughter{}, *o_radius{}, *o_variant{}, *o_dim{}, *o_side{}, *o_lower{},
      *o_buffer{};

  void add(CLI::App* app) {
    o_process = app->add_option("--process", process, "poisson | matern_cluster | matern_hardcore");
    o_intensity = app->add_option("--intensity", intensity, "Intensity (parent intensity for Matern processes)");
    o_daughter = app->add_option("--daughter-intensity", daughter, "Matern cluster daughter intensity");
    o_radius = app->add_option("--radius", radius, "Matern cluster or hardcore radius");
    o_variant = app->add_option("--variant", variant, "Hardcore variant I or II");
    o_dim = app->add_option("--dim", dim, "Dimension (2 or 3)");
    o_side = app->add_option("--side", side, "Window side length");
    o_lower = app->add_option("--lower", lower, "Window lower corner (all coordinates)");
    o_buffer = app->add_option("--buffer", buffer, "Buffer width around the window");
  }

  void apply(ExperimentConfig& c) const {
    if (o_process->count() || o_intensity->count() || o_daughter->count() || o_radius->count() || o_variant->count()) {
      json p = process_json(c.process);
      if (o_process->count()) p["kind"] = process;
      if (o_intensity->count()) p["params"]["intensity"] = intensity;
      if (o_daughter->count()) p["params"]["daughter_intensity"] = daughter;
      if (o_radius->count()) p["params"]["radius"] = radius;
      if (o_variant->count()) p["params"]["variant"] = variant;
      c.process = detail::at_path("--process", [&] { return process_from_json(p); });
    }
    if (o_dim->count() || o_side->count() || o_lower->count() || o_buffer->count()) {
      const int d = o_dim->count() ? dim : c.window.dimension;
      if (d != 2 && d != 3) throw ConfigError("--dim", "must be 2 or 3");
      const double sd = o_side->count() ? side : c.window.sides[0];
      const double lo = o_lower->count() ? lower : c.window.lower[0];
      const double bf = o_buffer->count() ? buffer : c.window.buffer;
      c.window = Window::cube(d, lo, sd, bf);
      detail::at_path("--side", [&] {
        c.window.validate();
        return 0;
      });
    }
  }
};

struct ConductanceFlags {
  std::string kind;
  double kappa = 1.0, rate = 1.0, exponent = 1.0;
  CLI::Option *o_kind{}, *o_kappa{}, *o_rate{}, *o_exponent{};

  void add(CLI::App* app) {
    o_kind = app->add_option("--conductance", kind, "unit | constant | exponential | power");
    o_kappa = app->add_option("--kappa", kappa, "Constant conductance value");
    o_rate = app->add_option("--rate", rate, "Exponential decay rate: C(r) = exp(-rate r)");
    o_exponent = app->add_option("--exponent", exponent, "Power decay: C(r) = (1 + r)^-exponent");
  }

  bool given() const { return o_kind->count() > 0; }

  ConductanceModel model(const ConductanceModel& fallback) const {
    if (!given()) return fallback;
    json j{{"kind", kind}};
    if (o_kappa->count()) j["kappa"] = kappa;
    if (o_rate->count()) j["rate"] = rate;
    if (o_exponent->count()) j["exponent"] = exponent;
    return detail::at_path("--conductance", [&] { return conductance_from_json(j); });
  }
};

struct BoxFlags {
  std::string variant = "VS";
  double M = 8.0, c4 = 0.0;
  int m = 0;
  long long alpha = 0;

  void add(CLI::App* app) {
    app->add_option("--variant", variant, "VS or GAB")->check(CLI::IsMember({"VS", "GAB"}));
    app->add_option("--M", M, "Box side M >= 1");
    app->add_option("--c4", c4, "VS count constant (default: lambda (e - 1) for Poisson input)");
    app->add_option("--m", m, "Gabriel per-sub-box cap");
    app->add_option("--alpha", alpha, "Sub-box divisions per axis (0 = theoretical value)");
  }

  BoxParameters params(const PointSet& s) const {
    BoxParameters p;
    p.variant = variant == "VS" ? BoxVariant::VS : BoxVariant::GAB;
    p.M = M;
    p.c4 = c4;
    if (p.variant == BoxVariant::VS && !(c4 > 0.0)) {
      if (s.process.kind != ProcessKind::poisson) throw ConfigError("--c4", "required for non-Poisson input");
      p.c4 = poisson_c4(s.process.intensity);
    }
    p.m = m;
    p.alpha = alpha;
    return p;
  }

  json to_json() const { return json{{"variant", variant}, {"M", M}, {"c4", c4}, {"m", m}, {"alpha", alpha}}; }
};

PointSet load_points(const std::string& prefix) {
  std::ifstream csv(prefix + ".csv");
  if (!csv) throw ConfigError(prefix + ".csv", "cannot open");
  try {
    return read_points(csv, load_json_file(prefix + ".json"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(prefix, e.what());
  }
}

GraphFile load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open");
  try {
    return read_graph_ndjson(in);
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

/// Stamp for a subcommand: hash of its name, resolved arguments and the
/// contents of its input files.
Stamp command_stamp(const std::string& name, const json& args, const std::vector<std::string>& inputs, std::uint64_t seed) {
  json j{{"command", name}, {"args", args}};
  json files = json::array();
  for (const auto& f : inputs) files.push_back(fnv1a_hex(read_file(f)));
  j["inputs"] = files;
  return Stamp{fnv1a_hex(j.dump()), seed};
}

void emit(std::ostream& os, json r, const Stamp& st) {
  stamp(r, st);
  os << r.dump() << '\n';
}

Point parse_center(const std::vector<double>& v, const Window& w) {
  if (v.empty()) return window_center(w);
  if (static_cast<int>(v.size()) != w.dimension) throw ConfigError("--center", "needs one coordinate per dimension");
  Point c{0.0, 0.0, 0.0};
  for (int k = 0; k < w.dimension; ++k) c[k] = v[k];
  return c;
}

json center_json(const Point& c, int dim) { return coords_json(c, dim); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geowalk: random walks on random geometric graphs built from stationary point processes"};
  app.set_version_flag("--version", std::string(kVersionString));
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "JSON experiment config supplying defaults");
  app.add_option("--seed", common.seed, "Master seed (overrides GEOWALK_SEED and the config)");
  app.add_option("--threads", common.threads, "Worker threads (0 = available parallelism)");

  std::function<int()> action;

  // sample ------------------------------------------------------------------
  SampleFlags sample_flags;
  std::string sample_out;
  auto* c_sample = app.add_subcommand("sample", "Sample a point process in a window (PREFIX.csv + PREFIX.json)");
  sample_flags.add(c_sample);
  c_sample->add_option("-o,--out", sample_out, "Output prefix")->required();
  c_sample->callback([&] {
    action = [&] {
      auto c = common.base();
      sample_flags.apply(c);
      const PointSet s = sample(c.process, c.window, c.seed);
      const Stamp st{config_hash(c), c.seed};
      std::ofstream csv(sample_out + ".csv", std::ios::binary);
      if (!csv) throw ConfigError(sample_out + ".csv", "cannot write");
      write_points_csv(s, csv);
      json meta = points_metadata(s);
      stamp(meta, st);
      std::ofstream js(sample_out + ".json", std::ios::binary);
      js << meta.dump(2) << '\n';
      return kOk;
    };
  });

  // build-graph -------------------------------------------------------------
  std::string bg_points, bg_kind = "DT", bg_out = "-";
  bool bg_trim = false;
  ConductanceFlags bg_cond;
  auto* c_build = app.add_subcommand("build-graph", "Build DT, GAB or VS from a point file (NDJSON)");
  c_build->add_option("--points", bg_points, "Point file prefix")->required();
  c_build->add_option("--kind", bg_kind, "DT | GAB | VS");
  c_build->add_flag("--trim", bg_trim, "Trim to the analysis window");
  bg_cond.add(c_build);
  c_build->add_option("-o,--out", bg_out, "Output file (- for stdout)");
  c_build->callback([&] {
    action = [&] {
      const auto c = common.base();
      const PointSet s = load_points(bg_points);
      const GraphKind kind = detail::at_path("--kind", [&] { return graph_kind_from_string(bg_kind); });
      const auto t = delaunay(s.points, s.dimension(), s.window);
      auto g = build_graph(kind, s.points, t);
      if (bg_trim) g = trim_to_analysis_region(g, s.window);
      json args{{"kind", to_string(kind)}, {"trim", bg_trim}};
      if (bg_cond.given()) args["conductance"] = conductance_json(bg_cond.model(c.conductance));
      const Stamp st = command_stamp("build-graph", args, {bg_points + ".csv", bg_points + ".json"}, c.seed);
      Sink out(bg_out);
      if (bg_cond.given()) {
        const auto model = bg_cond.model(c.conductance);
        const auto net = assign_conductances(g, model);
        write_graph_ndjson(g, out.os(), st, &net.conductance, &model);
      } else {
        write_graph_ndjson(g, out.os(), st);
      }
      return kOk;
    };
  });

  // trim --------------------------------------------------------------------
  std::string tr_graph, tr_out = "-";
  auto* c_trim = app.add_subcommand("trim", "Trim a graph file to its analysis window");
  c_trim->add_option("--graph", tr_graph, "Graph NDJSON")->required();
  c_trim->add_option("-o,--out", tr_out, "Output file (- for stdout)");
  c_trim->callback([&] {
    action = [&] {
      const auto c = common.base();
      const auto f = load_graph(tr_graph);
      const auto g = trim_to_analysis_region(f.graph, f.graph.window);
      const Stamp st = command_stamp("trim", json::object(), {tr_graph}, c.seed);
      Sink out(tr_out);
      if (f.model) {
        const auto net = assign_conductances(g, *f.model);
        write_graph_ndjson(g, out.os(), st, &net.conductance, &*f.model);
      } else {
        write_graph_ndjson(g, out.os(), st);
      }
      return kOk;
    };
  });

  // verify-assumptions ------------------------------------------------------
  SampleFlags va_flags;
  std::size_t va_replicas = 20000;
  std::string va_points, va_out = "-";
  auto* c_verify = app.add_subcommand("verify-assumptions", "Estimate the void (c1), deviation (c2, c3) and count-tail (c4) constants");
  va_flags.add(c_verify);
  c_verify->add_option("--replicas", va_replicas, "Replicas per estimate");
  c_verify->add_option("--points", va_points, "Also check general position of this point file");
  c_verify->add_option("-o,--out", va_out, "Output file (- for stdout)");
  c_verify->callback([&] {
    action = [&] {
      auto c = common.base();
      va_flags.apply(c);
      const unsigned th = resolve_threads(c.threads);
      const int dim = c.window.dimension;
      const Stamp st{config_hash(c), c.seed};
      Sink out(va_out);
      const auto v = estimate_c1(c.process, dim, va_replicas, derive_seed(c.seed, 0), 0.0, th);
      emit(out.os(),
           json{{"type", "void"}, {"dimension", dim}, {"side", v.side}, {"probability", proportion_json(v.probability)}, {"c1", v.c1_hat}},
           st);
      if (dim == 2) {
        const auto d = estimate_c2_c3(c.process, {{2, 2}, {3, 3}, {4, 4}, {5, 5}}, va_replicas, derive_seed(c.seed, 1), th);
        emit(out.os(),
             json{{"type", "deviation"},
                  {"c2", d.c2},
                  {"c3", std::isfinite(d.c3) ? json(d.c3) : json(nullptr)},
                  {"r_squared", d.r_squared},
                  {"areas", d.areas}},
             st);
      }
      const double side = calibration_side(c.process, dim);
      const double mean = c.process.mean_intensity(dim) * std::pow(side, dim);
      std::vector<double> thresholds;
      for (double f : {1.5, 2.0, 2.5, 3.0}) thresholds.push_back(std::ceil(f * mean));
      const auto t = estimate_c4(c.process, dim, side, thresholds, va_replicas, derive_seed(c.seed, 2), th);
      json r{{"type", "count_tail"}, {"side", side}, {"thresholds", t.thresholds}, {"c4", std::isfinite(t.c4) ? json(t.c4) : json(nullptr)}};
      if (c.process.kind == ProcessKind::poisson) r["c4_chernoff"] = poisson_c4(c.process.intensity);
      emit(out.os(), r, st);
      if (!va_points.empty()) {
        const PointSet s = load_points(va_points);
        const auto gp = check_general_position(s);
        emit(out.os(),
             json{{"type", "general_position"}, {"pass", gp.pass()}, {"exact", gp.exact_count}, {"near", gp.near_count},
                  {"candidates", gp.candidates_checked}},
             st);
      }
      return kOk;
    };
  });

  // annuli ------------------------------------------------------------------
  std::string an_graph, an_out = "-";
  std::vector<double> an_center;
  int an_i0 = 1, an_imax = 1;
  auto* c_annuli = app.add_subcommand("annuli", "Per-annulus crossing-edge statistics");
  c_annuli->add_option("--graph", an_graph, "Trimmed graph NDJSON")->required();
  c_annuli->add_option("--center", an_center, "Annulus centre (default: window centre)");
  c_annuli->add_option("--i0", an_i0, "First annulus index");
  c_annuli->add_option("--imax", an_imax, "Last annulus index")->required();
  c_annuli->add_option("-o,--out", an_out, "Output file (- for stdout)");
  c_annuli->callback([&] {
    action = [&] {
      const auto c = common.base();
      const auto f = load_graph(an_graph);
      const Point ctr = parse_center(an_center, f.graph.window);
      const auto stats = annulus_edge_stats(f.graph, ctr, an_i0, an_imax);
      const Stamp st = command_stamp("annuli", json{{"center", center_json(ctr, f.graph.dimension)}, {"i0", an_i0}, {"imax", an_imax}},
                                     {an_graph}, c.seed);
      Sink out(an_out);
      write_records(out.os(), annulus_records(stats), st);
      return kOk;
    };
  });

  // recurrence-series -------------------------------------------------------
  std::string rs_graph, rs_out = "-";
  std::vector<double> rs_center;
  int rs_i0 = 1, rs_imax = 1;
  double rs_sup = 0.0;
  ConductanceFlags rs_cond;
  auto* c_series = app.add_subcommand("recurrence-series", "Coarse and sharp annulus series with the reduction bound");
  c_series->add_option("--graph", rs_graph, "Trimmed graph NDJSON")->required();
  c_series->add_option("--center", rs_center, "Annulus centre (default: window centre)");
  c_series->add_option("--i0", rs_i0, "First annulus index");
  c_series->add_option("--imax", rs_imax, "Last annulus index")->required();
  c_series->add_option("--sup-conductance", rs_sup, "sup C (default: from the conductance model)");
  rs_cond.add(c_series);
  c_series->add_option("-o,--out", rs_out, "Output file (- for stdout)");
  c_series->callback([&] {
    action = [&] {
      const auto c = common.base();
      const auto f = load_graph(rs_graph);
      const Point ctr = parse_center(rs_center, f.graph.window);
      const auto model = rs_cond.model(f.model.value_or(c.conductance));
      const Network net = rs_cond.given() ? assign_conductances(f.graph, model) : network_from_file(f, model);
      double sup = rs_sup;
      if (!(sup > 0.0)) {
        sup = 0.0;
        for (double x : net.conductance) sup = std::max(sup, x);
        sup = std::max(sup, model.sup());
      }
      const auto stats = annulus_edge_stats(f.graph, ctr, rs_i0, rs_imax);
      auto recs = series_records(recurrence_series(stats, sup));
      recs.push_back(bound_record(annulus_reduction_bound(net, ctr, rs_i0, rs_imax)));
      const Stamp st = command_stamp("recurrence-series",
                                     json{{"center", center_json(ctr, f.graph.dimension)}, {"i0", rs_i0}, {"imax", rs_imax}, {"sup", sup},
                                          {"conductance", conductance_json(model)}},
                                     {rs_graph}, c.seed);
      Sink out(rs_out);
      write_records(out.os(), recs, st);
      return kOk;
    };
  });

  // envelopes ---------------------------------------------------------------
  std::string en_points, en_kind = "DT", en_out = "-";
  std::vector<int> en_indices;
  std::optional<double> en_c1, en_c2;
  std::vector<double> en_center;
  auto* c_env = app.add_subcommand("envelopes", "Long-edge and many-edge envelope events (d = 2, DT or VS)");
  c_env->add_option("--points", en_points, "Point file prefix")->required();
  c_env->add_option("--kind", en_kind, "DT | VS");
  c_env->add_option("--indices", en_indices, "Annulus indices i")->required();
  c_env->add_option("--c1", en_c1, "Void constant (estimated when absent)");
  c_env->add_option("--c2", en_c2, "Deviation constant (estimated when absent)");
  c_env->add_option("--center", en_center, "Annulus centre (default: window centre)");
  c_env->add_option("-o,--out", en_out, "Output file (- for stdout)");
  c_env->callback([&] {
    action = [&] {
      const auto c = common.base();
      const PointSet s = load_points(en_points);
      const GraphKind kind = detail::at_path("--kind", [&] { return graph_kind_from_string(en_kind); });
      double c1 = 0.0, c2 = 0.0;
      if (en_c1 && en_c2) {
        c1 = *en_c1;
        c2 = *en_c2;
      } else {
        const auto est = estimate_envelope_constants(s.process, derive_seed(c.seed, 200), resolve_threads(c.threads));
        c1 = en_c1.value_or(est.first);
        c2 = en_c2.value_or(est.second);
      }
      const Point ctr = parse_center(en_center, s.window);
      const auto t = delaunay(s.points, s.dimension(), s.window);
      const auto g = trim_to_analysis_region(build_graph(kind, s.points, t), s.window);
      const auto rep = envelope_events(s, g, ctr, en_indices, c1, c2);
      const Stamp st = command_stamp("envelopes",
                                     json{{"kind", to_string(kind)}, {"indices", en_indices}, {"c1", c1}, {"c2", c2},
                                          {"center", center_json(ctr, s.dimension())}},
                                     {en_points + ".csv", en_points + ".json"}, c.seed);
      Sink out(en_out);
      write_records(out.os(), envelope_records(rep), st);
      return kOk;
    };
  });

  // good-boxes / box-paths / rough-embedding ---------------------------------
  struct BoxCommand {
    std::string points, out = "-";
    BoxFlags flags;
    ConductanceFlags cond;
    std::size_t probability_replicas = 0;
    double p_star = 0.99;
  };
  BoxCommand gb, bp, re;
  // Builds the field, references and (optionally) paths; returns the network
  // the paths live on.
  auto box_field = [&](const BoxCommand& cmd, bool paths, const ExperimentConfig& c, BoxField& field,
                       const ConductanceModel& model) -> std::optional<Network> {
    const PointSet s = load_points(cmd.points);
    const auto params = cmd.flags.params(s);
    field = classify_good_boxes(s.points, s.window, params);
    const auto t = delaunay(s.points, s.dimension(), s.window);
    const unsigned th = resolve_threads(c.threads);
    if (params.variant == BoxVariant::VS) {
      const auto vs = trim_to_analysis_region(voronoi_skeleton(t), s.window);
      const VsPathContext ctx(vs, t);
      assign_vs_references(field, ctx);
      if (paths) build_all_box_paths_vs(field, ctx, th);
      return assign_conductances(vs, model);
    }
    const auto gab = gabriel(s.points, t);
    if (paths) build_all_box_paths_gabriel(field, GabrielPathFinder(s.points, gab), gab, th);
    return assign_conductances(gab, model);
  };

  auto* c_boxes = app.add_subcommand("good-boxes", "Classify good boxes (NDJSON BoxField)");
  c_boxes->add_option("--points", gb.points, "Point file prefix")->required();
  gb.flags.add(c_boxes);
  c_boxes->add_option("--probability-replicas", gb.probability_replicas,
                      "Also estimate P[box good] for the file's process with this many replicas");
  c_boxes->add_option("--p-star", gb.p_star, "Target probability p* (default 0.99)");
  c_boxes->add_option("-o,--out", gb.out, "Output file (- for stdout)");
  c_boxes->callback([&] {
    action = [&] {
      const auto c = common.base();
      BoxField field;
      box_field(gb, false, c, field, c.conductance);
      const Stamp st = command_stamp("good-boxes", gb.flags.to_json(), {gb.points + ".csv", gb.points + ".json"}, c.seed);
      Sink out(gb.out);
      write_box_field_ndjson(field, out.os(), st);
      if (gb.probability_replicas > 0) {
        const PointSet s = load_points(gb.points);
        const auto r = estimate_good_box_probability(s.process, s.dimension(), field.params, gb.probability_replicas, c.seed,
                                                     gb.p_star, std::nullopt, resolve_threads(c.threads));
        emit(out.os(),
             json{{"type", "good_box_probability"}, {"M", field.params.M}, {"probability", proportion_json(r.probability)},
                  {"p_star", r.p_star}, {"meets_target", r.meets_target}},
             st);
      }
      return kOk;
    };
  });

  auto* c_paths = app.add_subcommand("box-paths", "Build and verify paths between adjacent good boxes (exit 3 on demotions)");
  c_paths->add_option("--points", bp.points, "Point file prefix")->required();
  bp.flags.add(c_paths);
  c_paths->add_option("-o,--out", bp.out, "Output file (- for stdout)");
  c_paths->callback([&] {
    action = [&] {
      const auto c = common.base();
      BoxField field;
      box_field(bp, true, c, field, c.conductance);
      const Stamp st = command_stamp("box-paths", bp.flags.to_json(), {bp.points + ".csv", bp.points + ".json"}, c.seed);
      Sink out(bp.out);
      write_box_field_ndjson(field, out.os(), st);
      return field.demoted_paths() > 0 ? kAssertion : kOk;
    };
  });

  auto* c_embed = app.add_subcommand("rough-embedding", "Check the rough-embedding constants of the box paths (exit 3 on failure)");
  c_embed->add_option("--points", re.points, "Point file prefix")->required();
  re.flags.add(c_embed);
  re.cond.add(c_embed);
  c_embed->add_option("-o,--out", re.out, "Output file (- for stdout)");
  c_embed->callback([&] {
    action = [&] {
      const auto c = common.base();
      const auto model = re.cond.model(c.conductance);
      BoxField field;
      const auto net = box_field(re, true, c, field, model);
      const auto emb = verify_rough_embedding(field, *net);
      json args = re.flags.to_json();
      args["conductance"] = conductance_json(model);
      const Stamp st = command_stamp("rough-embedding", args, {re.points + ".csv", re.points + ".json"}, c.seed);
      Sink out(re.out);
      json r = embedding_record(emb);
      r["demoted_paths"] = field.demoted_paths();
      r["paths"] = field.paths.size();
      emit(out.os(), r, st);
      return emb.alpha_ok && emb.beta_ok ? kOk : kAssertion;
    };
  });

  // resistance --------------------------------------------------------------
  std::string rz_graph, rz_out = "-";
  std::vector<int> rz_a, rz_z;
  std::vector<double> rz_center;
  int rz_n = 0;
  ConductanceFlags rz_cond;
  auto* c_res = app.add_subcommand("resistance", "Effective resistance between vertex sets, or from the centre to outside B_n");
  c_res->add_option("--graph", rz_graph, "Graph NDJSON")->required();
  c_res->add_option("--a", rz_a, "Source vertex ids");
  c_res->add_option("--z", rz_z, "Sink vertex ids");
  c_res->add_option("--center", rz_center, "Centre for --n (default: window centre)");
  c_res->add_option("--n", rz_n, "Use x0 = vertex nearest the centre and Z = vertices outside B_n");
  rz_cond.add(c_res);
  c_res->add_option("-o,--out", rz_out, "Output file (- for stdout)");
  c_res->callback([&] {
    action = [&] {
      const auto c = common.base();
      const auto f = load_graph(rz_graph);
      const auto model = rz_cond.model(f.model.value_or(c.conductance));
      const Network net = rz_cond.given() ? assign_conductances(f.graph, model) : network_from_file(f, model);
      std::vector<int> A = rz_a, Z = rz_z;
      json args{{"conductance", conductance_json(model)}};
      if (rz_n > 0) {
        const Point ctr = parse_center(rz_center, f.graph.window);
        A = {nearest_vertex(f.graph, ctr)};
        Z = annulus_terminals(f.graph, ctr, 0, rz_n).outer;
        args["center"] = center_json(ctr, f.graph.dimension);
        args["n"] = rz_n;
      }
      if (A.empty() || Z.empty()) throw ConfigError("--a/--z", "give both vertex sets, or --n");
      args["a"] = A;
      args["z"] = Z;
      const auto r = effective_resistance(net, A, Z);
      const Stamp st = command_stamp("resistance", args, {rz_graph}, c.seed);
      Sink out(rz_out);
      emit(out.os(),
           json{{"type", "resistance"}, {"resistance", r.infinite ? json("inf") : json(r.value)}, {"infinite", r.infinite},
                {"iterations", r.iterations}, {"relative_residual", r.relative_residual}, {"sources", A.size()}, {"sinks", Z.size()}},
           st);
      return kOk;
    };
  });

  // walk --------------------------------------------------------------------
  std::string wk_graph, wk_out = "-";
  std::optional<int> wk_start;
  std::vector<double> wk_center;
  std::uint64_t wk_steps = 0;
  int wk_exit = 0;
  bool wk_return = false;
  std::size_t wk_replicas = 1;
  ConductanceFlags wk_cond;
  auto* c_walk = app.add_subcommand("walk", "Simulate reversible random walks");
  c_walk->add_option("--graph", wk_graph, "Graph NDJSON")->required();
  c_walk->add_option("--start", wk_start, "Start vertex (default: nearest the centre)");
  c_walk->add_option("--center", wk_center, "Centre for --exit-n and the default start");
  c_walk->add_option("--steps", wk_steps, "Step limit (0 = none)");
  c_walk->add_option("--exit-n", wk_exit, "Stop on leaving B_n");
  c_walk->add_flag("--stop-on-return", wk_return, "Stop on the first return to the start");
  c_walk->add_option("--replicas", wk_replicas, "Independent walks");
  wk_cond.add(c_walk);
  c_walk->add_option("-o,--out", wk_out, "Output file (- for stdout)");
  c_walk->callback([&] {
    action = [&] {
      const auto c = common.base();
      const auto f = load_graph(wk_graph);
      const auto model = wk_cond.model(f.model.value_or(c.conductance));
      const Network net = wk_cond.given() ? assign_conductances(f.graph, model) : network_from_file(f, model);
      StopRule rule;
      rule.max_steps = wk_steps;
      rule.exit_n = wk_exit;
      rule.center = parse_center(wk_center, f.graph.window);
      rule.stop_on_return = wk_return;
      if (rule.max_steps == 0 && rule.exit_n == 0 && !rule.stop_on_return) throw ConfigError("--steps", "give a stop rule");
      const int start = wk_start.value_or(nearest_vertex(f.graph, rule.center));
      check_walk_start(net, start);
      const Walker walker(net);
      std::vector<WalkSummary> runs(wk_replicas);
      parallel_for(wk_replicas, resolve_threads(c.threads),
                   [&](std::size_t k) { runs[k] = simulate_walk(walker, start, rule, derive_seed(c.seed, k)); });
      const Stamp st = command_stamp("walk",
                                     json{{"start", start}, {"steps", wk_steps}, {"exit_n", wk_exit}, {"stop_on_return", wk_return},
                                          {"replicas", wk_replicas}, {"center", center_json(rule.center, f.graph.dimension)},
                                          {"conductance", conductance_json(model)}},
                                     {wk_graph}, c.seed);
      Sink out(wk_out);
      std::size_t escaped = 0, returned = 0;
      for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& w = runs[k];
        escaped += w.escaped;
        returned += w.returns > 0;
        emit(out.os(),
             json{{"type", "walk"}, {"replica", k}, {"start", w.start}, {"steps", w.steps}, {"returns", w.returns},
                  {"exit_index", w.exit_index}, {"escaped", w.escaped}, {"final_vertex", w.final_vertex}},
             st);
      }
      emit(out.os(),
           json{{"type", "walk_summary"}, {"replicas", runs.size()}, {"escaped", proportion_json(proportion(escaped, runs.size()))},
                {"returned", proportion_json(proportion(returned, runs.size()))}},
           st);
      return kOk;
    };
  });

  // short-path --------------------------------------------------------------
  std::string sp_points, sp_out = "-";
  std::optional<int> sp_x, sp_y;
  std::size_t sp_pairs = 0;
  auto* c_short = app.add_subcommand("short-path", "Gabriel paths with the squared-length certificate (exit 3 on failure)");
  c_short->add_option("--points", sp_points, "Point file prefix")->required();
  c_short->add_option("--x", sp_x, "First point index");
  c_short->add_option("--y", sp_y, "Second point index");
  c_short->add_option("--pairs", sp_pairs, "Random pairs instead of --x/--y");
  c_short->add_option("-o,--out", sp_out, "Output file (- for stdout)");
  c_short->callback([&] {
    action = [&] {
      const auto c = common.base();
      const PointSet s = load_points(sp_points);
      const auto t = delaunay(s.points, s.dimension(), s.window);
      const auto gab = gabriel(s.points, t);
      const GabrielPathFinder finder(s.points, gab);
      std::vector<std::pair<int, int>> pairs;
      if (sp_pairs > 0) {
        if (s.points.empty()) throw ConfigError("--points", "no points");
        Rng rng(derive_seed(c.seed, 0));
        for (std::size_t k = 0; k < sp_pairs; ++k)
          pairs.emplace_back(static_cast<int>(rng.below(s.points.size())), static_cast<int>(rng.below(s.points.size())));
      } else {
        if (!sp_x || !sp_y) throw ConfigError("--x/--y", "give both endpoints or --pairs");
        pairs.emplace_back(*sp_x, *sp_y);
      }
      std::vector<GabrielPath> paths(pairs.size());
      parallel_for(pairs.size(), resolve_threads(c.threads), [&](std::size_t k) { paths[k] = finder.path(pairs[k].first, pairs[k].second); });
      const Stamp st = command_stamp("short-path", json{{"pairs", pairs}}, {sp_points + ".csv", sp_points + ".json"}, c.seed);
      Sink out(sp_out);
      bool ok = true;
      for (const auto& p : paths) {
        const bool exact = squared_budget_holds(s.points, p.vertices, s.dimension());
        ok = ok && p.certified && exact;
        json r = gabriel_path_record(p);
        r["exact_check"] = exact;
        emit(out.os(), r, st);
      }
      return ok ? kOk : kAssertion;
    };
  });

  // chains ------------------------------------------------------------------
  std::string ch_points, ch_out = "-";
  std::size_t ch_min = 3, ch_budget = 1'000'000;
  auto* c_chains = app.add_subcommand("chains", "Search for strictly descending chains");
  c_chains->add_option("--points", ch_points, "Point file prefix")->required();
  c_chains->add_option("--min-length", ch_min, "Length at which a chain counts as found");
  c_chains->add_option("--budget", ch_budget, "Extension budget");
  c_chains->add_option("-o,--out", ch_out, "Output file (- for stdout)");
  c_chains->callback([&] {
    action = [&] {
      const auto c = common.base();
      const PointSet s = load_points(ch_points);
      const auto r = find_descending_chain(s.points, s.dimension(), ch_min, ch_budget);
      const Stamp st =
          command_stamp("chains", json{{"min_length", ch_min}, {"budget", ch_budget}}, {ch_points + ".csv", ch_points + ".json"}, c.seed);
      Sink out(ch_out);
      json rec = chain_record(r);
      rec["exact_check"] = strictly_descending(s.points, r.chain, s.dimension());
      emit(out.os(), rec, st);
      return kOk;
    };
  });

  // run ---------------------------------------------------------------------
  std::string run_out;
  auto* c_run = app.add_subcommand("run", "Run the configured pipeline (sample, build, trim, assign, analyze)");
  c_run->add_option("--out", run_out, "Output directory (overrides the config)");
  c_run->callback([&] {
    action = [&] {
      if (common.config_path.empty()) throw ConfigError("--config", "run needs a config file");
      auto c = common.base();
      if (!run_out.empty()) c.output = run_out;
      const auto r = run_pipeline(c, c.output);
      std::cout << r.summary.dump() << '\n';
      return kOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  try {
    return action ? action() : kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kConfigError;
  } catch (const RangeError& e) {
    std::cerr << "range error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ConstructionError& e) {
    std::cerr << "construction failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
