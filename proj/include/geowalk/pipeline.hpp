#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "geowalk/boxes.hpp"
#include "geowalk/config.hpp"
#include "geowalk/criteria.hpp"
#include "geowalk/io.hpp"
#include "geowalk/walk.hpp"

namespace geowalk {

// ---------------------------------------------------------------------------
// Records shared by the CLI subcommands and the pipeline.

inline json fit_json(const LinearFit& f) {
  return json{{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

inline std::vector<json> annulus_records(const AnnulusStats& s) {
  std::vector<json> out;
  for (const auto& row : s.rows)
    out.push_back(json{{"type", "annulus"},
                       {"i", row.i},
                       {"count", row.count},
                       {"weighted_span", row.weighted_span()},
                       {"max_length", row.max_length},
                       {"span_counts", row.span_counts}});
  return out;
}

inline std::vector<json> series_records(const RecurrenceSeries& s) {
  std::vector<json> out;
  for (std::size_t k = 0; k < s.index.size(); ++k)
    out.push_back(json{{"type", "series"}, {"i", s.index[k]}, {"coarse", s.coarse[k]}, {"sharp", s.sharp[k]}});
  out.push_back(json{{"type", "series_fit"},
                     {"sup_conductance", s.sup_conductance},
                     {"skipped", s.skipped},
                     {"coarse_vs_loglog", fit_json(s.coarse_fit.log_log)},
                     {"coarse_vs_log", fit_json(s.coarse_fit.log)},
                     {"sharp_vs_loglog", fit_json(s.sharp_fit.log_log)},
                     {"sharp_vs_log", fit_json(s.sharp_fit.log)}});
  return out;
}

inline json bound_record(const AnnulusBound& b) {
  json r = json::array();
  for (double x : b.r) r.push_back(std::isfinite(x) ? json(x) : json("inf"));
  return json{{"type", "reduction_bound"},
              {"i0", b.i0},
              {"imax", b.imax},
              {"bound", std::isfinite(b.bound) ? json(b.bound) : json("inf")},
              {"r", r},
              {"empty_cuts", b.empty_cuts}};
}

inline std::vector<json> envelope_records(const EnvelopeReport& rep) {
  std::vector<json> out;
  for (const auto& row : rep.rows) {
    json r{{"type", "envelope"}, {"kind", to_string(rep.kind)}, {"i", row.i}, {"skipped", row.skipped}};
    if (!row.skipped) {
      r["length_threshold"] = row.length_threshold;
      r["count_threshold"] = row.count_threshold;
      r["max_length"] = row.max_length;
      r["crossing"] = row.crossing;
      r["long_edge"] = row.long_edge;
      r["many_edges"] = row.many_edges;
      if (rep.kind == GraphKind::DT) {
        r["collar_points"] = row.collar_points;
        r["euler_ok"] = row.euler_ok;
      }
    }
    r["c1"] = rep.c1;
    r["c2"] = rep.c2;
    out.push_back(r);
  }
  return out;
}

inline json proportion_json(const ProportionEstimate& p) {
  return json{{"estimate", p.estimate}, {"standard_error", p.standard_error}, {"successes", p.successes}, {"trials", p.trials}};
}

inline std::vector<json> recurrence_records(const RecurrenceProfile& p, bool with_escape) {
  std::vector<json> out;
  for (const auto& row : p.rows) {
    json r{{"type", "recurrence"},
           {"n", row.n},
           {"start", p.start},
           {"resistance", row.infinite ? json("inf") : json(row.resistance)}};
    if (with_escape) {
      r["escape"] = proportion_json(row.escape);
      r["identity"] = row.identity;
      r["identity_z"] = std::isfinite(row.identity_z) ? json(row.identity_z) : json("inf");
    }
    out.push_back(r);
  }
  return out;
}

inline json embedding_record(const RoughEmbedding& e) {
  return json{{"type", "rough_embedding"}, {"alpha", e.alpha},       {"beta", e.beta},         {"K", e.K},
              {"L", e.L},                  {"alpha_ok", e.alpha_ok}, {"beta_ok", e.beta_ok}, {"paths_used", e.paths_used}};
}

inline json gabriel_path_record(const GabrielPath& p) {
  return json{{"type", "short_path"},   {"vertices", p.vertices},       {"hops", p.hops()},
              {"budget", p.budget},     {"squared_sum", p.squared_sum}, {"certified", p.certified},
              {"excised", p.excised}};
}

inline json chain_record(const ChainSearch& c) {
  return json{{"type", "chain"},         {"chain", c.chain},         {"length", c.chain.size()},
              {"found", c.found},        {"exhausted", c.exhausted}, {"extensions", c.extensions},
              {"upper_bound", c.upper_bound}};
}

inline void write_records(std::ostream& os, const std::vector<json>& records, const Stamp& st) {
  for (auto r : records) {
    stamp(r, st);
    os << r.dump() << '\n';
  }
}

inline Point window_center(const Window& w) {
  Point c{0.0, 0.0, 0.0};
  for (int k = 0; k < w.dimension; ++k) c[k] = w.lower[k] + 0.5 * w.sides[k];
  return c;
}

/// c1 and c2 for the envelope thresholds, estimated from the process.
inline std::pair<double, double> estimate_envelope_constants(const ProcessDescriptor& desc, std::uint64_t seed, unsigned threads) {
  const auto v = estimate_c1(desc, 2, 20000, derive_seed(seed, 0), 0.0, threads);
  const auto d = estimate_c2_c3(desc, {{2.0, 2.0}, {3.0, 3.0}, {4.0, 4.0}}, 2000, derive_seed(seed, 1), threads);
  return {v.c1_hat, d.c2};
}

// ---------------------------------------------------------------------------
// The configured pipeline: sample, build, trim, assign, analyze.

struct RunResult {
  json summary;
  std::vector<std::string> files;
  /// Demoted box pairs or failed rough-embedding checks.
  bool assertion_failed = false;
};

inline RunResult run_pipeline(const ExperimentConfig& c, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const unsigned threads = resolve_threads(c.threads);
  const Stamp st{config_hash(c), c.seed};
  RunResult res;
  auto open = [&](const std::string& name) {
    res.files.push_back(name);
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw ConfigError("/output", "cannot write " + (dir / name).string());
    return os;
  };

  {
    json cfg = config_json(c);
    stamp(cfg, st);
    open("config.resolved.json") << cfg.dump(2) << '\n';
  }

  const PointSet s = sample(c.process, c.window, c.seed);
  {
    auto os = open("points.csv");
    write_points_csv(s, os);
    json meta = points_metadata(s);
    stamp(meta, st);
    open("points.json") << meta.dump(2) << '\n';
  }
  const int dim = s.dimension();
  const Point center = window_center(s.window);
  const Triangulation t = delaunay(s.points, dim, s.window);

  json summary{{"type", "summary"}, {"points", s.points.size()}, {"simplices", t.size()}};
  json graphs = json::array();
  std::optional<std::pair<double, double>> env_constants;
  for (std::size_t gi = 0; gi < c.graphs.size(); ++gi) {
    const GraphKind kind = c.graphs[gi];
    const std::string tag = to_string(kind);
    const auto trimmed = trim_to_analysis_region(build_graph(kind, s.points, t), s.window);
    const Network net = assign_conductances(trimmed, c.conductance);
    {
      auto os = open("graph-" + tag + ".ndjson");
      write_graph_ndjson(trimmed, os, st, &net.conductance, &c.conductance);
    }
    json g{{"kind", tag}, {"vertices", trimmed.vertices.size()}, {"edges", trimmed.edges.size()}, {"trim_warning", trimmed.trim_warning}};
    if (c.annuli) {
      const auto stats = annulus_edge_stats(trimmed, center, c.annuli->i0, c.annuli->imax);
      const auto series = recurrence_series(stats, c.conductance.sup());
      auto recs = annulus_records(stats);
      auto more = series_records(series);
      recs.insert(recs.end(), more.begin(), more.end());
      recs.push_back(bound_record(annulus_reduction_bound(net, center, c.annuli->i0, c.annuli->imax)));
      auto os = open("annuli-" + tag + ".ndjson");
      write_records(os, recs, st);
    }
    if (c.recurrence) {
      const auto prof =
          recurrence_profile(net, center, c.recurrence->ns, c.recurrence->replicas, derive_seed(c.seed, 100 + gi), threads);
      auto os = open("recurrence-" + tag + ".ndjson");
      write_records(os, recurrence_records(prof, c.recurrence->replicas > 0), st);
      if (!prof.rows.empty()) g["resistance_at_nmax"] = prof.rows.back().infinite ? json("inf") : json(prof.rows.back().resistance);
    }
    if (c.envelopes && dim == 2 && kind != GraphKind::GAB) {
      if (!env_constants) {
        auto est = estimate_envelope_constants(c.process, derive_seed(c.seed, 200), threads);
        env_constants = {c.envelopes->c1.value_or(est.first), c.envelopes->c2.value_or(est.second)};
      }
      const auto rep = envelope_events(s, trimmed, center, c.envelopes->indices, env_constants->first, env_constants->second);
      auto os = open("envelopes-" + tag + ".ndjson");
      write_records(os, envelope_records(rep), st);
    }
    graphs.push_back(g);
  }
  summary["graphs"] = graphs;

  if (c.boxes) {
    const auto& bs = *c.boxes;
    const std::string tag = to_string(bs.params.variant);
    BoxField field = classify_good_boxes(s.points, s.window, bs.params);
    std::optional<Network> net;
    if (bs.params.variant == BoxVariant::VS) {
      const auto vs = trim_to_analysis_region(voronoi_skeleton(t), s.window);
      const VsPathContext ctx(vs, t);
      assign_vs_references(field, ctx);
      if (bs.paths) build_all_box_paths_vs(field, ctx, threads);
      net = assign_conductances(vs, c.conductance);
    } else {
      const auto gab = gabriel(s.points, t);
      if (bs.paths) {
        const GabrielPathFinder finder(s.points, gab);
        build_all_box_paths_gabriel(field, finder, gab, threads);
      }
      net = assign_conductances(gab, c.conductance);
    }
    {
      auto os = open("boxes-" + tag + ".ndjson");
      write_box_field_ndjson(field, os, st);
    }
    json b{{"variant", tag}, {"boxes", field.boxes.size()}, {"good", field.good_count()}, {"paths", field.paths.size()},
           {"demoted_paths", field.demoted_paths()}};
    if (field.demoted_paths() > 0) res.assertion_failed = true;
    if (bs.paths && bs.rough_embedding) {
      const auto emb = verify_rough_embedding(field, *net);
      json r = embedding_record(emb);
      stamp(r, st);
      open("rough-embedding-" + tag + ".json") << r.dump(2) << '\n';
      b["rough_embedding"] = embedding_record(emb);
      if (!emb.alpha_ok || !emb.beta_ok) res.assertion_failed = true;
    }
    summary["boxes"] = b;
  }
  if (env_constants) summary["envelope_constants"] = json{{"c1", env_constants->first}, {"c2", env_constants->second}};
  res.files.push_back("summary.json");
  summary["files"] = res.files;
  stamp(summary, st);
  {
    std::ofstream os(dir / "summary.json", std::ios::binary);
    os << summary.dump(2) << '\n';
  }
  res.summary = summary;
  return res;
}

}  // namespace geowalk
