// Acceptance run: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; no arguments runs all twelve.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geowalk/geowalk.hpp"
#include "geowalk/pipeline.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace geowalk;
namespace gt = geowalk::testing;
namespace fs = std::filesystem;

namespace {

const unsigned kThreads = resolve_threads(0);

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Network ppp_dt_network(const Window& w, std::uint64_t seed, const ConductanceModel& model) {
  const auto s = sample_ppp(w, 1.0, seed);
  const auto t = delaunay(s.points, w.dimension, w);
  return assign_conductances(trim_to_analysis_region(delaunay_graph(t), w), model);
}

// 1 -------------------------------------------------------------------------
Outcome void_probability() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto v = empirical_void_probability(ProcessDescriptor::poisson(1.0), 2, 1.0, 100000, 101, kThreads);
  const double secs = seconds_since(t0);
  const double target = std::exp(-1.0);
  const double err = std::fabs(v.probability.estimate - target);
  return {err <= 0.005 && secs < 10.0,
          fmt("P[empty unit square] = %.5f vs e^-1 = %.5f (|diff| %.5f <= 0.005), 1e5 replicas in %.2f s (< 10 s)",
              v.probability.estimate, target, err, secs)};
}

// 2 -------------------------------------------------------------------------
std::vector<std::array<int, 4>> simplex_set(const Triangulation& t) {
  std::vector<std::array<int, 4>> out;
  for (const auto& s : t.simplices) out.push_back(gt::canonical(s, t.dimension));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome geometry_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  std::size_t dt_mismatch = 0, gab_outside = 0, vs_bad = 0, vs_checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 3;
    const std::size_t n = dim == 2 ? 3 + rng.below(8) : 4 + rng.below(5);
    const auto pts = gt::uniform_points(rng, n, dim);
    const auto t = delaunay(pts, dim, bounding_window(pts, dim));
    auto brute = gt::brute_force_delaunay(pts, dim);
    std::sort(brute.begin(), brute.end());
    dt_mismatch += simplex_set(t) != brute;
    std::set<std::pair<int, int>> dt_edges;
    for (const auto& e : delaunay_edges(t)) dt_edges.insert({std::min(e.first, e.second), std::max(e.first, e.second)});
    const auto gab = gabriel(pts, t);
    for (const auto& e : gab.edges) {
      const int a = static_cast<int>(gab.origin[e.u]), b = static_cast<int>(gab.origin[e.v]);
      gab_outside += !dt_edges.count({std::min(a, b), std::max(a, b)});
    }
  }
  // Interior Voronoi vertices: simplices with no hull facet.
  for (int dim : {2, 3}) {
    const auto s = sample_ppp(Window::cube(dim, 0, dim == 2 ? 20.0 : 8.0, 2.0), 1.0, 303 + dim);
    const auto t = delaunay(s.points, dim, s.window);
    const auto vs = voronoi_skeleton(t);
    const auto adj = adjacency(vs);
    for (std::size_t k = 0; k < t.size(); ++k) {
      bool interior = true;
      for (int j = 0; j <= dim; ++j) interior = interior && t.neighbors[k][j] >= 0;
      if (!interior) continue;
      ++vs_checked;
      vs_bad += adj[k].size() != static_cast<std::size_t>(dim + 1);
    }
  }
  const double secs = seconds_since(t0);
  return {dt_mismatch == 0 && gab_outside == 0 && vs_bad == 0 && vs_checked > 0 && secs < 30.0,
          fmt("100 instances: %zu DT mismatches vs brute force, %zu Gabriel edges outside DT; "
              "%zu/%zu interior VS vertices with degree != d+1; %.2f s (< 30 s)",
              dt_mismatch, gab_outside, vs_bad, vs_checked, secs)};
}

// 3 -------------------------------------------------------------------------
Outcome euler_bound() {
  std::size_t graph_violations = 0, collar_violations = 0, collars = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = sample_ppp(Window::cube(2, 0, 40, 8), 1.0, 3000 + seed);
    const auto t = delaunay(s.points, 2, s.window);
    const auto g = trim_to_analysis_region(delaunay_graph(t), s.window);
    graph_violations += g.edges.size() + 6 > 3 * g.vertices.size();
    const auto rep = envelope_events(s, g, {20, 20, 0}, {3, 6, 9, 12, 15, 18}, 1.0, 2.0);
    for (const auto& row : rep.rows) {
      if (row.skipped) continue;
      ++collars;
      collar_violations += !row.euler_ok;
    }
  }
  return {graph_violations == 0 && collar_violations == 0,
          fmt("100 seeds: %zu trimmed DT graphs and %zu/%zu collar regions R(i) violate edges <= 3 vertices - 6",
              graph_violations, collar_violations, collars)};
}

// 4 -------------------------------------------------------------------------
Outcome resistance_oracles() {
  Rng rng(404);
  double worst = 0.0;
  int tested = 0;
  while (tested < 50) {
    const int n = 3 + static_cast<int>(rng.below(8));
    const auto net = gt::random_network(rng, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(tested));
    const int na = 1 + static_cast<int>(rng.below(2)), nz = 1 + static_cast<int>(rng.below(2));
    if (na + nz > n) continue;
    const std::vector<int> A(perm.begin(), perm.begin() + na), Z(perm.begin() + na, perm.begin() + na + nz);
    const double oracle = gt::matrix_tree_resistance(net, A, Z);
    worst = std::max(worst, std::fabs(effective_resistance(net, A, Z).value - oracle) / oracle);
    ++tested;
  }
  const auto series = assign_conductances(graph_from_edges(2, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1}, {1, 2}}),
                                          ConductanceModel::unit());
  const auto parallel = assign_conductances(graph_from_edges(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1}, {0, 2}}),
                                            ConductanceModel::unit());
  const double rs = effective_resistance(series, 0, 2).value;
  const double rp = effective_resistance(parallel, {0}, {1, 2}).value;
  const double tol = SolverOptions{}.tolerance;
  return {worst <= 1e-9 && std::fabs(rs - 2.0) <= tol && std::fabs(rp - 0.5) <= tol,
          fmt("50 networks: max relative error vs matrix-tree %.2e (<= 1e-9); series %.12f, parallel %.12f (tol %.0e)", worst,
              rs, rp, tol)};
}

// 5 -------------------------------------------------------------------------
Outcome reduction_bound() {
  std::size_t violations = 0;
  double tightest = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int dim = 2 + static_cast<int>(seed % 2);
    const double side = dim == 2 ? 24 : 10;
    const auto model = seed % 3 == 0 ? ConductanceModel::exponential(0.5) : ConductanceModel::unit();
    const auto net = ppp_dt_network(Window::cube(dim, 0, side, 3), 500 + seed, model);
    const Point c{side / 2, side / 2, dim == 3 ? side / 2 : 0};
    const int imax = static_cast<int>(side / 2) - 1;
    int i0 = 1;
    auto term = annulus_terminals(net.graph, c, i0, imax);
    while (term.inner.empty()) term = annulus_terminals(net.graph, c, ++i0, imax);
    const auto b = annulus_reduction_bound(net, c, i0, imax);
    const auto r = effective_resistance(net, term.inner, term.outer);
    violations += r.infinite || b.bound > r.value * (1 + 1e-9);
    tightest = std::max(tightest, b.bound / r.value);
  }
  const auto hand = assign_conductances(graph_from_edges(2, {{0.5, 0, 0}, {2.5, 0, 0}}, {{0, 1}}), ConductanceModel::unit());
  const double hb = annulus_reduction_bound(hand, {0, 0, 0}, 1, 2).bound;
  const double he = effective_resistance(hand, 0, 1).value;
  return {violations == 0 && hb == 1.0 && hb <= he,
          fmt("50 PPP networks (d=2,3): %zu violations, max bound/exact %.3f; one spanning edge: bound %.3f, exact %.3f",
              violations, tightest, hb, he)};
}

// 6 -------------------------------------------------------------------------
Outcome dichotomy() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  double worst_z = 0.0;
  {
    const Window w = Window::cube(2, 0, 100, 10);
    const auto net = ppp_dt_network(w, 601, ConductanceModel::unit());
    std::vector<int> ns;
    for (int n = 5; n <= 48; ++n) ns.push_back(n);
    const auto prof = recurrence_profile(net, {50, 50, 0}, ns, 200000, 602, kThreads);
    std::vector<double> x, r;
    for (const auto& row : prof.rows) {
      x.push_back(row.n);
      r.push_back(row.resistance);
      worst_z = std::max(worst_z, row.identity_z);
    }
    const double rho = spearman(x, r);
    pass = pass && rho > 0.95;
    detail += fmt("d=2 n=5..48: R %.3f -> %.3f, Spearman %.4f (> 0.95); ", r.front(), r.back(), rho);
  }
  {
    const Window w = Window::cube(3, 0, 40, 6);
    const auto net = ppp_dt_network(w, 603, ConductanceModel::unit());
    std::vector<int> ns;
    for (int n = 5; n <= 18; ++n) ns.push_back(n);
    const auto prof = recurrence_profile(net, {20, 20, 20}, ns, 200000, 604, kThreads);
    for (const auto& row : prof.rows) worst_z = std::max(worst_z, row.identity_z);
    const auto& mid = prof.rows[prof.rows.size() / 2];
    const auto& top = prof.rows.back();
    const double rel = (top.resistance - mid.resistance) / mid.resistance;
    pass = pass && rel < 0.10;
    detail += fmt("d=3 n=5..18: R(%d) %.4f -> R(%d) %.4f, top-half increase %.2f%% (< 10%%); ", mid.n, mid.resistance,
                  top.n, top.resistance, 100.0 * rel);
  }
  const double secs = seconds_since(t0);
  pass = pass && worst_z < 3.0 && secs < 600.0;
  detail += fmt("escape identity max |z| %.2f (< 3); %.1f s (< 600 s)", worst_z, secs);
  return {pass, detail};
}

// 7 -------------------------------------------------------------------------
Outcome short_paths() {
  Rng rng(707);
  std::size_t pairs = 0, failures = 0;
  const std::size_t per_sample[] = {167, 167, 167, 167, 166, 166};
  for (int k = 0; k < 6; ++k) {
    const int dim = 2 + k % 2;
    const Window w = Window::cube(dim, 0, dim == 2 ? 24.0 : 9.0, 2.0);
    const int kind = k / 2;
    const PointSet ps = kind == 0   ? sample_ppp(w, 1.0, 710 + k)
                        : kind == 1 ? sample_matern_cluster(w, 0.2, 5.0, 1.0, 710 + k)
                                    : sample_matern_hardcore(w, 2.0, 0.4, HardcoreVariant::II, 710 + k);
    const auto t = delaunay(ps.points, dim, ps.window);
    const auto gab = gabriel(ps.points, t);
    std::set<std::pair<int, int>> edges;
    for (const auto& e : gab.edges) {
      const int a = static_cast<int>(gab.origin[e.u]), b = static_cast<int>(gab.origin[e.v]);
      edges.insert({std::min(a, b), std::max(a, b)});
    }
    const GabrielPathFinder finder(ps.points, gab);
    for (std::size_t j = 0; j < per_sample[k]; ++j, ++pairs) {
      const int x = static_cast<int>(rng.below(ps.points.size())), y = static_cast<int>(rng.below(ps.points.size()));
      const auto p = finder.path(x, y);
      bool ok = p.vertices.front() == x && p.vertices.back() == y && squared_budget_holds(ps.points, p.vertices, dim);
      for (std::size_t h = 0; ok && h + 1 < p.vertices.size(); ++h)
        ok = edges.count({std::min(p.vertices[h], p.vertices[h + 1]), std::max(p.vertices[h], p.vertices[h + 1])}) > 0;
      failures += !ok;
    }
  }
  return {pairs == 1000 && failures == 0,
          fmt("%zu pairs over PPP/MCP/MHP-II in d=2,3: %zu fail the exact squared-length budget or Gabriel-edge check", pairs,
              failures)};
}

// 8 and 9 share the conditioned Gabriel pair fields.
struct GabrielPairs {
  std::vector<BoxField> fields;
  std::vector<Network> nets;
};

constexpr int kPairDim = 3, kPairM = 2;
constexpr double kPairSide = 5.0;
constexpr long long kPairAlpha = 5;

const GabrielPairs& gabriel_pairs() {
  static const GabrielPairs pairs = [] {
    GabrielPairs out;
    for (int r = 0; r < 100; ++r) {
      const auto s = sample_conditioned_gabriel_pair(kPairDim, kPairSide, kPairM, kPairAlpha, 1.0, 3.0, 8000 + r);
      auto f = classify_good_boxes_gabriel(s.points, s.window, kPairSide, kPairM, kPairAlpha);
      const auto t = delaunay(s.points, kPairDim, s.window);
      const auto gab = gabriel(s.points, t);
      const GabrielPathFinder finder(s.points, gab);
      build_all_box_paths_gabriel(f, finder, gab);
      out.nets.push_back(assign_conductances(gab, ConductanceModel::unit()));
      out.fields.push_back(std::move(f));
    }
    return out;
  }();
  return pairs;
}

Outcome gabriel_budgets() {
  const auto& gp = gabriel_pairs();
  const int d = kPairDim, m = kPairM;
  const double a = static_cast<double>(kPairAlpha);
  const double hop_len = std::sqrt(d + 3.0) * kPairSide / a;
  const double hop_total = 2.0 * std::pow(a, d) * m - 1.0;
  const double long_cap = std::ldexp(1.0, 2 * d + 2) * (d + 3.0) * m * m;
  std::size_t pairs = 0, demoted = 0, inconsistent = 0;
  for (const auto& f : gp.fields)
    for (const auto& p : f.paths) {
      ++pairs;
      if (!p.valid) {
        ++demoted;
        continue;
      }
      const bool within = p.max_segment_radius <= 0.5 * kPairSide && p.max_length <= hop_len &&
                          static_cast<double>(p.hops) <= hop_total && static_cast<double>(p.max_long_edges) <= long_cap;
      inconsistent += !within;
    }
  const double rate = pairs ? static_cast<double>(demoted) / static_cast<double>(pairs) : 1.0;
  return {pairs == 100 && inconsistent == 0 && rate < 0.05,
          fmt("%zu adjacent good pairs (d=3, m=2, M=5, alpha=%lld in place of alpha_{3,2}=%lld): demotion rate %.1f%% (< 5%%), "
              "%zu stored paths break B(c_i,M/2), hop <= %.3f, hops <= %.0f or long edges <= %.0f",
              pairs, kPairAlpha, gabriel_alpha(d, m), 100.0 * rate, inconsistent, hop_len, hop_total, long_cap)};
}

Outcome rough_embedding() {
  std::size_t fields = 0, used = 0, failures = 0;
  double worst_alpha = 0.0;
  std::size_t worst_beta = 0;
  auto record = [&](const RoughEmbedding& e, double KL) {
    ++fields;
    used += e.paths_used;
    failures += !e.alpha_ok || !e.beta_ok;
    worst_alpha = std::max(worst_alpha, e.alpha / KL);
    worst_beta = std::max(worst_beta, e.beta);
  };
  const auto& gp = gabriel_pairs();
  for (std::size_t k = 0; k < gp.fields.size(); ++k) {
    const auto e = verify_rough_embedding(gp.fields[k], gp.nets[k]);
    record(e, e.K * e.L);
  }
  // Planar VS fields with decreasing conductances.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = sample_ppp(Window::cube(2, 0, 48, 6), 8.0, 900 + seed);
    const auto t = delaunay(s.points, 2, s.window);
    const auto vs = trim_to_analysis_region(voronoi_skeleton(t), s.window);
    auto f = classify_good_boxes_vs(s.points, s.window, 12.0, poisson_c4(8.0));
    const VsPathContext ctx(vs, t);
    assign_vs_references(f, ctx);
    build_all_box_paths_vs(f, ctx);
    const auto e = verify_rough_embedding(f, assign_conductances(vs, ConductanceModel::exponential(0.5)));
    record(e, e.K * e.L);
  }
  // Gabriel field of an unconditioned sample.
  {
    const auto s = sample_ppp(Window::cube(3, 0, 13.5, 3), 1.0, 950);
    const auto t = delaunay(s.points, 3, s.window);
    const auto gab = gabriel(s.points, t);
    auto f = classify_good_boxes_gabriel(s.points, s.window, 4.5, 8, 3);
    const GabrielPathFinder finder(s.points, gab);
    build_all_box_paths_gabriel(f, finder, gab);
    const auto e = verify_rough_embedding(f, assign_conductances(gab, ConductanceModel::power(2.0)));
    record(e, e.K * e.L);
  }
  return {failures == 0 && used > 0,
          fmt("%zu box fields, %zu paths: %zu fail; max beta %zu (<= 2d), max alpha/(K L) %.4f (<= 1)", fields, used, failures,
              worst_beta, worst_alpha)};
}

// 10 ------------------------------------------------------------------------
Outcome good_box_probability() {
  const auto desc = ProcessDescriptor::poisson(1.0);
  std::vector<double> Ms{8, 12, 16, 20, 24, 28, 32};
  std::vector<ProportionEstimate> p;
  for (double M : Ms) {
    const BoxParameters params{BoxVariant::VS, M, poisson_c4(1.0), 0, 0};
    p.push_back(estimate_good_box_probability(desc, 3, params, 400, 1000 + static_cast<std::uint64_t>(M), 0.99, std::nullopt,
                                              kThreads)
                    .probability);
  }
  bool monotone = true, reached = false;
  std::string grid;
  for (std::size_t k = 0; k < p.size(); ++k) {
    grid += fmt("%s%.0f:%.3f", k ? " " : "", Ms[k], p[k].estimate);
    reached = reached || p[k].estimate > 0.99;
    if (k > 0) {
      const double se = std::hypot(p[k].standard_error, p[k - 1].standard_error);
      monotone = monotone && p[k].estimate >= p[k - 1].estimate - 2.0 * se;
    }
  }
  return {reached && monotone, fmt("VS d=3 P[X_z=1] by M (400 replicas): %s; exceeds 0.99: %s; monotone within 2 SE: %s",
                                   grid.c_str(), reached ? "yes" : "no", monotone ? "yes" : "no")};
}

// 11 ------------------------------------------------------------------------
Outcome envelopes() {
  const auto desc = ProcessDescriptor::poisson(1.0);
  const auto [c1, c2] = estimate_envelope_constants(desc, 1100, kThreads);
  const std::vector<int> is{3, 5, 8, 12, 16, 20, 25, 30, 35};
  const std::size_t seeds = 200;
  std::vector<EnvelopeReport> dt(seeds), vs(seeds);
  parallel_for(seeds, kThreads, [&](std::size_t k) {
    const auto s = sample_ppp(Window::cube(2, 0, 80, 10), 1.0, derive_seed(1101, k));
    const auto t = delaunay(s.points, 2, s.window);
    dt[k] = envelope_events(s, trim_to_analysis_region(delaunay_graph(t), s.window), {40, 40, 0}, is, c1, c2);
    vs[k] = envelope_events(s, trim_to_analysis_region(voronoi_skeleton(t), s.window), {40, 40, 0}, is, c1, c2);
  });
  const auto fdt = envelope_frequencies(dt), fvs = envelope_frequencies(vs);
  const auto a_dt = inverse_square_check(fdt.index, fdt.long_edge), c_dt = inverse_square_check(fdt.index, fdt.many_edges);
  const auto a_vs = inverse_square_check(fvs.index, fvs.long_edge), c_vs = inverse_square_check(fvs.index, fvs.many_edges);
  auto part = [](const char* name, const InverseSquareCheck& c) {
    return fmt("%s max f i^2 %.3f vs 10 c^ %.3f", name, c.max_scaled, 10.0 * c.fitted);
  };
  return {a_dt.bounded && c_dt.bounded && a_vs.bounded && c_vs.bounded,
          fmt("%zu seeds, c1^ %.3f, c2^ %.3f: ", seeds, c1, c2) + part("A_DT", a_dt) + "; " + part("C_DT", c_dt) + "; " +
              part("A_VS", a_vs) + "; " + part("C_VS", c_vs)};
}

// 12 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  std::size_t configs = 0, files = 0, differing = 0;
  const auto root = fs::temp_directory_path() / "geowalk_acceptance_determinism";
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(GEOWALK_CONFIG_DIR))
    if (entry.path().extension() == ".json") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& path : paths) {
    const auto c = parse_config(load_json_file(path.string()));
    fs::remove_all(root);
    const auto r1 = run_pipeline(c, root / "a");
    const auto r2 = run_pipeline(c, root / "b");
    ++configs;
    differing += r1.files != r2.files;
    for (const auto& f : r1.files) {
      ++files;
      differing += slurp(root / "a" / f) != slurp(root / "b" / f);
    }
  }
  fs::remove_all(root);
  return {configs > 0 && differing == 0,
          fmt("%zu example configs run twice: %zu of %zu output files differ", configs, differing, files)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"void probability", void_probability},
      {"geometry oracles", geometry_oracles},
      {"planar Euler bound", euler_bound},
      {"resistance oracles", resistance_oracles},
      {"annulus reduction bound", reduction_bound},
      {"recurrence/transience dichotomy", dichotomy},
      {"short Gabriel paths", short_paths},
      {"Gabriel box-path budgets", gabriel_budgets},
      {"rough embedding", rough_embedding},
      {"good-box probability", good_box_probability},
      {"envelope events", envelopes},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
