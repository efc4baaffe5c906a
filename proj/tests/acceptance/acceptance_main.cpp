// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any criterion in the selected part fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "palms/convergence.hpp"
#include "palms/eval.hpp"

using namespace palms;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("criterion %d: %s  %s (%s)\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1 ------------------------------------------------------------------------

RasterGrid brute_force(const RasterGrid& plan, const ObservationKernel& k) {
  RasterGrid out(plan.spec());
  for (int cy = 0; cy < plan.height(); ++cy) {
    for (int cx = 0; cx < plan.width(); ++cx) {
      double s = 0.0;
      for (int jy = 0; jy < k.grid.height(); ++jy) {
        const int py = cy + jy - k.anchor.y;
        if (py < 0 || py >= plan.height()) continue;
        for (int jx = 0; jx < k.grid.width(); ++jx) {
          const int px = cx + jx - k.anchor.x;
          if (px < 0 || px >= plan.width()) continue;
          s += k.grid.at(jx, jy) * plan.at(px, py);
        }
      }
      out.at(cx, cy) = s;
    }
  }
  return out;
}

void criterion1() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::bernoulli_distribution wall(0.12);
  const KernelParams params;
  double worst = 0.0;
  double heat_s = 0.0;
  const auto t0 = Clock::now();
  const int pairs = 10;
  for (int i = 0; i < pairs; ++i) {
    RasterGrid plan(GridSpec{{0, 0}, params.resolution, 50, 50});
    for (double& v : plan.values()) v = wall(rng) ? 1.0 : 0.0;
    Observation obs;
    for (int s = 0; s < 3 + i % 4; ++s) {
      const Vec2 a{u(rng), u(rng)};
      Vec2 b{u(rng), u(rng)};
      if ((b - a).norm() < 0.5) b = a + Vec2{0.7, 0.2};
      obs.segments.emplace_back(a, b);
    }
    const auto kernels = build_kernels(obs, Angle::from_degrees(u(rng) * 10.0), params);
    const auto h0 = Clock::now();
    const HeatmapSet hs = compute_heatmaps(plan, kernels, params);
    heat_s += seconds_since(h0);
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      const RasterGrid ref = brute_force(plan, kernels[k]);
      for (std::size_t c = 0; c < ref.values().size(); ++c) {
        worst = std::max(worst, std::abs(ref.values()[c] - hs.maps[k].values()[c]));
      }
    }
  }
  const double total_s = seconds_since(t0);
  report(1, worst <= 1e-9 && total_s < 10.0, "heatmap equals brute-force correlation",
         std::to_string(pairs) + " pairs, max |diff| " + fmt("%.3g", worst) + ", heatmaps " +
             fmt("%.2f", heat_s) + " s, total " + fmt("%.2f", total_s) + " s");
}

// 2 ------------------------------------------------------------------------

void criterion2() {
  // Observation: a corner 3 m ahead and a wall 2.5 m to the left.
  Observation obs;
  obs.segments = {Segment2D({3.0, -2.0}, {3.0, 2.0}), Segment2D({-2.0, 2.5}, {2.0, 2.5}),
                  Segment2D({-2.0, -2.5}, {1.0, -2.5})};
  const KernelParams params;
  // Two identical copies of the observed geometry, 20 m apart (a whole
  // number of cells); the second copy has a wall inside its empty space.
  const Vec2 p1{6.0, 6.0};
  const Vec2 p2{26.0, 6.0};
  FloorPlan plan;
  plan.bounds = {{0, 0}, {40, 14}};
  for (const Vec2 p : {p1, p2}) {
    for (const auto& s : obs.segments) plan.walls.emplace_back(s.a() + p, s.b() + p);
  }
  const Segment2D occluder(p2 + Vec2{1.2, -0.8}, p2 + Vec2{1.2, 0.8});
  FloorPlan occluded = plan;
  occluded.walls.push_back(occluder);

  const auto kernels = build_kernels(obs, Angle{}, params);
  KernelParams rw_only = params;
  rw_only.alpha = 0.0;
  const auto rw_kernels = build_kernels(obs, Angle{}, rw_only);
  const RasterGrid raster = rasterize_floorplan(occluded, params.resolution);
  const CellIndex c1 = raster.spec().cell_of(p1);
  const CellIndex c2 = raster.spec().cell_of(p2);
  const HeatmapSet rw = compute_heatmaps(raster, rw_kernels, rw_only);
  const HeatmapSet full = compute_heatmaps(raster, kernels, params);
  const double rw1 = rw.maps[0].at(c1);
  const double rw2 = rw.maps[0].at(c2);
  const double s1 = full.maps[0].at(c1);
  const double s2 = full.maps[0].at(c2);

  // Occluder cells that fall inside the empty-space raster placed at p2.
  const ObservationKernel& k = kernels[0];
  const RasterGrid ces = rasterize_ces(build_ces_region(obs, Angle{}, params), k.grid.spec());
  const RasterGrid occ_only = [&] {
    FloorPlan only;
    only.bounds = plan.bounds;
    only.walls = {occluder};
    return rasterize_floorplan(only, params.resolution);
  }();
  int overlap = 0;
  for (int y = 0; y < occ_only.height(); ++y) {
    for (int x = 0; x < occ_only.width(); ++x) {
      if (occ_only.at(x, y) == 0.0) continue;
      const int jx = x - c2.x + k.anchor.x;
      const int jy = y - c2.y + k.anchor.y;
      if (jx >= 0 && jy >= 0 && jx < ces.width() && jy < ces.height() && ces.at(jx, jy) != 0.0) ++overlap;
    }
  }
  const double rw_unit = 1.0;  // peak of the widened wall profile
  const double gap = s1 - s2;
  const bool pass = std::abs(rw1 - rw2) < 1e-9 && overlap > 0 && s2 < s1 &&
                    gap >= 0.5 * params.alpha * overlap * rw_unit;
  report(2, pass, "empty-space wall lowers the score",
         "RW " + fmt("%.4f", rw1) + " vs " + fmt("%.4f", rw2) + ", combined " + fmt("%.4f", s1) + " vs " +
             fmt("%.4f", s2) + ", gap " + fmt("%.3f", gap) + ", overlap " + std::to_string(overlap) +
             " cells");
}

// 3 ------------------------------------------------------------------------

void criterion3() {
  const auto t0 = Clock::now();
  const KernelParams params;
  int hits = 0;
  int scenes = 0;
  const int worlds = 20;
  const int poses = 10;
  for (int w = 0; w < worlds; ++w) {
    WorldSpec spec;
    spec.generator = w % 2 ? WorldGenerator::rooms_off_corridor : WorldGenerator::corridor_grid;
    spec.extent_x = 60.0;
    spec.extent_y = w % 2 ? 24.0 : 36.0;
    spec.seed = splitmix64(3000 + static_cast<std::uint64_t>(w));
    const World world = generate_world(spec);
    const RasterGrid raster = rasterize_floorplan(world.plan, params.resolution);
    const Angle fp = principal_orientation(world.plan.walls);
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < poses; ++i) {
      const Vec2 pos = world.corridors.point_at(unit(rng) * world.corridors.total_length());
      const double heading = 360.0 * unit(rng);
      const Observation obs = raycast_scan(world.plan, pos, Angle::from_degrees(heading));
      const Angle theta = alignment_angle(principal_orientation(obs.segments), fp);
      const auto kernels = build_kernels(obs, theta, params);
      // The orientation whose rotation undoes the scan heading.
      std::size_t best = 0;
      double best_err = 1e9;
      for (std::size_t k = 0; k < kernels.size(); ++k) {
        const double e = std::abs((kernels[k].rotation + Angle::from_degrees(heading)).signed_degrees());
        if (e < best_err) {
          best_err = e;
          best = k;
        }
      }
      const HeatmapSet hs = compute_heatmaps(raster, kernels, params);
      const CandidateMask mask = binarize_top_percent(hs, 0.01);
      const CellIndex c = raster.spec().cell_of(pos);
      hits += mask.masks[best].at(c) != 0.0 ? 1 : 0;
      ++scenes;
    }
  }
  const double secs = seconds_since(t0);
  const double recall = static_cast<double>(hits) / scenes;
  report(3, recall >= 0.95 && secs < 300.0, "true cell in the top-1% mask",
         std::to_string(hits) + "/" + std::to_string(scenes) + " = " + fmt("%.1f%%", 100.0 * recall) + ", " +
             fmt("%.1f", secs) + " s");
}

// 4 ------------------------------------------------------------------------

void criterion4() {
  WorldSpec spec;
  spec.generator = WorldGenerator::rooms_off_corridor;
  spec.extent_x = 60.0;
  spec.extent_y = 24.0;
  spec.seed = 4004;
  const World world = generate_world(spec);
  const Vec2 start = world.corridors.point_at(0.37 * world.corridors.total_length());
  const TruthTrace walk = generate_walk(world, start, 147.0, 41);
  const PipelineParams params;
  std::string detail;
  bool all = true;
  for (double h : {0.0, 30.0, 90.0, 217.0}) {
    auto sc = std::make_shared<Scenario>();
    sc->id = "closure-" + std::to_string(static_cast<int>(h));
    sc->plan = world.plan;
    sc->observation = raycast_scan(world.plan, start, Angle::from_degrees(h));
    sc->truth = walk;
    sc->odometry = corrupt_odometry(walk, h, OdometryNoise{0.0, 0.0}, 1);
    const PreparedScenario prep = prepare_scenario(sc, params);
    const TrialRecord r = run_trial(prep, Method::palms, params, 7);
    double worst = 0.0;
    for (const auto& e : r.post_errors) worst = std::max(worst, e.error);
    const bool ok = r.outcome == Outcome::converged && !r.post_errors.empty() && worst < 0.3;
    all = all && ok;
    if (!detail.empty()) detail += "; ";
    detail += fmt("h=%.0f: ", h) +
              (r.outcome == Outcome::converged ? "max err " + fmt("%.3f m", worst) + fmt(" from t2=%.1f s", *r.t2)
                                               : std::string(to_string(r.outcome)));
  }
  report(4, all, "zero-noise run tracks truth after t2", detail);
}

// 5 ------------------------------------------------------------------------

void criterion5() {
  const auto t0 = Clock::now();
  FilterConfig cfg;
  cfg.n_particles = 50;
  const int runs = 100;
  const int steps_per_run = 1000;
  long steps = 0;
  long violations = 0;
  long collapses = 0;
  bool deterministic = true;
  for (int run = 0; run < runs; ++run) {
    WorldSpec spec;
    spec.generator = run % 2 ? WorldGenerator::rooms_off_corridor : WorldGenerator::corridor_grid;
    spec.extent_x = 40.0;
    spec.extent_y = 24.0;
    spec.seed = 5000 + static_cast<std::uint64_t>(run % 10);
    const World world = generate_world(spec);
    const CollisionIndex index(world.plan);
    auto simulate = [&](bool check) {
      Rng rng(splitmix64(static_cast<std::uint64_t>(run)));
      std::mt19937_64 motion(static_cast<std::uint64_t>(run) * 7919u);
      std::uniform_real_distribution<double> dir(0.0, kTwoPi);
      std::uniform_real_distribution<double> len(0.05, 1.0);
      ParticleSet ps = init_uniform_ori(world.plan, Angle::from_degrees(3.0), cfg, rng);
      StepOutcome out;
      for (int t = 0, done = 0; done < steps_per_run; ++t) {
        const double a = dir(motion);
        const OdometryStep odo{0.1 * (t + 1), Vec2{std::cos(a), std::sin(a)} * len(motion), Angle{}};
        const ParticleSet before = ps;
        try {
          step(ps, odo, index, cfg, rng, out);
        } catch (const FilterCollapsed&) {
          if (check) ++collapses;
          ps = init_uniform_ori(world.plan, Angle::from_degrees(3.0), cfg, rng);
          continue;
        }
        ++done;
        if (!check) continue;
        ++steps;
        if (ps.size() != before.size()) ++violations;
        std::vector<char> replaced(ps.size(), 0);
        for (const auto& r : out.replacements) replaced[r.slot] = 1;
        std::vector<int> had(4, 0);
        for (const auto& p : before) had[static_cast<std::size_t>(p.label)] = 1;
        for (std::size_t i = 0; i < ps.size(); ++i) {
          if (!had[static_cast<std::size_t>(ps[i].label)]) ++violations;
          if (replaced[i]) continue;
          if (index.path_hits_wall_brute_force(before[i].position, ps[i].position)) ++violations;
        }
      }
      return ps;
    };
    const ParticleSet a = simulate(true);
    if (run % 10 == 0) {
      const ParticleSet b = simulate(false);
      for (std::size_t i = 0; i < a.size(); ++i) {
        deterministic = deterministic && a[i].position == b[i].position &&
                        a[i].drift().radians() == b[i].drift().radians() && a[i].label == b[i].label;
      }
    }
  }
  report(5, steps >= 100000 && violations == 0 && deterministic, "filter invariants",
         std::to_string(steps) + " steps, " + std::to_string(violations) + " violations, " +
             std::to_string(collapses) + " collapses re-seeded, deterministic " + (deterministic ? "yes" : "no") +
             ", " + fmt("%.1f", seconds_since(t0)) + " s");
}

// 6 ------------------------------------------------------------------------

void criterion6() {
  const ConvergenceParams params;
  auto labeled = [](int a, int b) {
    ParticleSet ps;
    for (int i = 0; i < a + b; ++i) ps.emplace_back(Vec2{0.01 * i, 0.0}, Angle{}, i < a ? 0 : 1);
    return ps;
  };
  const bool s1_at = check_step1(labeled(800, 200), params).passed;
  const bool s1_below = check_step1(labeled(799, 201), params).passed;

  std::mt19937_64 rng(66);
  std::normal_distribution<double> g(0.0, 0.2);
  auto blob = [&](Vec2 c, int n, int label, ParticleSet& out) {
    for (int i = 0; i < n; ++i) out.emplace_back(c + Vec2{g(rng), g(rng)}, Angle{}, label);
  };
  ParticleSet half;
  blob({0, 0}, 50, 0, half);
  blob({10, 0}, 30, 0, half);
  blob({-10, 0}, 20, 0, half);
  const Step2Result s2_at = check_step2(half, 0, params);
  ParticleSet below;
  blob({0, 0}, 49, 0, below);
  blob({10, 0}, 31, 0, below);
  blob({-10, 0}, 20, 0, below);
  const Step2Result s2_below = check_step2(below, 0, params);

  std::vector<Vec2> pts;
  for (const auto& p : half) pts.push_back(p.position);
  const MeanShiftResult ms = mean_shift(pts, params.meanshift_bandwidth);
  bool separated = ms.modes.size() == 3;
  for (std::size_t i = 0; separated && i < pts.size(); ++i) {
    separated = ms.assignment[i] == (i < 50 ? 0 : (i < 80 ? 1 : 2));
  }
  const bool pass = s1_at && !s1_below && s2_at.passed && s2_at.cluster_share == 0.5 && !s2_below.passed &&
                    separated;
  report(6, pass, "convergence boundary examples",
         std::string("80% ") + (s1_at ? "passes" : "fails") + ", 79.9% " + (s1_below ? "passes" : "fails") +
             ", 50% " + (s2_at.passed ? "passes" : "fails") + ", 49% " + (s2_below.passed ? "passes" : "fails") +
             ", blobs " + (separated ? "separated" : "merged"));
}

// 7 ------------------------------------------------------------------------

void criterion7() {
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> ang(0.0, 360.0);
  std::uniform_real_distribution<double> pos(-6.0, 6.0);
  std::uniform_real_distribution<double> len(0.3, 5.0);
  std::uniform_int_distribution<int> count(2, 30);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    // Directions cluster around a dominant axis, as in buildings.
    const double axis = ang(rng);
    std::normal_distribution<double> jitter(0.0, 4.0);
    std::vector<Segment2D> segs;
    for (int i = 0, n = count(rng); i < n; ++i) {
      const double d = deg_to_rad(axis + 90.0 * (i % 4) + jitter(rng));
      const Vec2 a{pos(rng), pos(rng)};
      segs.emplace_back(a, a + Vec2{std::cos(d), std::sin(d)} * len(rng));
    }
    const Angle beta = Angle::from_degrees(ang(rng));
    const double before = principal_orientation(segs).degrees();
    const double after = principal_orientation(rotate_segments(segs, beta, {0.0, 0.0})).degrees();
    const double diff = std::remainder(after - before - beta.degrees(), 90.0);
    worst = std::max(worst, std::abs(diff));
  }
  report(7, worst <= 0.1, "principal orientation is rotation equivariant",
         "100 sets, max deviation " + fmt("%.2e deg", worst));
}

// 8-10 ---------------------------------------------------------------------

const MethodSummary* find(const std::vector<MethodSummary>& s, Method m) {
  for (const auto& x : s) {
    if (x.method == m) return &x;
  }
  return nullptr;
}

BenchmarkConfig experiment_config(int trials, unsigned workers) {
  BenchmarkConfig cfg;
  cfg.trials_per_scenario = trials;
  cfg.master_seed = 1;
  cfg.workers = workers;
  return cfg;
}

std::vector<std::shared_ptr<const Scenario>> experiment_suite() {
  std::vector<std::shared_ptr<const Scenario>> out;
  for (auto& sc : build_suite(default_suite(1))) out.push_back(std::make_shared<const Scenario>(std::move(sc)));
  return out;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void experiment(int trials, unsigned workers, const fs::path& out_dir) {
  const auto t0 = Clock::now();
  const auto suite = experiment_suite();
  const BenchmarkConfig cfg = experiment_config(trials, workers);
  const BenchmarkResult res = run_benchmark(suite, cfg);
  write_benchmark_report(res, cfg, out_dir);
  const double secs = seconds_since(t0);
  std::cout << summary_text(res.summary, cfg);

  const MethodSummary* p = find(res.summary, Method::palms);
  const MethodSummary* u = find(res.summary, Method::uniform);
  const MethodSummary* o = find(res.summary, Method::uniform_ori);
  const bool time_order = p->mean_time_s < o->mean_time_s && o->mean_time_s < u->mean_time_s;
  const bool rmse_order = p->rmse_m < 0.5 * o->rmse_m && p->rmse_m < u->rmse_m / 3.0;
  const bool pct_order = p->pct_err_lt_1m > o->pct_err_lt_1m && o->pct_err_lt_1m > u->pct_err_lt_1m;
  std::ostringstream d;
  d << std::fixed << std::setprecision(2) << "time s " << p->mean_time_s << " / " << o->mean_time_s << " / "
    << u->mean_time_s << (time_order ? " ok" : " NOT ordered") << "; rmse m " << p->rmse_m << " / " << o->rmse_m
    << " / " << u->rmse_m << (rmse_order ? " ok" : " NOT ordered") << "; %<1m " << std::setprecision(1)
    << p->pct_err_lt_1m << " / " << o->pct_err_lt_1m << " / " << u->pct_err_lt_1m
    << (pct_order ? " ok" : " NOT ordered") << "; palms / uniform_ori / uniform; " << suite.size()
    << " paths x " << trials << " trials; " << std::setprecision(0) << secs << " s";
  report(8, time_order && rmse_order && pct_order, "method ordering on the synthetic suite", d.str());

  // Every trial is present in the records and counted in the summary.
  std::size_t expected = suite.size() * static_cast<std::size_t>(trials);
  bool accounted = true;
  for (const auto* s : {p, u, o}) {
    std::size_t failed = 0;
    for (const auto& r : res.records) {
      if (r.method == s->method && r.outcome != Outcome::converged) ++failed;
    }
    accounted = accounted && s->n_trials == expected && s->n_failed == failed &&
                s->n_failed == s->n_timeout + s->n_collapsed;
  }
  accounted = accounted && res.records.size() == 3 * expected;
  std::ostringstream f;
  f << std::fixed << std::setprecision(1) << "palms failed " << p->n_failed << "/" << p->n_trials << " ("
    << 100.0 * p->failure_rate() << "%: " << p->n_timeout << " timeout, " << p->n_collapsed
    << " collapsed); uniform_ori " << 100.0 * o->failure_rate() << "%; uniform " << 100.0 * u->failure_rate()
    << "%; all trials accounted " << (accounted ? "yes" : "no");
  report(9, accounted && p->failure_rate() < 0.20, "failure accounting", f.str());
}

void determinism(int trials, unsigned workers, const fs::path& out_dir) {
  const fs::path saved = out_dir / "summary.csv";
  if (!fs::exists(saved)) {
    report(10, false, "rerun reproduces the summary", "no saved summary at " + saved.string());
    return;
  }
  const auto t0 = Clock::now();
  const BenchmarkConfig cfg = experiment_config(trials, workers);
  const BenchmarkResult res = run_benchmark(experiment_suite(), cfg);
  const fs::path rerun = out_dir / "rerun";
  write_benchmark_report(res, cfg, rerun);
  const bool same_summary = read_text(rerun / "summary.csv") == read_text(saved);
  const bool same_records = read_text(rerun / "records.csv") == read_text(out_dir / "records.csv");
  report(10, same_summary && same_records, "rerun reproduces the summary",
         std::string("summary.csv ") + (same_summary ? "identical" : "DIFFERS") + ", records.csv " +
             (same_records ? "identical" : "DIFFERS") + ", " + fmt("%.0f s", seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string part = "all";
  fs::path out_dir = "acceptance_out";
  int trials = 100;
  unsigned workers = 0;
  app.add_option("--part", part, "properties, experiment, determinism or all")
      ->check(CLI::IsMember({"properties", "experiment", "determinism", "all"}))
      ->capture_default_str();
  app.add_option("--out-dir", out_dir, "Benchmark report directory")->capture_default_str();
  app.add_option("--trials", trials, "Trials per path and method")->capture_default_str();
  app.add_option("--workers", workers, "0 = all cores")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    if (part == "properties" || part == "all") {
      criterion1();
      criterion2();
      criterion3();
      criterion4();
      criterion5();
      criterion6();
      criterion7();
    }
    if (part == "experiment" || part == "all") experiment(trials, workers, out_dir);
    if (part == "determinism" || part == "all") determinism(trials, workers, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return g_failures == 0 ? 0 : 1;
}
