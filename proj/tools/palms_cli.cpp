#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include "palms/eval.hpp"
#include "palms/heatmap.hpp"
#include "palms/kernel.hpp"
#include "palms/synth.hpp"

namespace fs = std::filesystem;
using namespace palms;

namespace {

void add_kernel_flags(CLI::App* app, PipelineParams& p) {
  app->add_option("--alpha", p.kernel.alpha, "Empty-space penalty weight")->capture_default_str();
  app->add_option("--sigma", p.kernel.gaussian_sigma, "Wall widening sigma (m)")->capture_default_str();
  app->add_option("--ces-shrink", p.kernel.ces_shrink, "Empty-space triangle scale")->capture_default_str();
  app->add_option("--resolution", p.kernel.resolution, "Raster cell size (m)")->capture_default_str();
  app->add_option("--orientations", p.kernel.n_orientations, "Candidate orientations")->capture_default_str();
  app->add_option("--top-fraction", p.top_fraction, "Candidate mask fraction")->capture_default_str();
}

void add_filter_flags(CLI::App* app, PipelineParams& p) {
  app->add_option("--particles", p.filter.n_particles)->capture_default_str();
  app->add_option("--resample-pos-noise", p.filter.resample_pos_noise, "m")->capture_default_str();
  app->add_option("--resample-drift-noise", p.filter.resample_drift_noise_deg, "deg")->capture_default_str();
  app->add_option("--step-pos-noise", p.filter.step_pos_noise, "m")->capture_default_str();
  app->add_option("--step-drift-noise", p.filter.step_drift_noise_deg, "deg")->capture_default_str();
  app->add_flag("--equal-groups", p.filter.equal_groups, "Equal particle count per orientation");
  app->add_option("--label-dominance", p.convergence.label_dominance)->capture_default_str();
  app->add_option("--cluster-dominance", p.convergence.cluster_dominance)->capture_default_str();
  app->add_option("--bandwidth", p.convergence.meanshift_bandwidth, "Mean-shift bandwidth (m)")->capture_default_str();
  app->add_option("--cluster-period", p.convergence.cluster_update_period, "steps")->capture_default_str();
  app->add_option("--dispersion", p.convergence.uniform_dispersion_threshold, "m")->capture_default_str();
  app->add_option("--theta-window", p.theta_window, "steps")->capture_default_str();
}

int cmd_heatmap(const fs::path& plan_path, const fs::path& scan_path, const fs::path& out,
                const PipelineParams& p, bool kernels_too) {
  p.validate();
  const FloorPlan plan = load_floorplan_file(plan_path);
  const Observation obs = load_observation_file(scan_path);
  const Angle theta = alignment_angle(principal_orientation(obs.segments),
                                      principal_orientation(plan.walls));
  const auto kernels = build_kernels(obs, theta, p.kernel);
  const HeatmapSet hs = compute_heatmaps(rasterize_floorplan(plan, p.kernel.resolution), kernels, p.kernel);
  const CandidateMask mask = binarize_top_percent(hs, p.top_fraction);
  export_heatmaps(hs, mask, out);
  if (kernels_too) {
    for (const auto& k : kernels) {
      export_kernel(k, p.kernel.alpha, out / ("kernel_" + std::to_string(k.orientation_index) + ".pgm"));
    }
  }
  std::cout << std::fixed << std::setprecision(4) << "theta_deg " << theta.signed_degrees()
            << "\nthreshold " << mask.threshold_value << "\ncandidates " << mask.total_true_count()
            << "\n";
  return 0;
}

int cmd_localize(const fs::path& plan_path, const fs::path& scan_path, const fs::path& odo_path,
                 const std::optional<fs::path>& truth_path, const std::string& method_name,
                 std::uint64_t seed, const std::optional<fs::path>& timeline_path,
                 const PipelineParams& p) {
  auto sc = std::make_shared<Scenario>();
  sc->id = odo_path.stem().string();
  sc->plan = load_floorplan_file(plan_path);
  sc->observation = load_observation_file(scan_path);
  sc->odometry = load_odometry_file(odo_path);
  const bool has_truth = truth_path.has_value();
  if (has_truth) {
    std::ifstream in(*truth_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + truth_path->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    sc->truth = load_truth(ss.str());
  }
  const Method method = method_from_string(method_name);
  const PreparedScenario prepared = prepare_scenario(sc, p, method == Method::palms);
  TrialTrace trace;
  TrialRecord rec = run_trial(prepared, method, p, seed, &trace);
  if (!has_truth) {
    for (auto& row : trace.timeline) row.error.reset();
  }
  const std::string csv = timeline_csv(trace.timeline);
  if (timeline_path) {
    std::ofstream out(*timeline_path, std::ios::binary);
    out << csv;
  }
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "outcome " << to_string(rec.outcome) << "\n";
  if (rec.t1) std::cout << "t1_s " << *rec.t1 << "\n";
  if (rec.t2) std::cout << "t2_s " << *rec.t2 << "\n";
  if (rec.final_prediction) {
    std::cout << "p_pred " << rec.final_prediction->x << " " << rec.final_prediction->y << "\n";
  }
  if (has_truth && rec.rmse()) std::cout << "rmse_m " << *rec.rmse() << "\n";
  if (!rec.note.empty()) std::cout << "note " << rec.note << "\n";
  return rec.outcome == Outcome::converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PALMS floor-plan global localization"};
  app.require_subcommand(1);
  PipelineParams params;

  fs::path plan_path;
  fs::path scan_path;
  fs::path out_dir;

  auto* heatmap = app.add_subcommand("heatmap", "Heatmaps and candidate masks for one scan");
  bool kernels_too = false;
  heatmap->add_option("--plan", plan_path, "Floor plan JSON")->required()->check(CLI::ExistingFile);
  heatmap->add_option("--scan", scan_path, "Scan JSON")->required()->check(CLI::ExistingFile);
  heatmap->add_option("--out", out_dir, "Output directory")->required();
  heatmap->add_flag("--kernels", kernels_too, "Also export the kernels");
  add_kernel_flags(heatmap, params);

  auto* localize = app.add_subcommand("localize", "Run one localization trial");
  fs::path odo_path;
  std::optional<fs::path> truth_path;
  std::optional<fs::path> timeline_path;
  std::string method = "palms";
  std::uint64_t seed = 1;
  localize->add_option("--plan", plan_path)->required()->check(CLI::ExistingFile);
  localize->add_option("--scan", scan_path)->required()->check(CLI::ExistingFile);
  localize->add_option("--odometry", odo_path)->required()->check(CLI::ExistingFile);
  localize->add_option("--truth", truth_path, "Ground-truth trace for error columns");
  localize->add_option("--timeline", timeline_path, "Timeline CSV output");
  localize->add_option("--method", method)
      ->check(CLI::IsMember({"palms", "uniform", "uniform_ori"}))
      ->capture_default_str();
  localize->add_option("--seed", seed)->capture_default_str();
  add_kernel_flags(localize, params);
  add_filter_flags(localize, params);

  auto* bench = app.add_subcommand("bench", "Monte Carlo benchmark over a scenario manifest");
  fs::path manifest;
  std::vector<std::string> methods{"palms", "uniform", "uniform_ori"};
  BenchmarkConfig bench_cfg;
  bool snapshots = false;
  bench->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out_dir)->required();
  bench->add_option("--methods", methods)->delimiter(',')->capture_default_str();
  bench->add_option("--trials", bench_cfg.trials_per_scenario)->capture_default_str();
  bench->add_option("--seed", bench_cfg.master_seed)->capture_default_str();
  bench->add_option("--workers", bench_cfg.workers, "0 = all cores")->capture_default_str();
  bench->add_flag("--snapshots", snapshots, "Heatmaps and particle images for trial 0");
  add_kernel_flags(bench, params);
  add_filter_flags(bench, params);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario suite");
  SuiteSpec suite = default_suite(1);
  std::uint64_t suite_seed = 1;
  std::optional<std::string> generator;
  WorldSpec world;
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--seed", suite_seed)->capture_default_str();
  synth->add_option("--generator", generator, "Single world instead of the default pair")
      ->check(CLI::IsMember({"corridor_grid", "rooms_off_corridor"}));
  synth->add_option("--extent-x", world.extent_x)->capture_default_str();
  synth->add_option("--extent-y", world.extent_y)->capture_default_str();
  synth->add_option("--corridor-width", world.corridor_width)->capture_default_str();
  synth->add_option("--door-gap", world.door_gap)->capture_default_str();
  synth->add_option("--starts", suite.starts_per_world)->capture_default_str();
  synth->add_option("--paths", suite.paths_per_start)->capture_default_str();
  synth->add_option("--length", suite.path_length, "m")->capture_default_str();
  synth->add_option("--drift-min", suite.drift_min_deg, "deg")->capture_default_str();
  synth->add_option("--drift-max", suite.drift_max_deg, "deg")->capture_default_str();
  synth->add_option("--step-noise", suite.step_noise_fraction)->capture_default_str();
  synth->add_option("--scan-noise", suite.scan.endpoint_noise, "m")->capture_default_str();
  synth->add_option("--scan-dropout", suite.scan.dropout)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*heatmap) return cmd_heatmap(plan_path, scan_path, out_dir, params, kernels_too);
    if (*localize) {
      return cmd_localize(plan_path, scan_path, odo_path, truth_path, method, seed, timeline_path,
                          params);
    }
    if (*bench) {
      bench_cfg.methods.clear();
      for (const auto& m : methods) bench_cfg.methods.push_back(method_from_string(m));
      bench_cfg.params = params;
      if (snapshots) bench_cfg.snapshot_dir = out_dir / "snapshots";
      std::vector<std::shared_ptr<const Scenario>> scenarios;
      for (auto& sc : load_manifest(manifest)) {
        scenarios.push_back(std::make_shared<const Scenario>(std::move(sc)));
      }
      const BenchmarkResult result = run_benchmark(scenarios, bench_cfg);
      write_benchmark_report(result, bench_cfg, out_dir);
      std::cout << summary_text(result.summary, bench_cfg);
      return 0;
    }
    if (*synth) {
      const SuiteSpec base = default_suite(suite_seed);
      suite.seed = suite_seed;
      suite.worlds = base.worlds;
      if (generator) {
        world.generator = world_generator_from_string(*generator);
        world.seed = splitmix64(suite_seed);
        suite.worlds = {world};
      }
      const auto scenarios = build_suite(suite);
      const auto path = write_scenarios(scenarios, out_dir);
      std::cout << "wrote " << scenarios.size() << " scenarios to " << path.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
