#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "palms/convergence.hpp"
#include "palms/filter.hpp"
#include "palms/floorplan.hpp"
#include "palms/heatmap.hpp"
#include "palms/kernel.hpp"
#include "palms/scan.hpp"
#include "palms/synth.hpp"

namespace palms {

enum class Method { palms, uniform, uniform_ori };
const char* to_string(Method m);
Method method_from_string(std::string_view s);

enum class Outcome { converged, collapsed, timeout };
const char* to_string(Outcome o);

/// Everything one trial consumes. truth.poses[i + 1] is the pose after
/// odometry step i.
struct Scenario {
  std::string id;
  FloorPlan plan;
  Observation observation;
  std::vector<OdometryStep> odometry;
  TruthTrace truth;
  std::uint64_t seed = 0;
  double scan_heading_deg = 0.0;
  double drift_deg = 0.0;  // accumulated odometry heading error at path end
};

struct PipelineParams {
  KernelParams kernel;
  double top_fraction = 0.01;
  FilterConfig filter;
  ConvergenceParams convergence;
  int theta_window = 10;  // odometry steps used by the Uniform+Ori theta estimate

  void validate() const;
};

/// `key = value` lines covering every parameter.
std::string describe(const PipelineParams& params);

/// Immutable per-scenario data shared by all trials.
struct PreparedScenario {
  std::shared_ptr<const Scenario> scenario;
  std::shared_ptr<const CollisionIndex> index;
  std::optional<HeatmapSet> heatmaps;
  std::optional<CandidateMask> mask;
  Angle theta;      // from the scan (palms)
  Angle theta_est;  // from the first odometry steps (uniform_ori)
  std::vector<double> path_length_at;  // ground-truth distance walked at each pose
};

PreparedScenario prepare_scenario(std::shared_ptr<const Scenario> scenario,
                                  const PipelineParams& params, bool with_heatmaps = true);

struct ErrorSample {
  double t = 0.0;
  double error = 0.0;
};

struct TrialRecord {
  Method method = Method::palms;
  std::string scenario_id;
  int trial = 0;
  std::uint64_t seed = 0;
  std::optional<double> t1;
  std::optional<double> t2;
  std::optional<double> dist_to_t2;
  std::vector<ErrorSample> post_errors;
  Outcome outcome = Outcome::timeout;
  std::optional<Vec2> final_prediction;
  std::string note;  // reason for a collapsed outcome

  std::optional<double> rmse() const;
};

struct TimelineRow {
  std::size_t step = 0;
  double t = 0.0;
  Phase phase = Phase::searching;
  std::optional<int> dominant_label;
  double dominant_share = 0.0;
  double cluster_share = 0.0;
  std::optional<Vec2> prediction;
  std::optional<double> error;
};

struct ParticleSnapshot {
  std::string tag;  // t0, t1, t2, end
  double t = 0.0;
  ParticleSet particles;
  std::optional<Vec2> prediction;
  Vec2 truth;
};

struct TrialTrace {
  std::vector<TimelineRow> timeline;
  std::vector<ParticleSnapshot> snapshots;
};

/// Runs one trial to the end of the trace. Component failures end the trial
/// with outcome collapsed; they never throw.
TrialRecord run_trial(const PreparedScenario& prepared, Method method, const PipelineParams& params,
                      std::uint64_t seed, TrialTrace* trace = nullptr);

std::string timeline_csv(std::span<const TimelineRow> rows);

struct MethodSummary {
  Method method = Method::palms;
  std::size_t n_trials = 0;
  std::size_t n_converged = 0;
  std::size_t n_collapsed = 0;
  std::size_t n_timeout = 0;
  std::size_t n_failed = 0;  // collapsed + timeout
  std::size_t n_samples = 0;
  double mean_t1_s = 0.0;  // over trials that reached t1
  double mean_time_s = 0.0;
  double mean_dist_m = 0.0;
  double rmse_m = 0.0;          // pooled over all post-convergence samples
  double pct_err_lt_1m = 0.0;   // strict, pooled
  double median_trial_rmse_m = 0.0;

  double failure_rate() const {
    return n_trials == 0 ? 0.0 : static_cast<double>(n_failed) / static_cast<double>(n_trials);
  }
};

/// One row per method present, in enum order. Independent of record order.
std::vector<MethodSummary> summarize(std::span<const TrialRecord> records);

/// Per-trial seed: splitmix64 chain over (master, scenario, method, trial).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t trial_seed(std::uint64_t master, std::size_t scenario, Method method, int trial);

struct BenchmarkConfig {
  std::vector<Method> methods{Method::palms, Method::uniform, Method::uniform_ori};
  int trials_per_scenario = 100;
  std::uint64_t master_seed = 1;
  unsigned workers = 0;  // 0 = hardware concurrency
  PipelineParams params;
  std::optional<std::filesystem::path> snapshot_dir;  // images for trial 0 of each pair
};

struct BenchmarkResult {
  std::vector<TrialRecord> records;  // sorted by scenario, method, trial
  std::vector<MethodSummary> summary;
};

BenchmarkResult run_benchmark(std::span<const std::shared_ptr<const Scenario>> scenarios,
                              const BenchmarkConfig& config);

/// records.csv, summary.csv and summary.txt in `dir`.
void write_benchmark_report(const BenchmarkResult& result, const BenchmarkConfig& config,
                            const std::filesystem::path& dir);
std::string records_csv(std::span<const TrialRecord> records);
std::string summary_csv(std::span<const MethodSummary> summary);
std::string summary_text(std::span<const MethodSummary> summary, const BenchmarkConfig& config);

/// Plan walls, particles colored by label, truth and prediction markers.
void write_snapshot(const std::filesystem::path& path, const FloorPlan& plan,
                    const ParticleSnapshot& snapshot, double resolution = 0.1);

// Scenario files

inline constexpr std::string_view kManifestFormat = "palms-manifest/1";

/// Writes plan/scan/odometry/truth files per scenario plus manifest.json.
std::filesystem::path write_scenarios(std::span<const Scenario> scenarios,
                                      const std::filesystem::path& dir);
std::vector<Scenario> load_manifest(const std::filesystem::path& manifest);

struct SuiteSpec {
  std::vector<WorldSpec> worlds;
  int starts_per_world = 3;
  int paths_per_start = 2;
  double path_length = 147.0;
  double drift_min_deg = 2.0;
  double drift_max_deg = 10.0;
  double step_noise_fraction = 0.01;
  ScanSimParams scan;
  std::uint64_t seed = 1;
};

/// Two worlds (one per generator), 3 starts, 2 paths of 147 m each.
SuiteSpec default_suite(std::uint64_t seed = 1);
std::vector<Scenario> build_suite(const SuiteSpec& spec);

}  // namespace palms
