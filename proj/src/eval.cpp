#include "palms/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "palms/image_io.hpp"

namespace palms {

const char* to_string(Method m) {
  switch (m) {
    case Method::palms:
      return "palms";
    case Method::uniform:
      return "uniform";
    case Method::uniform_ori:
      return "uniform_ori";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "palms") return Method::palms;
  if (s == "uniform") return Method::uniform;
  if (s == "uniform_ori" || s == "uniform+ori") return Method::uniform_ori;
  throw std::invalid_argument("unknown method \"" + std::string(s) + "\"");
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::converged:
      return "converged";
    case Outcome::collapsed:
      return "collapsed";
    case Outcome::timeout:
      return "timeout";
  }
  return "unknown";
}

void PipelineParams::validate() const {
  kernel.validate();
  filter.validate();
  convergence.validate();
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw std::invalid_argument("top_fraction must be in (0, 1]");
  }
  if (theta_window < 1) throw std::invalid_argument("theta_window must be >= 1");
}

std::string describe(const PipelineParams& p) {
  std::ostringstream o;
  o << std::setprecision(10);
  o << "kernel.alpha = " << p.kernel.alpha << "\n"
    << "kernel.gaussian_sigma_m = " << p.kernel.gaussian_sigma << "\n"
    << "kernel.ces_shrink = " << p.kernel.ces_shrink << "\n"
    << "kernel.resolution_m = " << p.kernel.resolution << "\n"
    << "kernel.n_orientations = " << p.kernel.n_orientations << "\n"
    << "mask.top_fraction = " << p.top_fraction << "\n"
    << "filter.n_particles = " << p.filter.n_particles << "\n"
    << "filter.resample_pos_noise_m = " << p.filter.resample_pos_noise << "\n"
    << "filter.resample_drift_noise_deg = " << p.filter.resample_drift_noise_deg << "\n"
    << "filter.step_pos_noise_m = " << p.filter.step_pos_noise << "\n"
    << "filter.step_drift_noise_deg = " << p.filter.step_drift_noise_deg << "\n"
    << "filter.equal_groups = " << (p.filter.equal_groups ? "true" : "false") << "\n"
    << "convergence.label_dominance = " << p.convergence.label_dominance << "\n"
    << "convergence.cluster_dominance = " << p.convergence.cluster_dominance << "\n"
    << "convergence.meanshift_bandwidth_m = " << p.convergence.meanshift_bandwidth << "\n"
    << "convergence.cluster_update_period_steps = " << p.convergence.cluster_update_period << "\n"
    << "convergence.uniform_dispersion_threshold_m = "
    << p.convergence.uniform_dispersion_threshold << "\n"
    << "uniform_ori.theta_window_steps = " << p.theta_window << "\n";
  return o.str();
}

PreparedScenario prepare_scenario(std::shared_ptr<const Scenario> scenario,
                                  const PipelineParams& params, bool with_heatmaps) {
  params.validate();
  PreparedScenario out;
  const Scenario& sc = *scenario;
  sc.plan.validate();
  out.index = std::make_shared<const CollisionIndex>(sc.plan);
  if (with_heatmaps) {
    const Angle obs_po = principal_orientation(sc.observation.segments);
    const Angle fp_po = principal_orientation(sc.plan.walls);
    out.theta = alignment_angle(obs_po, fp_po);
    const RasterGrid raster = rasterize_floorplan(sc.plan, params.kernel.resolution);
    const auto kernels = build_kernels(sc.observation, out.theta, params.kernel);
    out.heatmaps = compute_heatmaps(raster, kernels, params.kernel);
    out.mask = binarize_top_percent(*out.heatmaps, params.top_fraction);
  }
  out.theta_est = estimate_theta_from_odometry(sc.plan, sc.odometry, params.theta_window);
  out.path_length_at.reserve(sc.truth.poses.size());
  double s = 0.0;
  for (std::size_t i = 0; i < sc.truth.poses.size(); ++i) {
    if (i > 0) s += (sc.truth.poses[i].position - sc.truth.poses[i - 1].position).norm();
    out.path_length_at.push_back(s);
  }
  out.scenario = std::move(scenario);
  return out;
}

std::optional<double> TrialRecord::rmse() const {
  if (post_errors.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& e : post_errors) s += e.error * e.error;
  return std::sqrt(s / static_cast<double>(post_errors.size()));
}

namespace {

Vec2 truth_at(const Scenario& sc, std::size_t pose) {
  if (sc.truth.poses.empty()) return sc.truth.observation_point;
  return sc.truth.poses[std::min(pose, sc.truth.poses.size() - 1)].position;
}

void take_snapshot(TrialTrace* trace, const char* tag, double t, const ParticleSet& particles,
                   std::optional<Vec2> prediction, Vec2 truth) {
  if (trace == nullptr) return;
  trace->snapshots.push_back({tag, t, particles, prediction, truth});
}

}  // namespace

TrialRecord run_trial(const PreparedScenario& prepared, Method method, const PipelineParams& params,
                      std::uint64_t seed, TrialTrace* trace) {
  const Scenario& sc = *prepared.scenario;
  TrialRecord rec;
  rec.method = method;
  rec.scenario_id = sc.id;
  rec.seed = seed;

  FilterConfig cfg = params.filter;
  cfg.rng_seed = seed;
  Rng rng(seed);
  ParticleSet particles;
  try {
    switch (method) {
      case Method::palms:
        if (!prepared.mask) throw std::logic_error("scenario prepared without heatmaps");
        particles = init_palms(*prepared.mask, prepared.theta, cfg, rng, sc.plan.bounds);
        break;
      case Method::uniform:
        particles = init_uniform(sc.plan, cfg, rng);
        break;
      case Method::uniform_ori:
        particles = init_uniform_ori(sc.plan, prepared.theta_est, cfg, rng,
                                     params.kernel.n_orientations);
        break;
    }
  } catch (const std::exception& e) {
    rec.outcome = Outcome::collapsed;
    rec.note = e.what();
    return rec;
  }

  const double t0 = sc.truth.poses.empty() ? 0.0 : sc.truth.poses.front().t;
  take_snapshot(trace, "t0", 0.0, particles, std::nullopt, truth_at(sc, 0));

  ConvergenceMonitor monitor(params.convergence, method == Method::uniform
                                                     ? Step1Mode::dispersion
                                                     : Step1Mode::label_dominance);
  StepOutcome outcome;
  bool collapsed = false;
  std::optional<Vec2> prediction;
  double t_last = 0.0;
  for (std::size_t i = 0; i < sc.odometry.size(); ++i) {
    const double t = sc.odometry[i].t - t0;
    t_last = t;
    try {
      step(particles, sc.odometry[i], *prepared.index, cfg, rng, outcome);
    } catch (const FilterCollapsed& e) {
      collapsed = true;
      rec.note = e.what();
      break;
    }
    const Phase before = monitor.state().phase;
    const ConvergenceReport report = monitor.observe(particles, outcome.replacements, t);
    const Vec2 truth = truth_at(sc, i + 1);
    prediction = report.prediction;
    std::optional<double> err;
    if (report.phase == Phase::converged && report.prediction) {
      err = (*report.prediction - truth).norm();
      rec.post_errors.push_back({t, *err});
    }
    if (before == Phase::searching && report.phase != Phase::searching) {
      take_snapshot(trace, "t1", t, particles, prediction, truth);
    }
    if (before != Phase::converged && report.phase == Phase::converged) {
      rec.dist_to_t2 = prepared.path_length_at.empty()
                           ? 0.0
                           : prepared.path_length_at[std::min(i + 1, prepared.path_length_at.size() - 1)];
      take_snapshot(trace, "t2", t, particles, prediction, truth);
    }
    if (trace != nullptr) {
      trace->timeline.push_back({i + 1, t, report.phase, report.dominant_label,
                                 report.dominant_share, report.cluster_share, report.prediction, err});
    }
  }
  take_snapshot(trace, "end", t_last, particles, prediction,
                truth_at(sc, std::min(sc.odometry.size(), sc.truth.poses.size())));

  rec.t1 = monitor.state().t1;
  rec.t2 = monitor.state().t2;
  rec.final_prediction = prediction;
  if (collapsed) {
    rec.outcome = Outcome::collapsed;
    rec.post_errors.clear();
  } else if (rec.t2) {
    rec.outcome = Outcome::converged;
  } else {
    rec.outcome = Outcome::timeout;
  }
  return rec;
}

namespace {

std::string opt_num(std::optional<double> v, int precision = 6) {
  if (!v) return "";
  std::ostringstream o;
  o << std::fixed << std::setprecision(precision) << *v;
  return o.str();
}

}  // namespace

std::string timeline_csv(std::span<const TimelineRow> rows) {
  std::ostringstream o;
  o << "step,t_seconds,phase,dominant_label,dominant_share,cluster_share,pred_x,pred_y,err_m\n";
  o << std::fixed;
  for (const auto& r : rows) {
    o << r.step << "," << std::setprecision(3) << r.t << "," << to_string(r.phase) << ",";
    if (r.dominant_label) o << *r.dominant_label;
    o << "," << std::setprecision(4) << r.dominant_share << "," << r.cluster_share << ",";
    if (r.prediction) {
      o << std::setprecision(4) << r.prediction->x << "," << r.prediction->y;
    } else {
      o << ",";
    }
    o << "," << opt_num(r.error, 4) << "\n";
  }
  return o.str();
}

std::vector<MethodSummary> summarize(std::span<const TrialRecord> records) {
  std::vector<const TrialRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const TrialRecord* a, const TrialRecord* b) {
    if (a->method != b->method) return a->method < b->method;
    if (a->scenario_id != b->scenario_id) return a->scenario_id < b->scenario_id;
    if (a->trial != b->trial) return a->trial < b->trial;
    return a->seed < b->seed;
  });

  std::vector<MethodSummary> out;
  std::size_t i = 0;
  while (i < sorted.size()) {
    MethodSummary s;
    s.method = sorted[i]->method;
    double sum_t1 = 0.0;
    std::size_t n_t1 = 0;
    double sum_t2 = 0.0;
    double sum_dist = 0.0;
    double sum_sq = 0.0;
    std::size_t n_lt1 = 0;
    std::vector<double> trial_rmse;
    for (; i < sorted.size() && sorted[i]->method == s.method; ++i) {
      const TrialRecord& r = *sorted[i];
      ++s.n_trials;
      if (r.t1) {
        sum_t1 += *r.t1;
        ++n_t1;
      }
      switch (r.outcome) {
        case Outcome::converged:
          ++s.n_converged;
          sum_t2 += r.t2.value_or(0.0);
          sum_dist += r.dist_to_t2.value_or(0.0);
          for (const auto& e : r.post_errors) {
            sum_sq += e.error * e.error;
            if (e.error < 1.0) ++n_lt1;
          }
          s.n_samples += r.post_errors.size();
          if (auto v = r.rmse()) trial_rmse.push_back(*v);
          break;
        case Outcome::collapsed:
          ++s.n_collapsed;
          break;
        case Outcome::timeout:
          ++s.n_timeout;
          break;
      }
    }
    s.n_failed = s.n_collapsed + s.n_timeout;
    if (n_t1 > 0) s.mean_t1_s = sum_t1 / static_cast<double>(n_t1);
    if (s.n_converged > 0) {
      s.mean_time_s = sum_t2 / static_cast<double>(s.n_converged);
      s.mean_dist_m = sum_dist / static_cast<double>(s.n_converged);
    }
    if (s.n_samples > 0) {
      s.rmse_m = std::sqrt(sum_sq / static_cast<double>(s.n_samples));
      s.pct_err_lt_1m = 100.0 * static_cast<double>(n_lt1) / static_cast<double>(s.n_samples);
    }
    if (!trial_rmse.empty()) {
      std::sort(trial_rmse.begin(), trial_rmse.end());
      const std::size_t m = trial_rmse.size();
      s.median_trial_rmse_m = m % 2 == 1 ? trial_rmse[m / 2]
                                         : 0.5 * (trial_rmse[m / 2 - 1] + trial_rmse[m / 2]);
    }
    out.push_back(s);
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t scenario, Method method, int trial) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ static_cast<std::uint64_t>(scenario));
  s = splitmix64(s ^ static_cast<std::uint64_t>(method));
  return splitmix64(s ^ static_cast<std::uint64_t>(trial));
}

namespace {

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

}  // namespace

BenchmarkResult run_benchmark(std::span<const std::shared_ptr<const Scenario>> scenarios,
                              const BenchmarkConfig& config) {
  config.params.validate();
  if (config.trials_per_scenario < 0) throw std::invalid_argument("trials must be >= 0");
  const bool need_heatmaps =
      std::find(config.methods.begin(), config.methods.end(), Method::palms) != config.methods.end();

  std::vector<PreparedScenario> prepared;
  prepared.reserve(scenarios.size());
  for (const auto& sc : scenarios) prepared.push_back(prepare_scenario(sc, config.params, need_heatmaps));

  if (config.snapshot_dir && need_heatmaps) {
    for (const auto& p : prepared) {
      export_heatmaps(*p.heatmaps, *p.mask,
                      *config.snapshot_dir / safe_name(p.scenario->id) / "heatmaps");
    }
  }

  struct Job {
    std::size_t scenario;
    Method method;
    int trial;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < prepared.size(); ++s) {
    for (Method m : config.methods) {
      for (int t = 0; t < config.trials_per_scenario; ++t) jobs.push_back({s, m, t});
    }
  }

  BenchmarkResult result;
  result.records.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      const std::uint64_t seed = trial_seed(config.master_seed, job.scenario, job.method, job.trial);
      const bool snap = config.snapshot_dir && job.trial == 0;
      TrialTrace trace;
      TrialRecord rec;
      try {
        rec = run_trial(prepared[job.scenario], job.method, config.params, seed,
                        snap ? &trace : nullptr);
      } catch (const std::exception& e) {
        rec.method = job.method;
        rec.scenario_id = prepared[job.scenario].scenario->id;
        rec.seed = seed;
        rec.outcome = Outcome::collapsed;
        rec.note = e.what();
      }
      rec.trial = job.trial;
      if (snap) {
        const auto dir = *config.snapshot_dir / safe_name(rec.scenario_id);
        for (const auto& s : trace.snapshots) {
          write_snapshot(dir / (std::string(to_string(job.method)) + "_" + s.tag + ".ppm"),
                         prepared[job.scenario].scenario->plan, s);
        }
        detail::write_file(dir / (std::string(to_string(job.method)) + "_timeline.csv"),
                           timeline_csv(trace.timeline));
      }
      result.records[j] = std::move(rec);
    }
  };
  unsigned n_workers = config.workers != 0 ? config.workers : std::thread::hardware_concurrency();
  n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1))));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  result.summary = summarize(result.records);
  return result;
}

std::string records_csv(std::span<const TrialRecord> records) {
  std::ostringstream o;
  o << "method,scenario,trial,seed,outcome,t1_s,t2_s,dist_to_t2_m,n_post,trial_rmse_m,"
       "pct_err_lt_1m,final_x,final_y,note\n";
  for (const auto& r : records) {
    std::size_t lt1 = 0;
    for (const auto& e : r.post_errors) lt1 += e.error < 1.0 ? 1 : 0;
    std::optional<double> pct;
    if (!r.post_errors.empty()) pct = 100.0 * static_cast<double>(lt1) / r.post_errors.size();
    o << to_string(r.method) << "," << r.scenario_id << "," << r.trial << "," << r.seed << ","
      << to_string(r.outcome) << "," << opt_num(r.t1, 3) << "," << opt_num(r.t2, 3) << ","
      << opt_num(r.dist_to_t2, 3) << "," << r.post_errors.size() << "," << opt_num(r.rmse(), 4)
      << "," << opt_num(pct, 2) << ","
      << opt_num(r.final_prediction ? std::optional<double>(r.final_prediction->x) : std::nullopt, 4)
      << ","
      << opt_num(r.final_prediction ? std::optional<double>(r.final_prediction->y) : std::nullopt, 4)
      << ",";
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    o << note << "\n";
  }
  return o.str();
}

std::string summary_csv(std::span<const MethodSummary> summary) {
  std::ostringstream o;
  o << "method,n_trials,n_converged,n_collapsed,n_timeout,failure_rate,mean_t1_s,mean_time_s,"
       "mean_dist_m,rmse_m,pct_err_lt_1m,median_trial_rmse_m,n_samples\n";
  o << std::setprecision(17);
  for (const auto& s : summary) {
    o << to_string(s.method) << "," << s.n_trials << "," << s.n_converged << "," << s.n_collapsed
      << "," << s.n_timeout << "," << s.failure_rate() << "," << s.mean_t1_s << ","
      << s.mean_time_s << "," << s.mean_dist_m << "," << s.rmse_m << "," << s.pct_err_lt_1m << ","
      << s.median_trial_rmse_m << "," << s.n_samples << "\n";
  }
  return o.str();
}

std::string summary_text(std::span<const MethodSummary> summary, const BenchmarkConfig& config) {
  std::ostringstream o;
  o << "PALMS benchmark summary\n\n";
  o << "master_seed = " << config.master_seed << "\n";
  o << "trials_per_scenario = " << config.trials_per_scenario << "\n";
  o << "per-trial seed = splitmix64 chain over (master_seed, scenario index, method, trial)\n";
  o << "distance to convergence = ground-truth path length walked by t2\n";
  o << "time and error aggregates use converged trials only; RMSE and %<1m are pooled over all\n"
       "post-convergence samples (%<1m is strict)\n\n";
  o << describe(config.params) << "\n";
  o << std::left << std::setw(12) << "method" << std::right << std::setw(8) << "trials"
    << std::setw(8) << "failed" << std::setw(10) << "fail%" << std::setw(10) << "time_s"
    << std::setw(10) << "dist_m" << std::setw(10) << "rmse_m" << std::setw(8) << "%<1m"
    << std::setw(12) << "med_rmse_m" << "\n";
  o << std::fixed;
  for (const auto& s : summary) {
    o << std::left << std::setw(12) << to_string(s.method) << std::right << std::setw(8)
      << s.n_trials << std::setw(8) << s.n_failed << std::setw(10) << std::setprecision(1)
      << 100.0 * s.failure_rate() << std::setw(10) << std::setprecision(2) << s.mean_time_s
      << std::setw(10) << s.mean_dist_m << std::setw(10) << s.rmse_m << std::setw(8)
      << std::setprecision(1) << s.pct_err_lt_1m << std::setw(12) << std::setprecision(2)
      << s.median_trial_rmse_m << "\n";
    if (s.n_failed > 0) {
      o << "  (" << s.n_collapsed << " collapsed, " << s.n_timeout << " timed out)\n";
    }
  }
  return o.str();
}

void write_benchmark_report(const BenchmarkResult& result, const BenchmarkConfig& config,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string header;
  {
    std::istringstream params(describe(config.params));
    std::string line;
    header += "# master_seed = " + std::to_string(config.master_seed) + "\n";
    while (std::getline(params, line)) header += "# " + line + "\n";
  }
  detail::write_file(dir / "records.csv", header + records_csv(result.records));
  detail::write_file(dir / "summary.csv", header + summary_csv(result.summary));
  detail::write_file(dir / "summary.txt", summary_text(result.summary, config));
}

void write_snapshot(const std::filesystem::path& path, const FloorPlan& plan,
                    const ParticleSnapshot& snapshot, double resolution) {
  const RasterGrid raster = rasterize_floorplan(plan, resolution, 0.5);
  const GridSpec& g = raster.spec();
  std::vector<Rgb> px(g.cell_count(), Rgb{255, 255, 255});
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (raster.values()[i] != 0.0) px[i] = {0, 0, 0};
  }
  static constexpr Rgb kLabel[] = {{220, 40, 40}, {40, 160, 40}, {40, 80, 220}, {230, 150, 0},
                                   {150, 60, 200}, {0, 170, 170}};
  auto put = [&](Vec2 p, Rgb c, int radius) {
    const CellIndex ci = g.cell_of(p);
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const CellIndex q{ci.x + dx, ci.y + dy};
        if (g.in_bounds(q)) px[raster.index(q.x, q.y)] = c;
      }
    }
  };
  for (const auto& p : snapshot.particles) {
    const Rgb c = p.label < 0 ? Rgb{120, 120, 120}
                              : kLabel[static_cast<std::size_t>(p.label) % std::size(kLabel)];
    put(p.position, c, 0);
  }
  put(snapshot.truth, {255, 0, 255}, 3);
  if (snapshot.prediction) put(*snapshot.prediction, {0, 200, 255}, 2);
  std::filesystem::create_directories(path.parent_path());
  write_ppm(path, g.width, g.height, px);
}

// Scenario files

std::filesystem::path write_scenarios(std::span<const Scenario> scenarios,
                                      const std::filesystem::path& dir) {
  using detail::Json;
  std::filesystem::create_directories(dir);
  Json doc;
  doc["format"] = kManifestFormat;
  doc["units"] = "meters";
  Json list = Json::array();
  std::map<std::string, std::string> plan_files;
  for (const auto& sc : scenarios) {
    const std::string id = safe_name(sc.id);
    const std::string plan_key = save_floorplan(sc.plan);
    auto it = plan_files.find(plan_key);
    if (it == plan_files.end()) {
      const std::string name =
          safe_name(sc.plan.name.empty() ? id : sc.plan.name) + ".plan.json";
      detail::write_file(dir / name, plan_key);
      it = plan_files.emplace(plan_key, name).first;
    }
    save_observation_file(sc.observation, dir / (id + ".scan.json"));
    save_odometry_file(sc.odometry, dir / (id + ".odo.csv"));
    detail::write_file(dir / (id + ".truth.csv"), save_truth(sc.truth));
    Json e;
    e["id"] = sc.id;
    e["floorplan"] = it->second;
    e["scan"] = id + ".scan.json";
    e["odometry"] = id + ".odo.csv";
    e["truth"] = id + ".truth.csv";
    e["seed"] = sc.seed;
    e["p_gt"] = detail::to_json(sc.truth.observation_point);
    e["true_theta_deg"] = sc.truth.true_theta.signed_degrees();
    e["scan_heading_deg"] = sc.scan_heading_deg;
    e["drift_deg"] = sc.drift_deg;
    list.push_back(std::move(e));
  }
  doc["scenarios"] = std::move(list);
  const auto path = dir / "manifest.json";
  detail::write_file(path, doc.dump(1));
  return path;
}

std::vector<Scenario> load_manifest(const std::filesystem::path& manifest) {
  using detail::Json;
  const Json doc = detail::parse_document(detail::read_file(manifest));
  detail::expect_format(doc, kManifestFormat);
  const Json& list = detail::require(doc, "scenarios");
  if (!list.is_array()) throw ParseError("\"scenarios\" must be an array");
  const auto base = manifest.parent_path();
  auto file = [&](const Json& e, const char* key) {
    const Json& v = detail::require(e, key);
    if (!v.is_string()) throw ParseError(std::string("\"") + key + "\" must be a path string");
    return base / v.get<std::string>();
  };
  std::map<std::filesystem::path, FloorPlan> plans;
  std::vector<Scenario> out;
  for (const Json& e : list) {
    Scenario sc;
    const Json& id = detail::require(e, "id");
    if (!id.is_string()) throw ParseError("\"id\" must be a string");
    sc.id = id.get<std::string>();
    const auto plan_path = file(e, "floorplan");
    auto it = plans.find(plan_path);
    if (it == plans.end()) it = plans.emplace(plan_path, load_floorplan_file(plan_path)).first;
    sc.plan = it->second;
    sc.observation = load_observation_file(file(e, "scan"));
    sc.odometry = load_odometry_file(file(e, "odometry"));
    if (e.contains("truth")) {
      sc.truth = load_truth(detail::read_file(file(e, "truth")));
    }
    if (e.contains("p_gt")) sc.truth.observation_point = detail::point(e["p_gt"], "p_gt");
    if (e.contains("true_theta_deg")) {
      sc.truth.true_theta = Angle::from_degrees(detail::number(e["true_theta_deg"], "true_theta_deg"));
    }
    if (e.contains("seed")) {
      if (!e["seed"].is_number_integer()) throw ParseError("\"seed\" must be an integer");
      sc.seed = e["seed"].get<std::uint64_t>();
    }
    if (e.contains("scan_heading_deg")) sc.scan_heading_deg = detail::number(e["scan_heading_deg"], "scan_heading_deg");
    if (e.contains("drift_deg")) sc.drift_deg = detail::number(e["drift_deg"], "drift_deg");
    if (sc.truth.poses.empty()) {
      throw ValidationError("scenario \"" + sc.id + "\" has no ground-truth trace");
    }
    if (sc.truth.poses.size() < sc.odometry.size() + 1) {
      throw ValidationError("scenario \"" + sc.id + "\": truth trace shorter than odometry");
    }
    out.push_back(std::move(sc));
  }
  return out;
}

SuiteSpec default_suite(std::uint64_t seed) {
  SuiteSpec s;
  s.seed = seed;
  WorldSpec grid;
  grid.generator = WorldGenerator::corridor_grid;
  grid.extent_x = 60.0;
  grid.extent_y = 36.0;
  grid.seed = splitmix64(seed ^ 0x11);
  WorldSpec rooms;
  rooms.generator = WorldGenerator::rooms_off_corridor;
  rooms.extent_x = 60.0;
  rooms.extent_y = 24.0;
  rooms.seed = splitmix64(seed ^ 0x22);
  s.worlds = {grid, rooms};
  return s;
}

std::vector<Scenario> build_suite(const SuiteSpec& spec) {
  if (!(spec.drift_min_deg <= spec.drift_max_deg)) throw std::invalid_argument("drift range inverted");
  std::vector<Scenario> out;
  Rng rng(splitmix64(spec.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t w = 0; w < spec.worlds.size(); ++w) {
    const World world = generate_world(spec.worlds[w]);
    const Angle fp_po = principal_orientation(world.plan.walls);
    const double total = world.corridors.total_length();
    for (int s = 0; s < spec.starts_per_world; ++s) {
      const Vec2 start = world.corridors.point_at(unit(rng) * total);
      const double heading = 360.0 * unit(rng);
      const std::uint64_t scan_seed = rng();
      const Observation obs =
          raycast_scan(world.plan, start, Angle::from_degrees(heading), spec.scan, scan_seed);
      const Angle true_theta = alignment_angle(principal_orientation(obs.segments), fp_po);
      for (int p = 0; p < spec.paths_per_start; ++p) {
        const std::uint64_t walk_seed = rng();
        const std::uint64_t odo_seed = rng();
        const double magnitude = spec.drift_min_deg + (spec.drift_max_deg - spec.drift_min_deg) * unit(rng);
        const double drift = unit(rng) < 0.5 ? -magnitude : magnitude;
        Scenario sc;
        sc.id = "w" + std::to_string(w) + "-s" + std::to_string(s) + "-p" + std::to_string(p);
        sc.plan = world.plan;
        sc.observation = obs;
        sc.truth = generate_walk(world, start, spec.path_length, walk_seed);
        sc.truth.true_theta = true_theta;
        sc.odometry = corrupt_odometry(sc.truth, heading, {spec.step_noise_fraction, drift}, odo_seed);
        sc.seed = walk_seed;
        sc.scan_heading_deg = heading;
        sc.drift_deg = drift;
        out.push_back(std::move(sc));
      }
    }
  }
  return out;
}

}  // namespace palms
