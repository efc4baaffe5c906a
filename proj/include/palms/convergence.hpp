#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "palms/filter.hpp"
#include "palms/geometry.hpp"

namespace palms {

enum class Phase { searching, label_dominant, converged };

const char* to_string(Phase p);

struct ConvergenceParams {
  double label_dominance = 0.80;
  double cluster_dominance = 0.50;
  double meanshift_bandwidth = 1.0;  // meters
  int cluster_update_period = 20;    // odometry steps
  double uniform_dispersion_threshold = 5.0;  // meters, RMS about the centroid

  void validate() const;
};

struct Step1Result {
  bool passed = false;
  std::optional<int> dominant_label;
  double dominant_share = 0.0;  // largest label share, reported even when below threshold
  int plurality_label = kUnlabeled;
};

/// One label holds at least `label_dominance` of the particles. Exact ties go
/// to the lowest label.
Step1Result check_step1(std::span<const Particle> particles, const ConvergenceParams& params);

double rms_dispersion(std::span<const Particle> particles);
/// Step 1 for unlabeled particle sets: RMS distance from the centroid is at
/// most the threshold.
bool check_step1_dispersion(std::span<const Particle> particles, const ConvergenceParams& params);

struct MeanShiftResult {
  std::vector<int> assignment;       // cluster id per input point
  std::vector<Vec2> modes;           // per cluster
  std::vector<std::size_t> sizes;    // per cluster

  /// Cluster with the most points; ties go to the lowest id.
  int largest() const;
};

/// Flat-kernel mean shift. Every point climbs to its mode (mean of points
/// within `bandwidth`) until it moves less than 0.01 m or 100 iterations;
/// modes closer than bandwidth/2 are merged in point order.
MeanShiftResult mean_shift(std::span<const Vec2> points, double bandwidth);

struct Step2Result {
  bool passed = false;
  std::optional<Vec2> center;   // mean position of the dominant cluster
  double cluster_share = 0.0;   // dominant cluster size / considered particles
  std::vector<std::uint32_t> members;  // particle indices in the dominant cluster
};

/// Mean shift over the particles carrying `dominant_label` (all particles
/// when no label is given); passes when the largest cluster holds at least
/// `cluster_dominance` of them.
Step2Result check_step2(std::span<const Particle> particles, std::optional<int> dominant_label,
                        const ConvergenceParams& params);

struct ConvergenceState {
  Phase phase = Phase::searching;
  std::optional<double> t1;
  std::optional<double> t2;
  std::optional<int> dominant_label;
  std::optional<Vec2> dominant_cluster_center;
  int steps_since_cluster_update = 0;
};

enum class Step1Mode { label_dominance, dispersion };

struct ConvergenceReport {
  Phase phase = Phase::searching;
  std::optional<int> dominant_label;
  double dominant_share = 0.0;
  double cluster_share = 0.0;
  std::optional<Vec2> prediction;
};

/// Two-stage convergence detector followed by dominant-cluster tracking.
/// Phases only move forward. Cluster membership is kept per particle slot and
/// follows resampling (a replaced slot inherits its donor's membership).
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(const ConvergenceParams& params, Step1Mode mode);

  /// Call once per filter step, after motion and resampling.
  ConvergenceReport observe(std::span<const Particle> particles,
                            std::span<const Replacement> replacements, double t);

  const ConvergenceState& state() const { return state_; }

 private:
  void adopt_cluster(std::span<const Particle> particles, const Step2Result& r);
  void update_tracking(std::span<const Particle> particles,
                       std::span<const Replacement> replacements, ConvergenceReport& report);

  ConvergenceParams params_;
  Step1Mode mode_;
  ConvergenceState state_;
  std::vector<char> member_;
};

}  // namespace palms
