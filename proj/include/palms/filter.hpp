#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "palms/floorplan.hpp"
#include "palms/geometry.hpp"
#include "palms/heatmap.hpp"

namespace palms {

using Rng = std::mt19937_64;

inline constexpr int kUnlabeled = -1;
inline constexpr std::string_view kOdometryFormat = "palms-odo/1";

/// Filter state element: world position, heading correction applied to
/// odometry, and the orientation group it was seeded from.
class Particle {
 public:
  Particle() = default;
  Particle(Vec2 position, Angle drift, int label) : position(position), label(label) {
    set_drift(drift);
  }

  Vec2 position;
  int label = kUnlabeled;

  Angle drift() const { return drift_; }
  void set_drift(Angle a) {
    drift_ = a;
    cos_ = std::cos(a.radians());
    sin_ = std::sin(a.radians());
  }
  /// Odometry displacement expressed in the world frame.
  Vec2 apply_drift(Vec2 d) const { return {cos_ * d.x - sin_ * d.y, sin_ * d.x + cos_ * d.y}; }

 private:
  Angle drift_;
  double cos_ = 1.0;
  double sin_ = 0.0;
};

using ParticleSet = std::vector<Particle>;

struct FilterConfig {
  int n_particles = 2000;
  double resample_pos_noise = 0.10;       // meters, std
  double resample_drift_noise_deg = 2.0;  // degrees, std
  double step_pos_noise = 0.02;           // meters, std per axis per step
  double step_drift_noise_deg = 0.0;      // degrees, std per step
  std::uint64_t rng_seed = 1;
  /// Equal particle count per non-empty orientation group instead of equal
  /// spatial density.
  bool equal_groups = false;

  void validate() const;
};

struct OdometryStep {
  double t = 0.0;       // seconds
  Vec2 delta;           // meters, tracker frame
  Angle heading_delta;  // informational; motion uses delta only
};

class FilterCollapsed : public std::runtime_error {
 public:
  FilterCollapsed() : std::runtime_error("filter collapsed") {}
};

struct Replacement {
  std::uint32_t slot;
  std::uint32_t donor;
};

struct StepOutcome {
  std::size_t n_dead = 0;
  std::vector<Replacement> replacements;
};

/// Seeds particles at uniform spatial density over the candidate cells; a
/// particle from map k gets label k and drift theta + k * 360/N. Cells whose
/// center is outside `bounds` (when given) are ignored. Throws
/// std::invalid_argument("no candidates") when nothing remains.
ParticleSet init_palms(const CandidateMask& mask, Angle theta, const FilterConfig& cfg, Rng& rng,
                       const std::optional<Box>& bounds = std::nullopt);

/// Uniform positions over the plan bounds, uniform drift, unlabeled.
ParticleSet init_uniform(const FloorPlan& plan, const FilterConfig& cfg, Rng& rng);

/// Uniform positions; particle i gets label i mod N and drift
/// theta_est + label * 360/N.
ParticleSet init_uniform_ori(const FloorPlan& plan, Angle theta_est, const FilterConfig& cfg,
                             Rng& rng, int n_orientations = 4);

/// Alignment between the net heading of the first `window` odometry steps and
/// the plan's principal orientation; assumes the walk starts along a wall
/// direction.
Angle estimate_theta_from_odometry(const FloorPlan& plan, std::span<const OdometryStep> steps,
                                   int window = 10);

/// Moves every particle by its drift-corrected odometry; particles whose path
/// touches a wall (or leaves the plan bounds) are replaced by noisy copies
/// of uniformly drawn survivors. Throws FilterCollapsed if none survive.
void step(ParticleSet& particles, const OdometryStep& odo, const CollisionIndex& index,
          const FilterConfig& cfg, Rng& rng, StepOutcome& outcome);
StepOutcome step(ParticleSet& particles, const OdometryStep& odo, const CollisionIndex& index,
                 const FilterConfig& cfg, Rng& rng);

/// Delimited text: a `format: palms-odo/1` line, optional `t,dx,dy,dheading_deg`
/// header, then one step per line.
std::vector<OdometryStep> load_odometry(std::string_view text);
std::vector<OdometryStep> load_odometry_file(const std::filesystem::path& path);
std::string save_odometry(std::span<const OdometryStep> steps);
void save_odometry_file(std::span<const OdometryStep> steps, const std::filesystem::path& path);

}  // namespace palms
