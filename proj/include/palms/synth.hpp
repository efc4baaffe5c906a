#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "palms/filter.hpp"
#include "palms/floorplan.hpp"
#include "palms/scan.hpp"

namespace palms {

enum class WorldGenerator { corridor_grid, rooms_off_corridor };

const char* to_string(WorldGenerator g);
WorldGenerator world_generator_from_string(std::string_view s);

struct WorldSpec {
  WorldGenerator generator = WorldGenerator::corridor_grid;
  double extent_x = 40.0;
  double extent_y = 20.0;
  double corridor_width = 2.0;
  double door_gap = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Corridor centerlines as an undirected graph.
struct CorridorGraph {
  std::vector<Vec2> nodes;
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t add_node(Vec2 p);
  void add_edge(std::size_t a, std::size_t b);
  double total_length() const;
  /// Closest point on any edge; returns (edge endpoints, point).
  struct Projection {
    std::size_t from = 0;
    std::size_t to = 0;
    Vec2 point;
    double distance = 0.0;
  };
  Projection project(Vec2 p) const;
  /// Point at arc length `s` along the concatenated edge list.
  Vec2 point_at(double s) const;
};

struct World {
  FloorPlan plan;
  CorridorGraph corridors;
};

/// Axis-aligned building: corridors plus rooms with one door each.
/// Deterministic per seed.
World generate_world(const WorldSpec& spec);

/// Number of 4-connected free components of the plan raster inside the
/// bounds (walls excluded).
int count_free_components(const FloorPlan& plan, double resolution = 0.1);

struct ScanSimParams {
  double max_range = 5.0;
  int n_rays = 720;
  double endpoint_noise = 0.0;    // meters, std
  double dropout = 0.0;           // probability of dropping a segment
  double min_segment_length = 0.3;
};

/// 360 degree ray cast from `position`. Consecutive hits on the same wall
/// become one segment. Output frame: local = R(heading) * (world - position).
/// Throws std::invalid_argument when the pose is on a wall, and
/// ValidationError("no vertical patches") when nothing is in range.
Observation raycast_scan(const FloorPlan& plan, Vec2 position, Angle heading,
                         const ScanSimParams& params = {}, std::uint64_t seed = 0);

struct TruthPose {
  double t = 0.0;
  Vec2 position;
  Angle heading;
};

struct TruthTrace {
  std::vector<TruthPose> poses;
  Vec2 observation_point;
  Angle true_theta;  // alignment angle of the scan, in (-45, 45] degrees

  double path_length() const;
};

struct WalkParams {
  double speed = 1.2;       // m/s
  double step_rate = 10.0;  // steps per second
};

/// Random walk along corridor centerlines, turning at junctions. Throws
/// std::invalid_argument when the start is on a wall or off the corridors.
TruthTrace generate_walk(const World& world, Vec2 start, double length, std::uint64_t seed,
                         const WalkParams& params = {});

struct OdometryNoise {
  double step_noise_fraction = 0.01;   // std of per-axis noise / step length
  double accumulated_drift_deg = 0.0;  // heading error reached at the path end
};

/// Odometry deltas in a frame rotated by `drift_deg` from the world, plus a
/// heading error growing linearly with distance and per-step noise.
std::vector<OdometryStep> corrupt_odometry(const TruthTrace& truth, double drift_deg,
                                           const OdometryNoise& noise, std::uint64_t seed);

/// Naive integration of odometry deltas from `start`.
std::vector<Vec2> dead_reckon(Vec2 start, std::span<const OdometryStep> steps);

/// Reference trajectory for recorded data: a filter seeded at the known pose,
/// reporting the particle mean after every step.
TruthTrace truth_from_recorded(const FloorPlan& plan, std::span<const OdometryStep> odometry,
                               Vec2 start, Angle drift, const FilterConfig& cfg);

inline constexpr std::string_view kTruthFormat = "palms-truth/1";
std::string save_truth(const TruthTrace& truth);
TruthTrace load_truth(std::string_view text);

}  // namespace palms
