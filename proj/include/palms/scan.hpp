#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "palms/geometry.hpp"

namespace palms {

inline constexpr std::string_view kScanFormat = "palms-scan/1";

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Planar patch reported by on-device plane detection.
struct PlanarPatch {
  Vec3 center;
  double width = 0.0;   // horizontal extent, meters
  double height = 0.0;  // vertical extent, meters
  Vec3 normal;          // unit length
};

/// Observed wall segments in the scan frame; the observation point is the
/// origin.
struct Observation {
  std::vector<Segment2D> segments;
  double max_range = 5.0;
  /// Patches dropped during projection (non-vertical or too short).
  std::size_t rejected_patches = 0;

  /// Throws ValidationError("no vertical patches") when empty, or when an
  /// endpoint lies farther than max_range + 0.5 m from the origin.
  void validate() const;
};

struct ProjectionParams {
  double vertical_tolerance_deg = 10.0;
  double min_segment_length = 0.3;
  double max_range = 5.0;
};

/// Keeps near-vertical patches and projects their horizontal midline to the
/// ground plane.
Observation project_patches(std::span<const PlanarPatch> patches,
                            const ProjectionParams& params = {});

/// Clips segments to the max_range disk when an endpoint exceeds
/// max_range + 0.5 m, and drops segments shorter than `min_length`.
std::vector<Segment2D> clip_to_range(std::span<const Segment2D> segments, double max_range,
                                     double min_length);

Observation load_observation(std::string_view document, const ProjectionParams& params = {});
Observation load_observation_file(const std::filesystem::path& path,
                                  const ProjectionParams& params = {});
/// Writes the `segments` variant.
std::string save_observation(const Observation& obs);
void save_observation_file(const Observation& obs, const std::filesystem::path& path);

}  // namespace palms
