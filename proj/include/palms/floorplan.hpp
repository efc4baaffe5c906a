#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "palms/geometry.hpp"

namespace palms {

/// Malformed input document (syntax or missing fields).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed document whose content violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kFloorPlanFormat = "palms-floorplan/1";

/// Walls of a building floor in metric units.
struct FloorPlan {
  std::vector<Segment2D> walls;
  Box bounds;
  std::string name;

  /// Throws ValidationError when an invariant does not hold.
  void validate() const;
};

/// Bounding box of the walls.
Box wall_bounds(std::span<const Segment2D> walls);

FloorPlan load_floorplan(std::string_view document);
FloorPlan load_floorplan_file(const std::filesystem::path& path);
/// Deterministic field order: format, units, name, bounds, walls.
std::string save_floorplan(const FloorPlan& plan);
void save_floorplan_file(const FloorPlan& plan, const std::filesystem::path& path);

/// Binary wall raster over the plan bounds padded by `padding` meters on every
/// side.
RasterGrid rasterize_floorplan(const FloorPlan& plan, double resolution, double padding = 0.0);

/// Uniform grid of wall indices for exact segment-vs-wall queries. Immutable
/// after construction.
class CollisionIndex {
 public:
  explicit CollisionIndex(const FloorPlan& plan, double cell_size = 1.0);

  /// True iff the closed segment from->to touches any wall.
  bool path_hits_wall(Vec2 from, Vec2 to) const;
  /// Reference implementation scanning every wall.
  bool path_hits_wall_brute_force(Vec2 from, Vec2 to) const;

  const Box& bounds() const { return bounds_; }
  std::span<const Segment2D> walls() const { return walls_; }

 private:
  struct Range {
    int x0, y0, x1, y1;
  };
  Range cell_range(Vec2 a, Vec2 b) const;

  std::vector<Segment2D> walls_;
  Box bounds_;
  Vec2 origin_;
  double cell_size_;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> entries_;
};

inline bool path_hits_wall(const CollisionIndex& index, Vec2 from, Vec2 to) {
  return index.path_hits_wall(from, to);
}

}  // namespace palms
