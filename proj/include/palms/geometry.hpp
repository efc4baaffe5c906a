#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace palms {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

/// Planar angle kept in [0, 2*pi) after every operation.
class Angle {
 public:
  constexpr Angle() = default;

  static Angle from_radians(double rad) { return Angle(normalize(rad)); }
  static Angle from_degrees(double deg) { return from_radians(deg_to_rad(deg)); }

  double radians() const { return rad_; }
  double degrees() const { return rad_to_deg(rad_); }
  /// Same angle expressed in (-pi, pi].
  double signed_radians() const { return rad_ > kPi ? rad_ - kTwoPi : rad_; }
  double signed_degrees() const { return rad_to_deg(signed_radians()); }

  Angle operator+(Angle o) const { return from_radians(rad_ + o.rad_); }
  Angle operator-(Angle o) const { return from_radians(rad_ - o.rad_); }
  Angle operator-() const { return from_radians(-rad_); }
  bool operator==(const Angle&) const = default;

  static double normalize(double rad) {
    double r = std::fmod(rad, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
  }

 private:
  explicit Angle(double normalized) : rad_(normalized) {}
  double rad_ = 0.0;
};

Vec2 rotate(Vec2 v, double radians);
inline Vec2 rotate(Vec2 v, Angle a) { return rotate(v, a.radians()); }
/// Exact rotation by k * 90 degrees (no trigonometric rounding).
Vec2 quarter_turn(Vec2 v, int k);

/// Wall segment with distinct endpoints. Throws std::invalid_argument when
/// the endpoints coincide or a coordinate is not finite.
class Segment2D {
 public:
  Segment2D(Vec2 a, Vec2 b);

  Vec2 a() const { return a_; }
  Vec2 b() const { return b_; }
  double length() const { return (b_ - a_).norm(); }
  /// Direction of a->b in (-pi, pi].
  double direction() const { return std::atan2(b_.y - a_.y, b_.x - a_.x); }

  static constexpr double kMinLength = 1e-9;

 private:
  Vec2 a_;
  Vec2 b_;
};

struct Box {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  Vec2 center() const { return (min + max) * 0.5; }
  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

struct CellIndex {
  int x = 0;
  int y = 0;
  bool operator==(const CellIndex&) const = default;
};

/// Placement of a raster in world coordinates. Cell (ix, iy) covers
/// [origin.x + ix*res, origin.x + (ix+1)*res) x [origin.y + iy*res, ...).
struct GridSpec {
  Vec2 origin;
  double resolution = 0.1;
  int width = 1;
  int height = 1;

  bool operator==(const GridSpec&) const = default;

  void validate() const;
  std::size_t cell_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool in_bounds(CellIndex c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
  }
  CellIndex cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
            static_cast<int>(std::floor((p.y - origin.y) / resolution))};
  }
  Vec2 cell_center(CellIndex c) const {
    return {origin.x + (c.x + 0.5) * resolution, origin.y + (c.y + 0.5) * resolution};
  }
  Vec2 cell_corner(CellIndex c) const {
    return {origin.x + c.x * resolution, origin.y + c.y * resolution};
  }
};

/// Row-major real-valued raster.
class RasterGrid {
 public:
  RasterGrid() = default;
  explicit RasterGrid(const GridSpec& spec, double fill = 0.0);

  const GridSpec& spec() const { return spec_; }
  int width() const { return spec_.width; }
  int height() const { return spec_.height; }
  double resolution() const { return spec_.resolution; }

  double& at(int ix, int iy) { return values_[index(ix, iy)]; }
  double at(int ix, int iy) const { return values_[index(ix, iy)]; }
  double& at(CellIndex c) { return at(c.x, c.y); }
  double at(CellIndex c) const { return at(c.x, c.y); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(spec_.width) +
           static_cast<std::size_t>(ix);
  }

  double max_value() const;
  double min_value() const;
  double sum() const;
  std::size_t count_nonzero() const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// Dominant wall direction modulo 90 degrees, in [0, pi/2). Length-weighted
/// circular mean of 4*phi. Throws std::invalid_argument("no segments").
Angle principal_orientation(std::span<const Segment2D> segments);

/// Rotation theta in (-45, 45] degrees with obs + theta == fp (mod 90 deg).
Angle alignment_angle(Angle obs_principal, Angle fp_principal);

std::vector<Segment2D> rotate_segments(std::span<const Segment2D> segments, Angle angle,
                                       Vec2 pivot = {});

/// Sets every cell touched by the closed segment to `value` (supercover).
/// Portions outside the grid are clipped.
void mark_segment(RasterGrid& grid, Vec2 a, Vec2 b, double value = 1.0);

/// Sets every cell touched by the closed convex polygon (scan-fill with
/// supercover edges).
void fill_convex_polygon(RasterGrid& grid, std::span<const Vec2> vertices, double value = 1.0);

RasterGrid rasterize_segments(std::span<const Segment2D> segments, const GridSpec& spec);

/// Closed-segment intersection test; degenerate (point) segments allowed.
bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2);
inline bool segments_intersect(const Segment2D& s1, const Segment2D& s2) {
  return segments_intersect(s1.a(), s1.b(), s2.a(), s2.b());
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

}  // namespace palms
