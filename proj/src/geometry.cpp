#include "palms/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace palms {

Vec2 rotate(Vec2 v, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 quarter_turn(Vec2 v, int k) {
  switch (((k % 4) + 4) % 4) {
    case 1:
      return {-v.y, v.x};
    case 2:
      return {-v.x, -v.y};
    case 3:
      return {v.y, -v.x};
    default:
      return v;
  }
}

Segment2D::Segment2D(Vec2 a, Vec2 b) : a_(a), b_(b) {
  if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y)) {
    throw std::invalid_argument("segment has a non-finite coordinate");
  }
  if ((b - a).norm() <= kMinLength) {
    throw std::invalid_argument("segment has zero length");
  }
}

void GridSpec::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  if (width < 1 || height < 1) {
    throw std::invalid_argument("grid must have at least one cell");
  }
}

RasterGrid::RasterGrid(const GridSpec& spec, double fill) : spec_(spec) {
  spec_.validate();
  values_.assign(spec_.cell_count(), fill);
}

double RasterGrid::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double RasterGrid::min_value() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double RasterGrid::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

std::size_t RasterGrid::count_nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

Angle principal_orientation(std::span<const Segment2D> segments) {
  if (segments.empty()) throw std::invalid_argument("no segments");
  double sx = 0.0;
  double sy = 0.0;
  double total = 0.0;
  for (const auto& s : segments) {
    const double len = s.length();
    const double phi4 = 4.0 * s.direction();
    sx += len * std::cos(phi4);
    sy += len * std::sin(phi4);
    total += len;
  }
  if (!(total > 0.0)) throw std::invalid_argument("no segments");
  // atan2 in (-pi, pi] -> (-pi/4, pi/4], then folded into [0, pi/2).
  double r = std::atan2(sy, sx) / 4.0;
  if (r < 0.0) r += kPi / 2.0;
  if (r >= kPi / 2.0) r -= kPi / 2.0;
  return Angle::from_radians(r);
}

Angle alignment_angle(Angle obs_principal, Angle fp_principal) {
  const double quarter = kPi / 2.0;
  double d = fp_principal.radians() - obs_principal.radians();
  d -= quarter * std::round(d / quarter);
  if (d <= -quarter / 2.0) d += quarter;
  if (d > quarter / 2.0) d -= quarter;
  return Angle::from_radians(d);
}

std::vector<Segment2D> rotate_segments(std::span<const Segment2D> segments, Angle angle,
                                       Vec2 pivot) {
  std::vector<Segment2D> out;
  out.reserve(segments.size());
  const double c = std::cos(angle.radians());
  const double s = std::sin(angle.radians());
  auto rot = [&](Vec2 p) {
    const Vec2 d = p - pivot;
    return Vec2{pivot.x + c * d.x - s * d.y, pivot.y + s * d.x + c * d.y};
  };
  for (const auto& seg : segments) out.emplace_back(rot(seg.a()), rot(seg.b()));
  return out;
}

namespace {

void mark_row_span(RasterGrid& grid, int iy, double xmin, double xmax, double value) {
  const GridSpec& g = grid.spec();
  int x0 = static_cast<int>(std::floor((xmin - g.origin.x) / g.resolution));
  int x1 = static_cast<int>(std::floor((xmax - g.origin.x) / g.resolution));
  if (x1 < 0 || x0 >= g.width) return;
  x0 = std::max(x0, 0);
  x1 = std::min(x1, g.width - 1);
  for (int ix = x0; ix <= x1; ++ix) grid.at(ix, iy) = value;
}

// Extends [xmin, xmax] by the part of edge p->q lying in the closed strip
// y0 <= y <= y1.
void strip_edge_extent(Vec2 p, Vec2 q, double y0, double y1, double& xmin, double& xmax) {
  if (p.y == q.y) {
    if (p.y >= y0 && p.y <= y1) {
      xmin = std::min({xmin, p.x, q.x});
      xmax = std::max({xmax, p.x, q.x});
    }
    return;
  }
  double ta = (y0 - p.y) / (q.y - p.y);
  double tb = (y1 - p.y) / (q.y - p.y);
  if (ta > tb) std::swap(ta, tb);
  const double t0 = std::max(ta, 0.0);
  const double t1 = std::min(tb, 1.0);
  if (t0 > t1) return;
  const double xa = p.x + t0 * (q.x - p.x);
  const double xb = p.x + t1 * (q.x - p.x);
  xmin = std::min({xmin, xa, xb});
  xmax = std::max({xmax, xa, xb});
}

}  // namespace

void fill_convex_polygon(RasterGrid& grid, std::span<const Vec2> vertices, double value) {
  if (vertices.empty()) return;
  const GridSpec& g = grid.spec();
  double ymin = vertices[0].y;
  double ymax = vertices[0].y;
  for (const auto& v : vertices) {
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  int r0 = static_cast<int>(std::floor((ymin - g.origin.y) / g.resolution));
  int r1 = static_cast<int>(std::floor((ymax - g.origin.y) / g.resolution));
  if (r1 < 0 || r0 >= g.height) return;
  r0 = std::max(r0, 0);
  r1 = std::min(r1, g.height - 1);

  const std::size_t n = vertices.size();
  for (int iy = r0; iy <= r1; ++iy) {
    const double y0 = g.origin.y + iy * g.resolution;
    const double y1 = y0 + g.resolution;
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -std::numeric_limits<double>::infinity();
    if (n == 1) {
      strip_edge_extent(vertices[0], vertices[0], y0, y1, xmin, xmax);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        strip_edge_extent(vertices[i], vertices[(i + 1) % n], y0, y1, xmin, xmax);
      }
    }
    if (xmin <= xmax) mark_row_span(grid, iy, xmin, xmax, value);
  }
}

void mark_segment(RasterGrid& grid, Vec2 a, Vec2 b, double value) {
  const Vec2 pts[2] = {a, b};
  fill_convex_polygon(grid, pts, value);
}

RasterGrid rasterize_segments(std::span<const Segment2D> segments, const GridSpec& spec) {
  RasterGrid grid(spec);
  for (const auto& s : segments) mark_segment(grid, s.a(), s.b());
  return grid;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = (b - a).cross(c - a);
  return (v > 0.0) - (v < 0.0);
}

// c known collinear with a-b; true when c lies within the bounding box of a-b.
bool within_box(Vec2 a, Vec2 b, Vec2 c) {
  return c.x >= std::min(a.x, b.x) && c.x <= std::max(a.x, b.x) && c.y >= std::min(a.y, b.y) &&
         c.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && within_box(p1, p2, q1)) return true;
  if (o2 == 0 && within_box(p1, p2, q2)) return true;
  if (o3 == 0 && within_box(q1, q2, p1)) return true;
  if (o4 == 0 && within_box(q1, q2, p2)) return true;
  return false;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

}  // namespace palms
