#include "palms/floorplan.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"

namespace palms {

Box wall_bounds(std::span<const Segment2D> walls) {
  if (walls.empty()) return {};
  Box b{walls[0].a(), walls[0].a()};
  for (const auto& w : walls) {
    for (Vec2 p : {w.a(), w.b()}) {
      b.min.x = std::min(b.min.x, p.x);
      b.min.y = std::min(b.min.y, p.y);
      b.max.x = std::max(b.max.x, p.x);
      b.max.y = std::max(b.max.y, p.y);
    }
  }
  return b;
}

void FloorPlan::validate() const {
  if (walls.empty()) throw ValidationError("floor plan has no walls");
  for (double v : {bounds.min.x, bounds.min.y, bounds.max.x, bounds.max.y}) {
    if (!std::isfinite(v)) throw ValidationError("floor plan bounds are not finite");
  }
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw ValidationError("floor plan bounds have zero area");
  }
  constexpr double kSlack = 1e-9;
  for (std::size_t i = 0; i < walls.size(); ++i) {
    for (Vec2 p : {walls[i].a(), walls[i].b()}) {
      if (p.x < bounds.min.x - kSlack || p.x > bounds.max.x + kSlack ||
          p.y < bounds.min.y - kSlack || p.y > bounds.max.y + kSlack) {
        throw ValidationError("walls[" + std::to_string(i) + "] lies outside the bounds");
      }
    }
  }
}

FloorPlan load_floorplan(std::string_view document) {
  const auto doc = detail::parse_document(document);
  detail::expect_format(doc, kFloorPlanFormat);

  FloorPlan plan;
  plan.walls = detail::segment_list(detail::require(doc, "walls"), "walls");
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("name must be a string");
    plan.name = it->get<std::string>();
  }
  if (auto it = doc.find("bounds"); it != doc.end()) {
    plan.bounds.min = detail::point(detail::require(*it, "min"), "bounds.min");
    plan.bounds.max = detail::point(detail::require(*it, "max"), "bounds.max");
  } else {
    plan.bounds = wall_bounds(plan.walls);
  }
  plan.validate();
  return plan;
}

FloorPlan load_floorplan_file(const std::filesystem::path& path) {
  return load_floorplan(detail::read_file(path));
}

std::string save_floorplan(const FloorPlan& plan) {
  detail::Json doc = detail::Json::object();
  doc["format"] = kFloorPlanFormat;
  doc["units"] = "meters";
  doc["name"] = plan.name;
  doc["bounds"] = {{"min", detail::to_json(plan.bounds.min)},
                   {"max", detail::to_json(plan.bounds.max)}};
  doc["walls"] = detail::segment_list_json(plan.walls);
  return doc.dump(1) + "\n";
}

void save_floorplan_file(const FloorPlan& plan, const std::filesystem::path& path) {
  detail::write_file(path, save_floorplan(plan));
}

RasterGrid rasterize_floorplan(const FloorPlan& plan, double resolution, double padding) {
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  GridSpec spec;
  spec.resolution = resolution;
  spec.origin = plan.bounds.min - Vec2{padding, padding};
  spec.width = static_cast<int>(std::ceil((plan.bounds.width() + 2.0 * padding) / resolution)) + 1;
  spec.height =
      static_cast<int>(std::ceil((plan.bounds.height() + 2.0 * padding) / resolution)) + 1;
  return rasterize_segments(plan.walls, spec);
}

CollisionIndex::CollisionIndex(const FloorPlan& plan, double cell_size)
    : walls_(plan.walls), bounds_(plan.bounds), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
  const Box wb = wall_bounds(walls_);
  const Vec2 lo{std::min(bounds_.min.x, wb.min.x), std::min(bounds_.min.y, wb.min.y)};
  const Vec2 hi{std::max(bounds_.max.x, wb.max.x), std::max(bounds_.max.y, wb.max.y)};
  origin_ = lo - Vec2{cell_size, cell_size};
  nx_ = static_cast<int>(std::ceil((hi.x - origin_.x) / cell_size)) + 2;
  ny_ = static_cast<int>(std::ceil((hi.y - origin_.y) / cell_size)) + 2;

  // Two passes (count, then fill) build a compressed per-cell wall list.
  const std::size_t ncells = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  std::vector<std::uint32_t> counts(ncells + 1, 0);
  for (const auto& w : walls_) {
    const Range r = cell_range(w.a(), w.b());
    for (int iy = r.y0; iy <= r.y1; ++iy) {
      for (int ix = r.x0; ix <= r.x1; ++ix) ++counts[static_cast<std::size_t>(iy) * nx_ + ix + 1];
    }
  }
  for (std::size_t i = 1; i <= ncells; ++i) counts[i] += counts[i - 1];
  cell_start_ = counts;
  entries_.resize(cell_start_.back());
  std::vector<std::uint32_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
  for (std::uint32_t wi = 0; wi < walls_.size(); ++wi) {
    const Range r = cell_range(walls_[wi].a(), walls_[wi].b());
    for (int iy = r.y0; iy <= r.y1; ++iy) {
      for (int ix = r.x0; ix <= r.x1; ++ix) {
        entries_[cursor[static_cast<std::size_t>(iy) * nx_ + ix]++] = wi;
      }
    }
  }
}

CollisionIndex::Range CollisionIndex::cell_range(Vec2 a, Vec2 b) const {
  constexpr double kEps = 1e-9;
  auto clampx = [&](double v) { return std::clamp(v, -1.0, static_cast<double>(nx_)); };
  auto clampy = [&](double v) { return std::clamp(v, -1.0, static_cast<double>(ny_)); };
  Range r;
  r.x0 = static_cast<int>(clampx(std::floor((std::min(a.x, b.x) - kEps - origin_.x) / cell_size_)));
  r.x1 = static_cast<int>(clampx(std::floor((std::max(a.x, b.x) + kEps - origin_.x) / cell_size_)));
  r.y0 = static_cast<int>(clampy(std::floor((std::min(a.y, b.y) - kEps - origin_.y) / cell_size_)));
  r.y1 = static_cast<int>(clampy(std::floor((std::max(a.y, b.y) + kEps - origin_.y) / cell_size_)));
  r.x0 = std::max(r.x0, 0);
  r.y0 = std::max(r.y0, 0);
  r.x1 = std::min(r.x1, nx_ - 1);
  r.y1 = std::min(r.y1, ny_ - 1);
  return r;
}

bool CollisionIndex::path_hits_wall(Vec2 from, Vec2 to) const {
  const Range r = cell_range(from, to);
  for (int iy = r.y0; iy <= r.y1; ++iy) {
    const std::size_t row = static_cast<std::size_t>(iy) * nx_;
    for (int ix = r.x0; ix <= r.x1; ++ix) {
      const std::size_t c = row + ix;
      for (std::uint32_t e = cell_start_[c]; e < cell_start_[c + 1]; ++e) {
        const Segment2D& w = walls_[entries_[e]];
        if (segments_intersect(from, to, w.a(), w.b())) return true;
      }
    }
  }
  return false;
}

bool CollisionIndex::path_hits_wall_brute_force(Vec2 from, Vec2 to) const {
  return std::any_of(walls_.begin(), walls_.end(),
                     [&](const Segment2D& w) { return segments_intersect(from, to, w.a(), w.b()); });
}

}  // namespace palms
