#include "palms/scan.hpp"

#include <cmath>

#include "json_util.hpp"

namespace palms {

void Observation::validate() const {
  if (segments.empty()) throw ValidationError("no vertical patches");
  if (!(max_range > 0.0)) throw ValidationError("max_range must be positive");
  const double limit = max_range + 0.5 + 1e-9;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].a().norm() > limit || segments[i].b().norm() > limit) {
      throw ValidationError("segments[" + std::to_string(i) + "] exceeds the sensor range");
    }
  }
}

std::vector<Segment2D> clip_to_range(std::span<const Segment2D> segments, double max_range,
                                     double min_length) {
  std::vector<Segment2D> out;
  const double limit = max_range + 0.5;
  for (const auto& s : segments) {
    Vec2 a = s.a();
    Vec2 b = s.b();
    if (a.norm() > limit || b.norm() > limit) {
      // |a + t d|^2 = R^2  ->  t^2 |d|^2 + 2 t a.d + |a|^2 - R^2 = 0
      const Vec2 d = b - a;
      const double qa = d.dot(d);
      const double qb = 2.0 * a.dot(d);
      const double qc = a.dot(a) - max_range * max_range;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc <= 0.0) continue;
      const double root = std::sqrt(disc);
      const double t0 = std::max(0.0, (-qb - root) / (2.0 * qa));
      const double t1 = std::min(1.0, (-qb + root) / (2.0 * qa));
      if (t0 >= t1) continue;
      const Vec2 na = a + d * t0;
      const Vec2 nb = a + d * t1;
      a = na;
      b = nb;
    }
    if ((b - a).norm() < std::max(min_length, Segment2D::kMinLength * 2.0)) continue;
    out.emplace_back(a, b);
  }
  return out;
}

Observation project_patches(std::span<const PlanarPatch> patches, const ProjectionParams& params) {
  if (patches.empty()) throw ValidationError("no vertical patches");
  const double max_vertical_component = std::sin(deg_to_rad(params.vertical_tolerance_deg));
  Observation obs;
  obs.max_range = params.max_range;
  std::vector<Segment2D> raw;
  for (const auto& p : patches) {
    const double nn = std::sqrt(p.normal.x * p.normal.x + p.normal.y * p.normal.y +
                                p.normal.z * p.normal.z);
    if (std::abs(nn - 1.0) > 1e-6 || !(p.width > 0.0) || !(p.height > 0.0)) {
      throw ValidationError("planar patch needs a unit normal and positive extent");
    }
    const double horizontal = std::hypot(p.normal.x, p.normal.y);
    if (std::abs(p.normal.z) > max_vertical_component || horizontal == 0.0) {
      ++obs.rejected_patches;
      continue;
    }
    // In-plane horizontal direction, perpendicular to the normal's ground
    // projection.
    const Vec2 dir{p.normal.y / horizontal, -p.normal.x / horizontal};
    const Vec2 c{p.center.x, p.center.y};
    raw.emplace_back(c - dir * (p.width / 2.0), c + dir * (p.width / 2.0));
  }
  obs.segments = clip_to_range(raw, params.max_range, params.min_segment_length);
  obs.rejected_patches += raw.size() - obs.segments.size();
  obs.validate();
  return obs;
}

namespace {

Vec3 vec3(const detail::Json& v, const char* what) {
  const auto xs = detail::numbers(v, 3, what);
  return {xs[0], xs[1], xs[2]};
}

}  // namespace

Observation load_observation(std::string_view document, const ProjectionParams& params) {
  const auto doc = detail::parse_document(document);
  detail::expect_format(doc, kScanFormat);
  ProjectionParams p = params;
  if (auto it = doc.find("max_range"); it != doc.end()) p.max_range = detail::number(*it, "max_range");
  if (!(p.max_range > 0.0)) throw ValidationError("max_range must be positive");

  const bool has_patches = doc.contains("patches");
  const bool has_segments = doc.contains("segments");
  if (has_patches == has_segments) {
    throw ParseError("scan must contain exactly one of \"patches\" or \"segments\"");
  }
  if (has_patches) {
    const auto& arr = doc["patches"];
    if (!arr.is_array()) throw ParseError("patches must be an array");
    std::vector<PlanarPatch> patches;
    for (const auto& e : arr) {
      PlanarPatch patch;
      patch.center = vec3(detail::require(e, "center"), "center");
      const auto ext = detail::numbers(detail::require(e, "extent"), 2, "extent");
      patch.width = ext[0];
      patch.height = ext[1];
      patch.normal = vec3(detail::require(e, "normal"), "normal");
      patches.push_back(patch);
    }
    return project_patches(patches, p);
  }
  Observation obs;
  obs.max_range = p.max_range;
  const auto segs = detail::segment_list(doc["segments"], "segments");
  obs.segments = clip_to_range(segs, p.max_range, p.min_segment_length);
  obs.rejected_patches = segs.size() - obs.segments.size();
  obs.validate();
  return obs;
}

Observation load_observation_file(const std::filesystem::path& path,
                                  const ProjectionParams& params) {
  return load_observation(detail::read_file(path), params);
}

std::string save_observation(const Observation& obs) {
  detail::Json doc = detail::Json::object();
  doc["format"] = kScanFormat;
  doc["units"] = "meters";
  doc["max_range"] = obs.max_range;
  doc["segments"] = detail::segment_list_json(obs.segments);
  return doc.dump(1) + "\n";
}

void save_observation_file(const Observation& obs, const std::filesystem::path& path) {
  detail::write_file(path, save_observation(obs));
}

}  // namespace palms
