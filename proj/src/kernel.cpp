#include "palms/kernel.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "palms/image_io.hpp"

namespace palms {

void KernelParams::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(ces_shrink > 0.0 && ces_shrink <= 1.0)) {
    throw std::invalid_argument("ces_shrink must be in (0, 1]");
  }
  if (!(gaussian_sigma >= 0.0)) throw std::invalid_argument("gaussian_sigma must be >= 0");
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  if (n_orientations < 1) throw std::invalid_argument("n_orientations must be >= 1");
}

bool Triangle::contains(Vec2 p) const {
  const double d1 = (b - a).cross(p - a);
  const double d2 = (c - b).cross(p - b);
  const double d3 = (a - c).cross(p - c);
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(has_neg && has_pos);
}

double CesRegion::total_triangle_area() const {
  double s = 0.0;
  for (const auto& t : triangles) s += t.area();
  return s;
}

GridSpec kernel_grid_spec(const Observation& obs, const KernelParams& params) {
  params.validate();
  const double reach = obs.max_range + 0.5 + 4.0 * params.gaussian_sigma;
  const int half = static_cast<int>(std::ceil(reach / params.resolution)) + 1;
  GridSpec spec;
  spec.resolution = params.resolution;
  spec.width = 2 * half + 1;
  spec.height = 2 * half + 1;
  spec.origin = {-(half + 0.5) * params.resolution, -(half + 0.5) * params.resolution};
  return spec;
}

CellIndex kernel_anchor(const GridSpec& spec) { return {spec.width / 2, spec.height / 2}; }

namespace {

std::vector<double> gaussian_taps(double sigma, double resolution) {
  const int r = static_cast<int>(std::ceil(4.0 * sigma / resolution));
  std::vector<double> taps(static_cast<std::size_t>(2 * r + 1));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double d = i * resolution;
    taps[static_cast<std::size_t>(i + r)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[static_cast<std::size_t>(i + r)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

std::vector<Segment2D> oriented_segments(const Observation& obs, Angle theta, int k, int n) {
  if (n == 4) {
    auto segs = rotate_segments(obs.segments, theta);
    std::vector<Segment2D> out;
    out.reserve(segs.size());
    for (const auto& s : segs) out.emplace_back(quarter_turn(s.a(), k), quarter_turn(s.b(), k));
    return out;
  }
  return rotate_segments(obs.segments, theta + Angle::from_radians(kTwoPi * k / n));
}

RasterGrid rw_from_segments(std::span<const Segment2D> segs, const GridSpec& spec,
                            const KernelParams& params) {
  RasterGrid g = gaussian_smooth(rasterize_segments(segs, spec), params.gaussian_sigma);
  const double peak = g.max_value();
  if (peak > 0.0) {
    for (double& v : g.values()) v /= peak;
  }
  return g;
}

CesRegion ces_from_segments(std::span<const Segment2D> segs, const KernelParams& params) {
  CesRegion ces;
  ces.triangles.reserve(segs.size());
  for (const auto& s : segs) {
    ces.triangles.push_back({Vec2{}, s.a() * params.ces_shrink, s.b() * params.ces_shrink});
  }
  return ces;
}

}  // namespace

RasterGrid gaussian_smooth(const RasterGrid& grid, double sigma) {
  if (sigma <= 0.0) return grid;
  const auto taps = gaussian_taps(sigma, grid.resolution());
  const int r = static_cast<int>(taps.size() / 2);
  const int w = grid.width();
  const int h = grid.height();
  RasterGrid tmp(grid.spec());
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      const double v = grid.at(ix, iy);
      if (v == 0.0) continue;
      const int lo = std::max(-r, -ix);
      const int hi = std::min(r, w - 1 - ix);
      for (int d = lo; d <= hi; ++d) tmp.at(ix + d, iy) += v * taps[static_cast<std::size_t>(d + r)];
    }
  }
  RasterGrid out(grid.spec());
  for (int iy = 0; iy < h; ++iy) {
    const int lo = std::max(-r, -iy);
    const int hi = std::min(r, h - 1 - iy);
    for (int ix = 0; ix < w; ++ix) {
      const double v = tmp.at(ix, iy);
      if (v == 0.0) continue;
      for (int d = lo; d <= hi; ++d) out.at(ix, iy + d) += v * taps[static_cast<std::size_t>(d + r)];
    }
  }
  return out;
}

RasterGrid build_rw_layer(const Observation& obs, Angle rotation, const KernelParams& params) {
  const auto segs = rotate_segments(obs.segments, rotation);
  return rw_from_segments(segs, kernel_grid_spec(obs, params), params);
}

CesRegion build_ces_region(const Observation& obs, Angle rotation, const KernelParams& params) {
  params.validate();
  const auto segs = rotate_segments(obs.segments, rotation);
  return ces_from_segments(segs, params);
}

RasterGrid rasterize_ces(const CesRegion& ces, const GridSpec& spec) {
  RasterGrid g(spec);
  for (const auto& t : ces.triangles) {
    const Vec2 verts[3] = {t.a, t.b, t.c};
    fill_convex_polygon(g, verts, 1.0);
  }
  return g;
}

std::vector<ObservationKernel> build_kernels(const Observation& obs, Angle theta,
                                             const KernelParams& params) {
  params.validate();
  const GridSpec spec = kernel_grid_spec(obs, params);
  const int n = params.n_orientations;
  std::vector<ObservationKernel> kernels;
  kernels.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto segs = oriented_segments(obs, theta, k, n);
    RasterGrid combined = rw_from_segments(segs, spec, params);
    const RasterGrid ces = rasterize_ces(ces_from_segments(segs, params), spec);
    auto cv = combined.values();
    auto ce = ces.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] -= params.alpha * ce[i];

    ObservationKernel kernel;
    kernel.grid = std::move(combined);
    kernel.anchor = kernel_anchor(spec);
    kernel.orientation_index = k;
    kernel.theta = theta;
    kernel.rotation = theta + Angle::from_radians(kTwoPi * k / n);
    kernels.push_back(std::move(kernel));
  }
  return kernels;
}

std::uint16_t quantize_kernel_value(double v, double alpha) {
  const double q = std::round((v + alpha) / (1.0 + alpha) * 65535.0);
  return static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
}

void export_kernel(const ObservationKernel& kernel, double alpha,
                   const std::filesystem::path& pgm_path) {
  const auto values = kernel.grid.values();
  std::vector<std::uint16_t> px(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) px[i] = quantize_kernel_value(values[i], alpha);
  write_pgm16(pgm_path, kernel.grid.width(), kernel.grid.height(), px);

  std::ofstream side(pgm_path.string() + ".txt");
  if (!side) throw std::runtime_error("cannot write kernel sidecar");
  side << std::setprecision(17);
  side << "anchor_x: " << kernel.anchor.x << "\n"
       << "anchor_y: " << kernel.anchor.y << "\n"
       << "resolution_m: " << kernel.grid.resolution() << "\n"
       << "orientation_index: " << kernel.orientation_index << "\n"
       << "theta_deg: " << kernel.theta.signed_degrees() << "\n"
       << "rotation_deg: " << kernel.rotation.degrees() << "\n"
       << "alpha: " << alpha << "\n"
       << "quantization: round((v + alpha) / (1 + alpha) * 65535)\n";
}

}  // namespace palms
