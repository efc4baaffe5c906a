#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "palms/geometry.hpp"
#include "palms/scan.hpp"

namespace palms {

struct KernelParams {
  double alpha = 1.0;           // weight of the empty-space penalty
  double gaussian_sigma = 0.15;  // meters; widening of observed walls
  double ces_shrink = 0.9;      // scale of the empty-space triangles about the origin
  double resolution = 0.10;     // meters per cell
  int n_orientations = 4;

  void validate() const;
};

struct Triangle {
  Vec2 a;
  Vec2 b;
  Vec2 c;

  double area() const { return 0.5 * std::abs((b - a).cross(c - a)); }
  bool contains(Vec2 p) const;
};

/// Space that must be free of walls if the observation was taken at the
/// origin: one triangle (origin, a', b') per observed segment.
struct CesRegion {
  std::vector<Triangle> triangles;

  double total_triangle_area() const;
};

/// Matching kernel for one candidate orientation: walls minus alpha times
/// empty space, anchored at the observation point.
struct ObservationKernel {
  RasterGrid grid;
  CellIndex anchor;
  int orientation_index = 0;
  Angle theta;     // base alignment shared by all orientations
  Angle rotation;  // theta + k * 360/N, applied to the observation

  double value_at_offset(int dx, int dy) const {
    return grid.at(anchor.x + dx, anchor.y + dy);
  }
};

/// Square grid centered on the origin (the anchor is the center cell),
/// covering max_range + 0.5 m plus the smoothing margin.
GridSpec kernel_grid_spec(const Observation& obs, const KernelParams& params);
CellIndex kernel_anchor(const GridSpec& spec);

/// Separable normalized discrete Gaussian, truncated at 4 sigma, zero
/// extension at the border. sigma == 0 returns the input unchanged.
RasterGrid gaussian_smooth(const RasterGrid& grid, double sigma);

/// Observed walls rotated by `rotation`, rasterized, smoothed and scaled so
/// the maximum is 1.
RasterGrid build_rw_layer(const Observation& obs, Angle rotation, const KernelParams& params);
CesRegion build_ces_region(const Observation& obs, Angle rotation, const KernelParams& params);
RasterGrid rasterize_ces(const CesRegion& ces, const GridSpec& spec);

/// N kernels; kernel k uses rotation theta + k * 360/N. Quarter turns are
/// applied exactly when N == 4.
std::vector<ObservationKernel> build_kernels(const Observation& obs, Angle theta,
                                             const KernelParams& params);

/// 16-bit graymap with v -> round((v + alpha) / (1 + alpha) * 65535) plus a
/// `<path>.txt` sidecar carrying anchor, resolution, k and theta.
void export_kernel(const ObservationKernel& kernel, double alpha,
                   const std::filesystem::path& pgm_path);
std::uint16_t quantize_kernel_value(double v, double alpha);

}  // namespace palms
