#pragma once

#include <filesystem>
#include <vector>

#include "palms/geometry.hpp"
#include "palms/kernel.hpp"

namespace palms {

/// One score map per candidate orientation, all on the floor-plan raster.
struct HeatmapSet {
  std::vector<RasterGrid> maps;
  Angle theta;
  KernelParams params;
};

/// Candidate observation points: cells in the joint top fraction of all maps.
struct CandidateMask {
  std::vector<RasterGrid> masks;  // 0/1 per cell
  double threshold_value = 0.0;

  std::size_t true_count(std::size_t k) const;
  std::size_t total_true_count() const;
};

/// H_k(c) = sum_j kernel_k(j) * plan(c + j - anchor_k), zero outside the plan
/// raster. Throws std::invalid_argument on a resolution mismatch.
RasterGrid correlate(const RasterGrid& plan_raster, const ObservationKernel& kernel);

HeatmapSet compute_heatmaps(const RasterGrid& plan_raster,
                            const std::vector<ObservationKernel>& kernels,
                            const KernelParams& params = {});

/// One threshold over the values of all maps: the m-th largest value with
/// m = ceil(top_fraction * total_cells). Cells >= threshold are candidates.
CandidateMask binarize_top_percent(const HeatmapSet& hset, double top_fraction = 0.01);

/// Per-orientation 8-bit graymaps, 1-bit masks, and a text report.
void export_heatmaps(const HeatmapSet& hset, const CandidateMask& mask,
                     const std::filesystem::path& dir);

}  // namespace palms
