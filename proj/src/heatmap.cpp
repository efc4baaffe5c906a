#include "palms/heatmap.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "palms/image_io.hpp"

namespace palms {

std::size_t CandidateMask::true_count(std::size_t k) const { return masks.at(k).count_nonzero(); }

std::size_t CandidateMask::total_true_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < masks.size(); ++k) n += true_count(k);
  return n;
}

RasterGrid correlate(const RasterGrid& plan_raster, const ObservationKernel& kernel) {
  if (std::abs(plan_raster.resolution() - kernel.grid.resolution()) >
      1e-12 * plan_raster.resolution()) {
    throw std::invalid_argument("kernel and plan raster resolutions differ");
  }
  const int w = plan_raster.width();
  const int h = plan_raster.height();
  const int kw = kernel.grid.width();
  const int kh = kernel.grid.height();
  const int ax = kernel.anchor.x;
  const int ay = kernel.anchor.y;

  // Nonzero column extent of each kernel row.
  std::vector<int> first(static_cast<std::size_t>(kh), kw);
  std::vector<int> last(static_cast<std::size_t>(kh), -1);
  for (int jy = 0; jy < kh; ++jy) {
    for (int jx = 0; jx < kw; ++jx) {
      if (kernel.grid.at(jx, jy) != 0.0) {
        first[jy] = std::min(first[jy], jx);
        last[jy] = jx;
      }
    }
  }

  RasterGrid out(plan_raster.spec());
  double* hv = out.values().data();
  const double* kv = kernel.grid.values().data();
  // Scatter form of the correlation: plan cell p contributes K(j) to
  // H(p - j + anchor). Plan rasters are sparse, so iterate its nonzeros.
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const double pv = plan_raster.at(px, py);
      if (pv == 0.0) continue;
      for (int jy = 0; jy < kh; ++jy) {
        const int cy = py - jy + ay;
        if (cy < 0 || cy >= h || first[jy] > last[jy]) continue;
        const int lo = std::max(first[jy], px + ax - (w - 1));
        const int hi = std::min(last[jy], px + ax);
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(cy) * w + (px + ax);
        const double* krow = kv + static_cast<std::ptrdiff_t>(jy) * kw;
        for (int jx = lo; jx <= hi; ++jx) hv[base - jx] += pv * krow[jx];
      }
    }
  }
  return out;
}

HeatmapSet compute_heatmaps(const RasterGrid& plan_raster,
                            const std::vector<ObservationKernel>& kernels,
                            const KernelParams& params) {
  if (kernels.empty()) throw std::invalid_argument("no kernels");
  HeatmapSet set;
  set.theta = kernels.front().theta;
  set.params = params;
  set.maps.reserve(kernels.size());
  for (const auto& k : kernels) set.maps.push_back(correlate(plan_raster, k));
  return set;
}

CandidateMask binarize_top_percent(const HeatmapSet& hset, double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction < 1.0)) {
    throw std::invalid_argument("top_fraction must be in (0, 1)");
  }
  if (hset.maps.empty()) throw std::invalid_argument("no heatmaps");
  std::vector<double> all;
  for (const auto& m : hset.maps) all.insert(all.end(), m.values().begin(), m.values().end());
  const std::size_t n = all.size();
  const auto wanted = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t m = std::clamp<std::size_t>(wanted, 1, n);
  const auto nth = all.begin() + static_cast<std::ptrdiff_t>(n - m);
  std::nth_element(all.begin(), nth, all.end());

  CandidateMask mask;
  mask.threshold_value = *nth;
  for (const auto& map : hset.maps) {
    RasterGrid b(map.spec());
    auto src = map.values();
    auto dst = b.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= mask.threshold_value ? 1.0 : 0.0;
    mask.masks.push_back(std::move(b));
  }
  return mask;
}

void export_heatmaps(const HeatmapSet& hset, const CandidateMask& mask,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream report(dir / "heatmap_report.txt");
  if (!report) throw std::runtime_error("cannot write heatmap report");
  report << std::setprecision(17);
  report << "theta_deg: " << hset.theta.signed_degrees() << "\n"
         << "threshold: " << mask.threshold_value << "\n"
         << "alpha: " << hset.params.alpha << "\n"
         << "gaussian_sigma_m: " << hset.params.gaussian_sigma << "\n"
         << "ces_shrink: " << hset.params.ces_shrink << "\n"
         << "resolution_m: " << hset.params.resolution << "\n"
         << "n_orientations: " << hset.params.n_orientations << "\n";
  if (!hset.maps.empty()) {
    const auto& g = hset.maps.front().spec();
    report << "grid_origin: " << g.origin.x << " " << g.origin.y << "\n"
           << "grid_size: " << g.width << " " << g.height << "\n";
  }
  for (std::size_t k = 0; k < hset.maps.size(); ++k) {
    const std::string stem = "heatmap_" + std::to_string(k);
    write_grid_pgm8(dir / (stem + ".pgm"), hset.maps[k]);
    write_pbm(dir / ("mask_" + std::to_string(k) + ".pbm"), mask.masks[k]);
    report << "mask_" << k << "_cells: " << mask.true_count(k) << "\n"
           << "heatmap_" << k << "_min: " << hset.maps[k].min_value() << "\n"
           << "heatmap_" << k << "_max: " << hset.maps[k].max_value() << "\n";
  }
}

}  // namespace palms
