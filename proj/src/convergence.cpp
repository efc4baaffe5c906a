#include "palms/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>

namespace palms {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::searching:
      return "searching";
    case Phase::label_dominant:
      return "label_dominant";
    case Phase::converged:
      return "converged";
  }
  return "unknown";
}

void ConvergenceParams::validate() const {
  if (!(label_dominance > 0.0 && label_dominance <= 1.0) ||
      !(cluster_dominance > 0.0 && cluster_dominance <= 1.0)) {
    throw std::invalid_argument("dominance fractions must be in (0, 1]");
  }
  if (!(meanshift_bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (cluster_update_period < 1) throw std::invalid_argument("cluster_update_period must be >= 1");
  if (!(uniform_dispersion_threshold >= 0.0)) {
    throw std::invalid_argument("dispersion threshold must be >= 0");
  }
}

Step1Result check_step1(std::span<const Particle> particles, const ConvergenceParams& params) {
  Step1Result r;
  if (particles.empty()) return r;
  std::map<int, std::size_t> counts;
  for (const auto& p : particles) ++counts[p.label];
  const double total = static_cast<double>(particles.size());
  std::size_t best = 0;
  for (const auto& [label, n] : counts) {  // ascending labels
    if (n > best) {
      best = n;
      r.plurality_label = label;
    }
    const double share = static_cast<double>(n) / total;
    if (!r.passed && label != kUnlabeled && share >= params.label_dominance) {
      r.passed = true;
      r.dominant_label = label;
    }
  }
  r.dominant_share = static_cast<double>(best) / total;
  return r;
}

double rms_dispersion(std::span<const Particle> particles) {
  if (particles.empty()) return 0.0;
  Vec2 c;
  for (const auto& p : particles) c += p.position;
  c = c / static_cast<double>(particles.size());
  double s = 0.0;
  for (const auto& p : particles) {
    const Vec2 d = p.position - c;
    s += d.dot(d);
  }
  return std::sqrt(s / static_cast<double>(particles.size()));
}

bool check_step1_dispersion(std::span<const Particle> particles, const ConvergenceParams& params) {
  return rms_dispersion(particles) <= params.uniform_dispersion_threshold;
}

int MeanShiftResult::largest() const {
  int best = -1;
  std::size_t best_n = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] > best_n) {
      best_n = sizes[c];
      best = static_cast<int>(c);
    }
  }
  return best;
}

namespace {

// Sums are kept in integer micrometers so that equal neighbor sets give
// bit-identical means whatever the summation order.
constexpr double kFixedScale = 1e6;

struct FixedSum {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t n = 0;

  FixedSum& operator+=(const FixedSum& o) {
    x += o.x;
    y += o.y;
    n += o.n;
    return *this;
  }
  FixedSum operator-(const FixedSum& o) const { return {x - o.x, y - o.y, n - o.n}; }
};

// Bucketed points with per-row prefix sums: cells entirely inside a query
// disk are accumulated in O(1) per row, boundary cells point by point.
class PointGrid {
 public:
  PointGrid(std::span<const Vec2> pts, double cell) : cell_(cell), inv_cell_(1.0 / cell) {
    Vec2 lo = pts[0];
    Vec2 hi = pts[0];
    for (const auto& p : pts) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    origin_ = lo;
    nx_ = floor_int((hi.x - lo.x) * inv_cell_) + 1;
    ny_ = floor_int((hi.y - lo.y) * inv_cell_) + 1;
    const std::size_t n = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
    fixed_.resize(pts.size());
    start_.assign(n + 1, 0);
    prefix_.assign(static_cast<std::size_t>(ny_) * static_cast<std::size_t>(nx_ + 1), FixedSum{});
    std::vector<std::size_t> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      fixed_[i] = {std::llround(pts[i].x * kFixedScale), std::llround(pts[i].y * kFixedScale), 1};
      const int ix = cx(pts[i].x);
      const int iy = cy(pts[i].y);
      cell_of[i] = index(ix, iy);
      ++start_[cell_of[i] + 1];
      prefix_[row_base(iy) + static_cast<std::size_t>(ix) + 1] += fixed_[i];
    }
    for (std::size_t c = 1; c <= n; ++c) start_[c] += start_[c - 1];
    for (int iy = 0; iy < ny_; ++iy) {
      for (int ix = 0; ix < nx_; ++ix) {
        prefix_[row_base(iy) + static_cast<std::size_t>(ix) + 1] +=
            prefix_[row_base(iy) + static_cast<std::size_t>(ix)];
      }
    }
    xs_.resize(pts.size());
    ys_.resize(pts.size());
    fx_.resize(pts.size());
    fy_.resize(pts.size());
    std::vector<std::uint32_t> cursor(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::uint32_t k = cursor[cell_of[i]]++;
      xs_[k] = pts[i].x;
      ys_[k] = pts[i].y;
      fx_[k] = fixed_[i].x;
      fy_[k] = fixed_[i].y;
    }
  }

  /// Fixed-point sum and count of points p with |p - q| <= r.
  FixedSum disk_sum(Vec2 q, double r) const {
    FixedSum acc;
    const double r2 = r * r;
    const double r2_in = r2 * (1.0 - 1e-12);
    const double r2_out = r2 * (1.0 + 1e-12);
    const int y0 = std::max(0, cy(q.y - r));
    const int y1 = std::min(ny_ - 1, cy(q.y + r));
    for (int iy = y0; iy <= y1; ++iy) {
      const double ry0 = origin_.y + iy * cell_;
      const double ry1 = ry0 + cell_;
      const double dy_near = q.y < ry0 ? ry0 - q.y : (q.y > ry1 ? q.y - ry1 : 0.0);
      if (dy_near * dy_near > r2_out) continue;
      const double dy_far = std::max(std::abs(q.y - ry0), std::abs(q.y - ry1));
      const double wo = std::sqrt(std::max(0.0, r2_out - dy_near * dy_near));
      const int xo0 = std::max(0, cx(q.x - wo));
      const int xo1 = std::min(nx_ - 1, cx(q.x + wo));
      int xi0 = xo1 + 1;
      int xi1 = xo1;
      if (dy_far * dy_far < r2_in) {
        const double wi = std::sqrt(r2_in - dy_far * dy_far);
        xi0 = std::max(xo0, ceil_int((q.x - wi - origin_.x) * inv_cell_));
        xi1 = std::min(xo1, floor_int((q.x + wi - origin_.x) * inv_cell_) - 1);
        if (xi1 < xi0) {
          xi0 = xo1 + 1;
          xi1 = xo1;
        }
      }
      if (xi0 <= xi1) {
        const std::size_t b = row_base(iy);
        acc += prefix_[b + static_cast<std::size_t>(xi1) + 1] - prefix_[b + static_cast<std::size_t>(xi0)];
        scan_cells(q, r2, iy, xo0, xi0 - 1, acc);
        scan_cells(q, r2, iy, xi1 + 1, xo1, acc);
      } else {
        scan_cells(q, r2, iy, xo0, xo1, acc);
      }
    }
    return acc;
  }

 private:
  // Points of consecutive cells in a row are contiguous.
  void scan_cells(Vec2 q, double r2, int iy, int ix0, int ix1, FixedSum& acc) const {
    if (ix0 > ix1) return;
    const std::uint32_t b = start_[index(ix0, iy)];
    const std::uint32_t e = start_[index(ix1, iy) + 1];
    std::int64_t sx = 0;
    std::int64_t sy = 0;
    std::int64_t n = 0;
    for (std::uint32_t k = b; k < e; ++k) {
      const double dx = xs_[k] - q.x;
      const double dy = ys_[k] - q.y;
      const std::int64_t mask = -static_cast<std::int64_t>(dx * dx + dy * dy <= r2);
      sx += fx_[k] & mask;
      sy += fy_[k] & mask;
      n -= mask;
    }
    acc += FixedSum{sx, sy, n};
  }
  static int floor_int(double v) {
    const int i = static_cast<int>(v);
    return i - (v < i ? 1 : 0);
  }
  static int ceil_int(double v) {
    const int i = static_cast<int>(v);
    return i + (v > i ? 1 : 0);
  }
  int cx(double x) const { return std::clamp(floor_int((x - origin_.x) * inv_cell_), -1, nx_); }
  int cy(double y) const { return std::clamp(floor_int((y - origin_.y) * inv_cell_), -1, ny_); }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(ix);
  }
  std::size_t row_base(int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_ + 1);
  }

  double cell_;
  double inv_cell_;
  Vec2 origin_;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<FixedSum> fixed_;
  std::vector<std::uint32_t> start_;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<std::int64_t> fx_;
  std::vector<std::int64_t> fy_;
  std::vector<FixedSum> prefix_;
};

// bandwidth/8, coarsened while the grid exceeds ~100k cells.
double grid_cell(std::span<const Vec2> pts, double bandwidth) {
  Vec2 lo = pts[0];
  Vec2 hi = pts[0];
  for (const auto& p : pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  double cell = bandwidth / 8.0;
  while (cell < bandwidth / 2.0 &&
         ((hi.x - lo.x) / cell + 1.0) * ((hi.y - lo.y) / cell + 1.0) > 1e5) {
    cell *= 2.0;
  }
  return cell;
}

}  // namespace

MeanShiftResult mean_shift(std::span<const Vec2> points, double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  MeanShiftResult r;
  if (points.empty()) return r;
  constexpr double kStop = 0.01;
  constexpr int kMaxIter = 100;

  // Walkers advance in lockstep. Walkers at bit-identical positions would
  // follow identical paths, so they are merged.
  const PointGrid grid(points, grid_cell(points, bandwidth));
  std::vector<Vec2> pos(points.begin(), points.end());
  std::vector<std::uint32_t> walker_of(points.size());
  std::vector<std::uint32_t> active(points.size());
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    walker_of[i] = i;
    active[i] = i;
  }
  std::vector<std::uint32_t> redirect(points.size());
  for (std::uint32_t i = 0; i < points.size(); ++i) redirect[i] = i;

  std::vector<std::uint32_t> still;
  for (int it = 0; it < kMaxIter && !active.empty(); ++it) {
    still.clear();
    for (std::uint32_t w : active) {
      const FixedSum s = grid.disk_sum(pos[w], bandwidth);
      if (s.n == 0) continue;
      const double inv = 1.0 / (static_cast<double>(s.n) * kFixedScale);
      const Vec2 next{static_cast<double>(s.x) * inv, static_cast<double>(s.y) * inv};
      const double moved = (next - pos[w]).norm();
      pos[w] = next;
      if (moved >= kStop) still.push_back(w);
    }
    std::sort(still.begin(), still.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (pos[a].x != pos[b].x) return pos[a].x < pos[b].x;
      if (pos[a].y != pos[b].y) return pos[a].y < pos[b].y;
      return a < b;
    });
    active.clear();
    for (std::size_t k = 0; k < still.size(); ++k) {
      if (!active.empty() && pos[active.back()] == pos[still[k]]) {
        redirect[still[k]] = active.back();
      } else {
        active.push_back(still[k]);
      }
    }
  }
  auto root = [&](std::uint32_t w) {
    while (redirect[w] != w) w = redirect[w];
    return w;
  };

  const double merge = bandwidth / 2.0;
  r.assignment.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 m = pos[root(walker_of[i])];
    int found = -1;
    for (std::size_t c = 0; c < r.modes.size(); ++c) {
      if ((m - r.modes[c]).norm() <= merge) {
        found = static_cast<int>(c);
        break;
      }
    }
    if (found < 0) {
      found = static_cast<int>(r.modes.size());
      r.modes.push_back(m);
      r.sizes.push_back(0);
    }
    r.assignment[i] = found;
    ++r.sizes[static_cast<std::size_t>(found)];
  }
  return r;
}

Step2Result check_step2(std::span<const Particle> particles, std::optional<int> dominant_label,
                        const ConvergenceParams& params) {
  Step2Result r;
  std::vector<Vec2> pts;
  std::vector<std::uint32_t> idx;
  pts.reserve(particles.size());
  idx.reserve(particles.size());
  for (std::uint32_t i = 0; i < particles.size(); ++i) {
    if (dominant_label && particles[i].label != *dominant_label) continue;
    pts.push_back(particles[i].position);
    idx.push_back(i);
  }
  if (pts.empty()) return r;
  const auto ms = mean_shift(pts, params.meanshift_bandwidth);
  const int best = ms.largest();
  Vec2 sum;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (ms.assignment[i] == best) {
      r.members.push_back(idx[i]);
      sum += pts[i];
    }
  }
  r.center = sum / static_cast<double>(r.members.size());
  r.cluster_share = static_cast<double>(r.members.size()) / static_cast<double>(pts.size());
  r.passed = r.cluster_share >= params.cluster_dominance;
  return r;
}

ConvergenceMonitor::ConvergenceMonitor(const ConvergenceParams& params, Step1Mode mode)
    : params_(params), mode_(mode) {
  params_.validate();
}

void ConvergenceMonitor::adopt_cluster(std::span<const Particle> particles, const Step2Result& r) {
  member_.assign(particles.size(), 0);
  for (auto i : r.members) member_[i] = 1;
  state_.dominant_cluster_center = r.center;
  state_.steps_since_cluster_update = 0;
}

void ConvergenceMonitor::update_tracking(std::span<const Particle> particles,
                                         std::span<const Replacement> replacements,
                                         ConvergenceReport& report) {
  for (const auto& rep : replacements) member_[rep.slot] = member_[rep.donor];
  ++state_.steps_since_cluster_update;

  bool refresh = state_.steps_since_cluster_update >= params_.cluster_update_period;
  Vec2 sum;
  std::size_t n = 0;
  if (!refresh) {
    for (std::size_t i = 0; i < particles.size(); ++i) {
      if (member_[i]) {
        sum += particles[i].position;
        ++n;
      }
    }
    refresh = n == 0;
  }
  if (refresh) {
    std::optional<int> label = state_.dominant_label;
    if (label && std::none_of(particles.begin(), particles.end(),
                              [&](const Particle& p) { return p.label == *label; })) {
      label = check_step1(particles, params_).plurality_label;
      state_.dominant_label = label;
    }
    const Step2Result r = check_step2(particles, label, params_);
    adopt_cluster(particles, r);
    report.cluster_share = r.cluster_share;
  } else {
    state_.dominant_cluster_center = sum / static_cast<double>(n);
  }
}

ConvergenceReport ConvergenceMonitor::observe(std::span<const Particle> particles,
                                              std::span<const Replacement> replacements,
                                              double t) {
  ConvergenceReport report;
  if (particles.empty()) throw std::invalid_argument("empty particle set");

  if (state_.phase == Phase::converged) {
    update_tracking(particles, replacements, report);
    if (mode_ == Step1Mode::label_dominance) report.dominant_share = check_step1(particles, params_).dominant_share;
    report.phase = state_.phase;
    report.dominant_label = state_.dominant_label;
    report.prediction = state_.dominant_cluster_center;
    return report;
  }

  if (mode_ == Step1Mode::label_dominance) {
    const Step1Result s1 = check_step1(particles, params_);
    report.dominant_share = s1.dominant_share;
    if (state_.phase == Phase::searching && s1.passed) {
      state_.phase = Phase::label_dominant;
      state_.t1 = t;
    }
    if (state_.phase == Phase::label_dominant) {
      state_.dominant_label = s1.passed ? s1.dominant_label : std::optional<int>(s1.plurality_label);
    }
  } else if (state_.phase == Phase::searching && check_step1_dispersion(particles, params_)) {
    state_.phase = Phase::label_dominant;
    state_.t1 = t;
  }

  if (state_.phase == Phase::label_dominant) {
    const Step2Result s2 = check_step2(particles, state_.dominant_label, params_);
    report.cluster_share = s2.cluster_share;
    if (s2.passed) {
      state_.phase = Phase::converged;
      state_.t2 = t;
      adopt_cluster(particles, s2);
      report.prediction = state_.dominant_cluster_center;
    }
  }
  report.phase = state_.phase;
  report.dominant_label = state_.dominant_label;
  return report;
}

}  // namespace palms
