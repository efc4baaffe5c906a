#include "palms/filter.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "json_util.hpp"

namespace palms {

void FilterConfig::validate() const {
  if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (!(resample_pos_noise >= 0.0) || !(resample_drift_noise_deg >= 0.0) ||
      !(step_pos_noise >= 0.0) || !(step_drift_noise_deg >= 0.0)) {
    throw std::invalid_argument("noise levels must be >= 0");
  }
}

namespace {

Vec2 uniform_in_cell(const GridSpec& g, std::size_t cell, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int ix = static_cast<int>(cell % static_cast<std::size_t>(g.width));
  const int iy = static_cast<int>(cell / static_cast<std::size_t>(g.width));
  const Vec2 corner = g.cell_corner({ix, iy});
  const double fx = u(rng);
  const double fy = u(rng);
  return {corner.x + fx * g.resolution, corner.y + fy * g.resolution};
}

Vec2 uniform_in_box(const Box& b, Rng& rng) {
  std::uniform_real_distribution<double> ux(b.min.x, b.max.x);
  std::uniform_real_distribution<double> uy(b.min.y, b.max.y);
  const double x = ux(rng);
  const double y = uy(rng);
  return {x, y};
}

}  // namespace

ParticleSet init_palms(const CandidateMask& mask, Angle theta, const FilterConfig& cfg, Rng& rng,
                       const std::optional<Box>& bounds) {
  cfg.validate();
  const int n_maps = static_cast<int>(mask.masks.size());
  std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(n_maps));
  for (int k = 0; k < n_maps; ++k) {
    const RasterGrid& m = mask.masks[static_cast<std::size_t>(k)];
    const auto v = m.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0.0) continue;
      if (bounds) {
        const int ix = static_cast<int>(i % static_cast<std::size_t>(m.width()));
        const int iy = static_cast<int>(i / static_cast<std::size_t>(m.width()));
        if (!bounds->contains(m.spec().cell_center({ix, iy}))) continue;
      }
      cells[static_cast<std::size_t>(k)].push_back(i);
    }
  }
  std::size_t total = 0;
  int non_empty = 0;
  for (const auto& c : cells) {
    total += c.size();
    non_empty += c.empty() ? 0 : 1;
  }
  if (total == 0) throw std::invalid_argument("no candidates");

  auto drift_for = [&](int k) { return theta + Angle::from_radians(kTwoPi * k / n_maps); };
  ParticleSet out;
  out.reserve(static_cast<std::size_t>(cfg.n_particles));
  if (cfg.equal_groups) {
    const int base = cfg.n_particles / non_empty;
    int extra = cfg.n_particles % non_empty;
    for (int k = 0; k < n_maps; ++k) {
      const auto& ck = cells[static_cast<std::size_t>(k)];
      if (ck.empty()) continue;
      const int count = base + (extra > 0 ? 1 : 0);
      if (extra > 0) --extra;
      std::uniform_int_distribution<std::size_t> pick(0, ck.size() - 1);
      const Angle drift = drift_for(k);
      for (int i = 0; i < count; ++i) {
        const std::size_t cell = ck[pick(rng)];
        out.emplace_back(uniform_in_cell(mask.masks[static_cast<std::size_t>(k)].spec(), cell, rng),
                         drift, k);
      }
    }
    return out;
  }
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (int i = 0; i < cfg.n_particles; ++i) {
    std::size_t r = pick(rng);
    int k = 0;
    while (r >= cells[static_cast<std::size_t>(k)].size()) {
      r -= cells[static_cast<std::size_t>(k)].size();
      ++k;
    }
    const std::size_t cell = cells[static_cast<std::size_t>(k)][r];
    out.emplace_back(uniform_in_cell(mask.masks[static_cast<std::size_t>(k)].spec(), cell, rng),
                     drift_for(k), k);
  }
  return out;
}

ParticleSet init_uniform(const FloorPlan& plan, const FilterConfig& cfg, Rng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> ud(0.0, kTwoPi);
  ParticleSet out;
  out.reserve(static_cast<std::size_t>(cfg.n_particles));
  for (int i = 0; i < cfg.n_particles; ++i) {
    const Vec2 p = uniform_in_box(plan.bounds, rng);
    out.emplace_back(p, Angle::from_radians(ud(rng)), kUnlabeled);
  }
  return out;
}

ParticleSet init_uniform_ori(const FloorPlan& plan, Angle theta_est, const FilterConfig& cfg,
                             Rng& rng, int n_orientations) {
  cfg.validate();
  if (n_orientations < 1) throw std::invalid_argument("n_orientations must be >= 1");
  ParticleSet out;
  out.reserve(static_cast<std::size_t>(cfg.n_particles));
  for (int i = 0; i < cfg.n_particles; ++i) {
    const int k = i % n_orientations;
    const Vec2 p = uniform_in_box(plan.bounds, rng);
    out.emplace_back(p, theta_est + Angle::from_radians(kTwoPi * k / n_orientations), k);
  }
  return out;
}

Angle estimate_theta_from_odometry(const FloorPlan& plan, std::span<const OdometryStep> steps,
                                   int window) {
  Vec2 net;
  const std::size_t n = std::min(steps.size(), static_cast<std::size_t>(std::max(window, 1)));
  for (std::size_t i = 0; i < n; ++i) net += steps[i].delta;
  const Angle fp = principal_orientation(plan.walls);
  if (net.norm() == 0.0) return Angle{};
  double heading = std::atan2(net.y, net.x);
  heading = std::fmod(heading, kPi / 2.0);
  if (heading < 0.0) heading += kPi / 2.0;
  return alignment_angle(Angle::from_radians(heading), fp);
}

void step(ParticleSet& particles, const OdometryStep& odo, const CollisionIndex& index,
          const FilterConfig& cfg, Rng& rng, StepOutcome& outcome) {
  if (particles.empty()) throw std::invalid_argument("empty particle set");
  outcome.n_dead = 0;
  outcome.replacements.clear();

  boost::random::normal_distribution<double> unit(0.0, 1.0);
  const Box& bounds = index.bounds();
  const double drift_step_sigma = deg_to_rad(cfg.step_drift_noise_deg);

  // Dead slots are collected first; survivors keep their indices.
  thread_local std::vector<std::uint32_t> dead;
  thread_local std::vector<std::uint32_t> alive;
  dead.clear();
  alive.clear();
  for (std::uint32_t i = 0; i < particles.size(); ++i) {
    Particle& p = particles[i];
    if (drift_step_sigma > 0.0) {
      p.set_drift(p.drift() + Angle::from_radians(drift_step_sigma * unit(rng)));
    }
    Vec2 next = p.position + p.apply_drift(odo.delta);
    if (cfg.step_pos_noise > 0.0) {
      const double nx = unit(rng);
      const double ny = unit(rng);
      next += Vec2{nx, ny} * cfg.step_pos_noise;
    }
    if (!bounds.contains(next) || index.path_hits_wall(p.position, next)) {
      dead.push_back(i);
    } else {
      p.position = next;
      alive.push_back(i);
    }
  }
  outcome.n_dead = dead.size();
  if (dead.empty()) return;
  if (alive.empty()) throw FilterCollapsed();

  std::uniform_int_distribution<std::size_t> pick(0, alive.size() - 1);
  const double drift_sigma = deg_to_rad(cfg.resample_drift_noise_deg);
  for (std::uint32_t slot : dead) {
    const std::uint32_t donor = alive[pick(rng)];
    const Particle& src = particles[donor];
    Vec2 pos = src.position;
    if (cfg.resample_pos_noise > 0.0) {
      // Spawns never land across a wall from their donor.
      for (int attempt = 0; attempt < 8; ++attempt) {
        const double nx = unit(rng);
        const double ny = unit(rng);
        const Vec2 cand = src.position + Vec2{nx, ny} * cfg.resample_pos_noise;
        if (bounds.contains(cand) && !index.path_hits_wall(src.position, cand)) {
          pos = cand;
          break;
        }
      }
    }
    Angle drift = src.drift();
    if (drift_sigma > 0.0) drift = drift + Angle::from_radians(drift_sigma * unit(rng));
    particles[slot] = Particle(pos, drift, src.label);
    outcome.replacements.push_back({slot, donor});
  }
}

StepOutcome step(ParticleSet& particles, const OdometryStep& odo, const CollisionIndex& index,
                 const FilterConfig& cfg, Rng& rng) {
  StepOutcome out;
  step(particles, odo, index, cfg, rng, out);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, std::size_t line_no) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("odometry line " + std::to_string(line_no) + ": bad number \"" +
                     std::string(s) + "\"");
  }
  return v;
}

}  // namespace

std::vector<OdometryStep> load_odometry(std::string_view text) {
  std::vector<OdometryStep> steps;
  bool seen_format = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!seen_format) {
      if (line.front() == '#') line = trim(line.substr(1));
      if (line.rfind("format:", 0) != 0 || trim(line.substr(7)) != kOdometryFormat) {
        throw ParseError("odometry trace must start with \"format: palms-odo/1\"");
      }
      seen_format = true;
      continue;
    }
    if (line.front() == '#' || line.front() == 't') continue;  // comment or column header
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 4) {
      throw ParseError("odometry line " + std::to_string(line_no) + ": expected 4 columns");
    }
    OdometryStep s;
    s.t = parse_number(cols[0], line_no);
    s.delta = {parse_number(cols[1], line_no), parse_number(cols[2], line_no)};
    s.heading_delta = Angle::from_degrees(parse_number(cols[3], line_no));
    if (!steps.empty() && !(s.t > steps.back().t)) {
      throw ValidationError("odometry line " + std::to_string(line_no) +
                            ": timestamps must strictly increase");
    }
    if (!(s.delta.norm() < 3.0)) {
      throw ValidationError("odometry line " + std::to_string(line_no) +
                            ": displacement exceeds 3 m per step");
    }
    steps.push_back(s);
  }
  if (!seen_format) throw ParseError("odometry trace must start with \"format: palms-odo/1\"");
  return steps;
}

std::vector<OdometryStep> load_odometry_file(const std::filesystem::path& path) {
  return load_odometry(detail::read_file(path));
}

std::string save_odometry(std::span<const OdometryStep> steps) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "format: " << kOdometryFormat << "\n";
  out << "t,dx,dy,dheading_deg\n";
  for (const auto& s : steps) {
    out << s.t << "," << s.delta.x << "," << s.delta.y << "," << s.heading_delta.signed_degrees()
        << "\n";
  }
  return out.str();
}

void save_odometry_file(std::span<const OdometryStep> steps, const std::filesystem::path& path) {
  detail::write_file(path, save_odometry(steps));
}

}  // namespace palms
