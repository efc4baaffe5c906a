#include "palms/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <sstream>

namespace palms {

const char* to_string(WorldGenerator g) {
  switch (g) {
    case WorldGenerator::corridor_grid:
      return "corridor_grid";
    case WorldGenerator::rooms_off_corridor:
      return "rooms_off_corridor";
  }
  return "unknown";
}

WorldGenerator world_generator_from_string(std::string_view s) {
  if (s == "corridor_grid") return WorldGenerator::corridor_grid;
  if (s == "rooms_off_corridor") return WorldGenerator::rooms_off_corridor;
  throw std::invalid_argument("unknown world generator \"" + std::string(s) + "\"");
}

void WorldSpec::validate() const {
  if (!(extent_x > 0.0) || !(extent_y > 0.0)) throw std::invalid_argument("extents must be positive");
  if (!(corridor_width >= 1.0)) throw std::invalid_argument("corridor_width must be >= 1 m");
  if (!(door_gap > 0.0)) throw std::invalid_argument("door_gap must be positive");
  if (extent_x < corridor_width + 6.0 || extent_y < corridor_width + 6.0) {
    throw std::invalid_argument("extents too small for a corridor with rooms");
  }
}

std::size_t CorridorGraph::add_node(Vec2 p) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if ((nodes[i] - p).norm() < 1e-9) return i;
  }
  nodes.push_back(p);
  adjacency.emplace_back();
  return nodes.size() - 1;
}

void CorridorGraph::add_edge(std::size_t a, std::size_t b) {
  if (a == b) return;
  if (std::find(adjacency[a].begin(), adjacency[a].end(), b) != adjacency[a].end()) return;
  adjacency[a].push_back(b);
  adjacency[b].push_back(a);
}

double CorridorGraph::total_length() const {
  double s = 0.0;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b : adjacency[a]) {
      if (a < b) s += (nodes[b] - nodes[a]).norm();
    }
  }
  return s;
}

CorridorGraph::Projection CorridorGraph::project(Vec2 p) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b : adjacency[a]) {
      if (a > b) continue;
      const Vec2 ab = nodes[b] - nodes[a];
      const double t = std::clamp((p - nodes[a]).dot(ab) / ab.dot(ab), 0.0, 1.0);
      const Vec2 q = nodes[a] + ab * t;
      const double d = (p - q).norm();
      if (d < best.distance) best = {a, b, q, d};
    }
  }
  return best;
}

Vec2 CorridorGraph::point_at(double s) const {
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b : adjacency[a]) {
      if (a > b) continue;
      const double len = (nodes[b] - nodes[a]).norm();
      if (s <= len) return nodes[a] + (nodes[b] - nodes[a]) * (s / len);
      s -= len;
    }
  }
  return nodes.empty() ? Vec2{} : nodes.back();
}

namespace {

struct Interval {
  double lo;
  double hi;
};

// Wall along an axis-aligned line with an optional door gap.
void emit_line(std::vector<Segment2D>& walls, bool horizontal, double fixed, double lo, double hi,
               std::optional<Interval> gap) {
  auto push = [&](double a, double b) {
    if (b - a < 1e-6) return;
    if (horizontal) {
      walls.emplace_back(Vec2{a, fixed}, Vec2{b, fixed});
    } else {
      walls.emplace_back(Vec2{fixed, a}, Vec2{fixed, b});
    }
  };
  if (!gap) {
    push(lo, hi);
    return;
  }
  push(lo, gap->lo);
  push(gap->hi, hi);
}

std::vector<double> split_lengths(double total, double min_len, double max_len, Rng& rng) {
  std::uniform_real_distribution<double> u(min_len, max_len);
  std::vector<double> cuts{0.0};
  double pos = 0.0;
  while (total - pos > 2.0 * min_len) {
    double w = u(rng);
    if (total - pos - w < min_len) break;
    pos += w;
    cuts.push_back(pos);
  }
  cuts.push_back(total);
  return cuts;
}

enum Side { kBottom = 0, kTop = 1, kLeft = 2, kRight = 3 };

struct Block {
  Interval x;
  Interval y;
  bool corridor[4];  // per Side: true when the side faces a corridor
};

void emit_block(std::vector<Segment2D>& walls, const Block& b, const WorldSpec& spec,
                double min_room, double max_room, Rng& rng) {
  const bool rooms_along_x = b.corridor[kBottom] || b.corridor[kTop];
  const double along_lo = rooms_along_x ? b.x.lo : b.y.lo;
  const double along_hi = rooms_along_x ? b.x.hi : b.y.hi;
  auto cuts = split_lengths(along_hi - along_lo, min_room, max_room, rng);
  for (double& c : cuts) c += along_lo;
  const std::size_t n_rooms = cuts.size() - 1;

  // Side lines of the block in the split direction are "long" sides (shared
  // by every room); the two ends belong to the first and last room only.
  const Side long_sides[2] = {rooms_along_x ? kBottom : kLeft, rooms_along_x ? kTop : kRight};
  const Side end_sides[2] = {rooms_along_x ? kLeft : kBottom, rooms_along_x ? kRight : kTop};

  std::vector<std::optional<Interval>> long_gaps[2];
  long_gaps[0].assign(n_rooms, std::nullopt);
  long_gaps[1].assign(n_rooms, std::nullopt);
  std::optional<Interval> end_gaps[2];

  const double cross_lo = rooms_along_x ? b.y.lo : b.x.lo;
  const double cross_hi = rooms_along_x ? b.y.hi : b.x.hi;
  auto door_in = [&](double lo, double hi) -> std::optional<Interval> {
    const double margin = 0.4 + spec.door_gap / 2.0;
    if (hi - lo < 2.0 * margin) return std::nullopt;
    std::uniform_real_distribution<double> u(lo + margin, hi - margin);
    const double c = u(rng);
    return Interval{c - spec.door_gap / 2.0, c + spec.door_gap / 2.0};
  };

  for (std::size_t r = 0; r < n_rooms; ++r) {
    // Candidate door sides: 0/1 long sides, 2/3 block ends for outer rooms.
    std::vector<int> options;
    if (b.corridor[long_sides[0]]) options.push_back(0);
    if (b.corridor[long_sides[1]]) options.push_back(1);
    if (r == 0 && b.corridor[end_sides[0]]) options.push_back(2);
    if (r + 1 == n_rooms && b.corridor[end_sides[1]]) options.push_back(3);
    if (options.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    const int side = options[pick(rng)];
    if (side < 2) {
      long_gaps[side][r] = door_in(cuts[r], cuts[r + 1]);
    } else {
      end_gaps[side - 2] = door_in(cross_lo, cross_hi);
    }
  }

  for (int s = 0; s < 2; ++s) {
    if (!b.corridor[long_sides[s]]) continue;
    const double fixed = s == 0 ? cross_lo : cross_hi;
    for (std::size_t r = 0; r < n_rooms; ++r) {
      emit_line(walls, rooms_along_x, fixed, cuts[r], cuts[r + 1], long_gaps[s][r]);
    }
  }
  for (int s = 0; s < 2; ++s) {
    if (!b.corridor[end_sides[s]]) continue;
    const double fixed = s == 0 ? along_lo : along_hi;
    emit_line(walls, !rooms_along_x, fixed, cross_lo, cross_hi, end_gaps[s]);
  }
  for (std::size_t r = 1; r < n_rooms; ++r) {
    emit_line(walls, !rooms_along_x, cuts[r], cross_lo, cross_hi, std::nullopt);
  }
}

// Gaps between corridors vary by up to 40% around the mean so the lattice has
// no rotational or mirror symmetry.
std::vector<double> corridor_centers(int n, double extent, double width, Rng& rng) {
  std::uniform_real_distribution<double> weight(0.6, 1.4);
  std::vector<double> gaps(static_cast<std::size_t>(n) + 1);
  double total = 0.0;
  for (auto& g : gaps) {
    g = weight(rng);
    total += g;
  }
  std::vector<double> out;
  double c = 0.0;
  for (int i = 0; i < n; ++i) {
    c += gaps[static_cast<std::size_t>(i)] * extent / total;
    out.push_back(std::clamp(c, width / 2.0 + 3.0, extent - width / 2.0 - 3.0));
  }
  return out;
}

std::vector<Interval> block_intervals(const std::vector<double>& centers, double extent,
                                      double width) {
  std::vector<Interval> out;
  double lo = 0.0;
  for (double c : centers) {
    out.push_back({lo, c - width / 2.0});
    lo = c + width / 2.0;
  }
  out.push_back({lo, extent});
  return out;
}

}  // namespace

World generate_world(const WorldSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const double w = spec.corridor_width;
  const double W = spec.extent_x;
  const double H = spec.extent_y;

  std::vector<double> xs;
  std::vector<double> ys;
  double min_room = 3.0;
  double max_room = 6.0;
  if (spec.generator == WorldGenerator::corridor_grid) {
    const int nv = std::max(1, static_cast<int>(std::lround(W / 14.0)));
    const int nh = std::max(1, static_cast<int>(std::lround(H / 12.0)));
    xs = corridor_centers(nv, W, w, rng);
    ys = corridor_centers(nh, H, w, rng);
  } else {
    std::uniform_real_distribution<double> u(-H / 10.0, H / 10.0);
    ys.push_back(std::clamp(H / 2.0 + u(rng), w / 2.0 + 3.0, H - w / 2.0 - 3.0));
    if (W >= 30.0) {
      std::uniform_real_distribution<double> ux(0.3, 0.7);
      xs.push_back(W * ux(rng));
    }
    min_room = 2.5;
    max_room = 8.0;
  }

  World world;
  world.plan.name = std::string(to_string(spec.generator)) + "-" + std::to_string(spec.seed);
  world.plan.bounds = {{0.0, 0.0}, {W, H}};
  auto& walls = world.plan.walls;
  walls.emplace_back(Vec2{0.0, 0.0}, Vec2{W, 0.0});
  walls.emplace_back(Vec2{W, 0.0}, Vec2{W, H});
  walls.emplace_back(Vec2{W, H}, Vec2{0.0, H});
  walls.emplace_back(Vec2{0.0, H}, Vec2{0.0, 0.0});

  const auto bx = block_intervals(xs, W, w);
  const auto by = block_intervals(ys, H, w);
  for (std::size_t j = 0; j < by.size(); ++j) {
    for (std::size_t i = 0; i < bx.size(); ++i) {
      Block b;
      b.x = bx[i];
      b.y = by[j];
      b.corridor[kBottom] = j > 0;
      b.corridor[kTop] = j + 1 < by.size();
      b.corridor[kLeft] = i > 0;
      b.corridor[kRight] = i + 1 < bx.size();
      emit_block(walls, b, spec, min_room, max_room, rng);
    }
  }

  // Centerlines end half a corridor width from the outer wall.
  auto& g = world.corridors;
  for (double y : ys) {
    std::vector<double> stops{w / 2.0};
    stops.insert(stops.end(), xs.begin(), xs.end());
    stops.push_back(W - w / 2.0);
    for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
      g.add_edge(g.add_node({stops[k], y}), g.add_node({stops[k + 1], y}));
    }
  }
  for (double x : xs) {
    std::vector<double> stops{w / 2.0};
    stops.insert(stops.end(), ys.begin(), ys.end());
    stops.push_back(H - w / 2.0);
    for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
      g.add_edge(g.add_node({x, stops[k]}), g.add_node({x, stops[k + 1]}));
    }
  }
  world.plan.validate();
  return world;
}

int count_free_components(const FloorPlan& plan, double resolution) {
  const RasterGrid raster = rasterize_floorplan(plan, resolution);
  const GridSpec& g = raster.spec();
  std::vector<int> label(g.cell_count(), -1);
  int components = 0;
  std::deque<CellIndex> queue;
  auto is_free = [&](CellIndex c) {
    return g.in_bounds(c) && raster.at(c) == 0.0 && plan.bounds.contains(g.cell_center(c));
  };
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      const CellIndex start{ix, iy};
      if (!is_free(start) || label[raster.index(ix, iy)] >= 0) continue;
      label[raster.index(ix, iy)] = components;
      queue.push_back(start);
      while (!queue.empty()) {
        const CellIndex c = queue.front();
        queue.pop_front();
        const CellIndex nbrs[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
        for (const auto& n : nbrs) {
          if (!is_free(n) || label[raster.index(n.x, n.y)] >= 0) continue;
          label[raster.index(n.x, n.y)] = components;
          queue.push_back(n);
        }
      }
      ++components;
    }
  }
  return components;
}

Observation raycast_scan(const FloorPlan& plan, Vec2 position, Angle heading,
                         const ScanSimParams& params, std::uint64_t seed) {
  for (const auto& w : plan.walls) {
    if (point_segment_distance(position, w.a(), w.b()) < 1e-6) {
      throw std::invalid_argument("pose inside a wall");
    }
  }
  if (params.n_rays < 3) throw std::invalid_argument("n_rays must be >= 3");

  struct Hit {
    int wall = -1;
    Vec2 point;
  };
  const int n = params.n_rays;
  std::vector<Hit> hits(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = kTwoPi * i / n;
    const Vec2 dir{std::cos(a), std::sin(a)};
    double best_t = params.max_range;
    Hit hit;
    for (std::size_t wi = 0; wi < plan.walls.size(); ++wi) {
      const Vec2 p = plan.walls[wi].a();
      const Vec2 e = plan.walls[wi].b() - p;
      const double denom = dir.cross(e);
      if (denom == 0.0) continue;
      const Vec2 d = p - position;
      const double t = d.cross(e) / denom;
      const double s = d.cross(dir) / denom;
      if (t <= 0.0 || s < 0.0 || s > 1.0) continue;
      if (t < best_t || (t == best_t && hit.wall < 0)) {
        best_t = t;
        hit = {static_cast<int>(wi), position + dir * t};
      }
    }
    hits[static_cast<std::size_t>(i)] = hit;
  }

  // Start at a run boundary so that a run wrapping past ray 0 stays whole.
  int start = 0;
  for (int i = 0; i < n; ++i) {
    const int prev = (i + n - 1) % n;
    if (hits[static_cast<std::size_t>(i)].wall != hits[static_cast<std::size_t>(prev)].wall) {
      start = i;
      break;
    }
  }
  std::vector<Segment2D> world_segs;
  int i = 0;
  while (i < n) {
    const Hit& first = hits[static_cast<std::size_t>((start + i) % n)];
    int j = i + 1;
    while (j < n && hits[static_cast<std::size_t>((start + j) % n)].wall == first.wall) ++j;
    if (first.wall >= 0 && j - i >= 2) {
      const Hit& last = hits[static_cast<std::size_t>((start + j - 1) % n)];
      if ((last.point - first.point).norm() > Segment2D::kMinLength * 10.0) {
        world_segs.emplace_back(first.point, last.point);
      }
    }
    i = j;
  }

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = heading.radians();
  std::vector<Segment2D> local;
  for (const auto& s : world_segs) {
    Vec2 a = rotate(s.a() - position, h);
    Vec2 b = rotate(s.b() - position, h);
    if (params.endpoint_noise > 0.0) {
      a += Vec2{noise(rng), noise(rng)} * params.endpoint_noise;
      b += Vec2{noise(rng), noise(rng)} * params.endpoint_noise;
    }
    if (params.dropout > 0.0 && unit(rng) < params.dropout) continue;
    if ((b - a).norm() <= Segment2D::kMinLength) continue;
    local.emplace_back(a, b);
  }
  Observation obs;
  obs.max_range = params.max_range;
  obs.segments = clip_to_range(local, params.max_range, params.min_segment_length);
  obs.validate();
  return obs;
}

double TruthTrace::path_length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < poses.size(); ++i) s += (poses[i].position - poses[i - 1].position).norm();
  return s;
}

TruthTrace generate_walk(const World& world, Vec2 start, double length, std::uint64_t seed,
                         const WalkParams& params) {
  for (const auto& w : world.plan.walls) {
    if (point_segment_distance(start, w.a(), w.b()) < 0.05) {
      throw std::invalid_argument("start is on a wall");
    }
  }
  const auto& g = world.corridors;
  if (g.nodes.empty()) throw std::invalid_argument("world has no corridors");
  const auto proj = g.project(start);
  if (proj.distance > 0.3) throw std::invalid_argument("start is off the corridor network");

  Rng rng(seed);
  std::size_t prev = proj.from;
  std::size_t target = proj.to;
  if (std::uniform_int_distribution<int>(0, 1)(rng) == 1) std::swap(prev, target);

  const double ds = params.speed / params.step_rate;
  const double dt = 1.0 / params.step_rate;
  const auto n_steps = static_cast<std::size_t>(std::max(0.0, std::round(length / ds)));

  TruthTrace trace;
  trace.observation_point = start;
  trace.poses.reserve(n_steps + 1);
  trace.poses.push_back({0.0, start, Angle{}});
  Vec2 pos = proj.point;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    double remaining = ds;
    while (remaining > 0.0) {
      const Vec2 to = g.nodes[target];
      const double d = (to - pos).norm();
      if (d > remaining) {
        pos += (to - pos) * (remaining / d);
        remaining = 0.0;
        break;
      }
      pos = to;
      remaining -= d;
      const auto& nbrs = g.adjacency[target];
      std::vector<std::size_t> options;
      for (auto nb : nbrs) {
        if (nb != prev) options.push_back(nb);
      }
      if (options.empty()) options.push_back(prev);
      const std::size_t next = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
      prev = target;
      target = next;
    }
    const Vec2 moved = pos - trace.poses.back().position;
    trace.poses.push_back({k * dt, pos, Angle::from_radians(std::atan2(moved.y, moved.x))});
  }
  if (trace.poses.size() > 1) trace.poses[0].heading = trace.poses[1].heading;
  return trace;
}

std::vector<OdometryStep> corrupt_odometry(const TruthTrace& truth, double drift_deg,
                                           const OdometryNoise& noise, std::uint64_t seed) {
  if (!std::isfinite(drift_deg)) throw std::invalid_argument("drift must be finite");
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double total = truth.path_length();
  std::vector<OdometryStep> out;
  if (truth.poses.size() < 2) return out;
  out.reserve(truth.poses.size() - 1);
  double walked = 0.0;
  double prev_rot = deg_to_rad(drift_deg);
  for (std::size_t i = 0; i + 1 < truth.poses.size(); ++i) {
    const Vec2 d = truth.poses[i + 1].position - truth.poses[i].position;
    const double len = d.norm();
    walked += len;
    const double extra = total > 0.0 ? noise.accumulated_drift_deg * (walked / total) : 0.0;
    const double rot = deg_to_rad(drift_deg + extra);
    Vec2 delta = rotate(d, rot);
    if (noise.step_noise_fraction > 0.0) {
      const double sx = unit(rng);
      const double sy = unit(rng);
      delta += Vec2{sx, sy} * (noise.step_noise_fraction * len);
    }
    OdometryStep s;
    s.t = truth.poses[i + 1].t;
    s.delta = delta;
    s.heading_delta = truth.poses[i + 1].heading - truth.poses[i].heading +
                      Angle::from_radians(rot - prev_rot);
    prev_rot = rot;
    out.push_back(s);
  }
  return out;
}

std::vector<Vec2> dead_reckon(Vec2 start, std::span<const OdometryStep> steps) {
  std::vector<Vec2> out{start};
  out.reserve(steps.size() + 1);
  for (const auto& s : steps) out.push_back(out.back() + s.delta);
  return out;
}

TruthTrace truth_from_recorded(const FloorPlan& plan, std::span<const OdometryStep> odometry,
                               Vec2 start, Angle drift, const FilterConfig& cfg) {
  const CollisionIndex index(plan);
  Rng rng(cfg.rng_seed);
  ParticleSet particles(static_cast<std::size_t>(cfg.n_particles), Particle(start, drift, 0));
  TruthTrace trace;
  trace.observation_point = start;
  const double t0 = odometry.empty() ? 0.0 : odometry.front().t - 0.1;
  trace.poses.push_back({t0, start, drift});
  StepOutcome outcome;
  for (const auto& odo : odometry) {
    step(particles, odo, index, cfg, rng, outcome);
    Vec2 mean;
    for (const auto& p : particles) mean += p.position;
    mean = mean / static_cast<double>(particles.size());
    const Vec2 moved = mean - trace.poses.back().position;
    const Angle heading =
        moved.norm() > 0.0 ? Angle::from_radians(std::atan2(moved.y, moved.x)) : trace.poses.back().heading;
    trace.poses.push_back({odo.t, mean, heading});
  }
  return trace;
}

std::string save_truth(const TruthTrace& truth) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "format: " << kTruthFormat << "\n";
  out << "observation_point: " << truth.observation_point.x << " " << truth.observation_point.y
      << "\n";
  out << "true_theta_deg: " << truth.true_theta.signed_degrees() << "\n";
  out << "t,x,y,heading_deg\n";
  for (const auto& p : truth.poses) {
    out << p.t << "," << p.position.x << "," << p.position.y << "," << p.heading.degrees() << "\n";
  }
  return out.str();
}

namespace {

std::vector<double> parse_numbers(std::string_view line, char sep) {
  std::vector<double> out;
  while (!line.empty()) {
    while (!line.empty() && (line.front() == ' ' || line.front() == sep)) line.remove_prefix(1);
    if (line.empty()) break;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc()) throw ParseError("truth trace: bad number in \"" + std::string(line) + "\"");
    out.push_back(v);
    line.remove_prefix(static_cast<std::size_t>(ptr - line.data()));
  }
  return out;
}

}  // namespace

TruthTrace load_truth(std::string_view text) {
  TruthTrace truth;
  bool seen_format = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    if (!seen_format) {
      if (line != "format: " + std::string(kTruthFormat)) {
        throw ParseError("truth trace must start with \"format: palms-truth/1\"");
      }
      seen_format = true;
      continue;
    }
    if (line.rfind("observation_point:", 0) == 0) {
      const auto v = parse_numbers(line.substr(18), ' ');
      if (v.size() != 2) throw ParseError("truth trace: bad observation_point");
      truth.observation_point = {v[0], v[1]};
      continue;
    }
    if (line.rfind("true_theta_deg:", 0) == 0) {
      const auto v = parse_numbers(line.substr(15), ' ');
      if (v.size() != 1) throw ParseError("truth trace: bad true_theta_deg");
      truth.true_theta = Angle::from_degrees(v[0]);
      continue;
    }
    if (line.front() == 't') continue;
    const auto v = parse_numbers(line, ',');
    if (v.size() != 4) throw ParseError("truth trace: expected 4 columns");
    truth.poses.push_back({v[0], {v[1], v[2]}, Angle::from_degrees(v[3])});
  }
  if (!seen_format) throw ParseError("truth trace must start with \"format: palms-truth/1\"");
  return truth;
}

}  // namespace palms
