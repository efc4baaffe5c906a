#include <doctest.h>

#include <cmath>

#include "palms/synth.hpp"

using namespace palms;

namespace {

FloorPlan rect_plan(double w, double h) {
  FloorPlan p;
  p.walls = {Segment2D({0, 0}, {w, 0}), Segment2D({w, 0}, {w, h}), Segment2D({w, h}, {0, h}),
             Segment2D({0, h}, {0, 0})};
  p.bounds = {{0, 0}, {w, h}};
  return p;
}

TruthTrace straight_trace(double length, double step) {
  TruthTrace t;
  const int n = static_cast<int>(std::round(length / step));
  for (int i = 0; i <= n; ++i) t.poses.push_back({0.1 * i, Vec2{1.0 + step * i, 1.0}, Angle{}});
  return t;
}

}  // namespace

TEST_CASE("generated worlds are axis aligned, connected and deterministic") {
  for (auto gen : {WorldGenerator::corridor_grid, WorldGenerator::rooms_off_corridor}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      WorldSpec spec;
      spec.generator = gen;
      spec.extent_x = 50.0;
      spec.extent_y = 30.0;
      spec.seed = seed;
      const World w = generate_world(spec);
      for (const auto& s : w.plan.walls) CHECK((s.a().x == s.b().x || s.a().y == s.b().y));
      CHECK(count_free_components(w.plan) == 1);
      CHECK(w.corridors.total_length() > 0.0);
      CHECK(save_floorplan(generate_world(spec).plan) == save_floorplan(w.plan));
    }
  }
  WorldSpec a, b;
  b.seed = a.seed + 1;
  CHECK(save_floorplan(generate_world(a).plan) != save_floorplan(generate_world(b).plan));
  CHECK(world_generator_from_string(to_string(WorldGenerator::rooms_off_corridor)) ==
        WorldGenerator::rooms_off_corridor);
}

TEST_CASE("two closed rooms give two components") {
  FloorPlan p = rect_plan(10.0, 4.0);
  p.walls.emplace_back(Vec2{5.0, 0.0}, Vec2{5.0, 4.0});
  CHECK(count_free_components(p) == 2);
  p.walls.back() = Segment2D({5.0, 0.0}, {5.0, 3.0});
  CHECK(count_free_components(p) == 1);
}

TEST_CASE("nothing in range") {
  const FloorPlan room = rect_plan(10.0, 10.0);
  ScanSimParams params;
  params.max_range = 1.0;
  CHECK_THROWS_WITH_AS(raycast_scan(room, {5, 5}, Angle{}, params), "no vertical patches",
                       ValidationError);
  CHECK_THROWS_AS(raycast_scan(room, {0, 5}, Angle{}), std::invalid_argument);
}

TEST_CASE("scan heading shows up as the alignment angle") {
  WorldSpec spec;
  spec.seed = 3;
  const World w = generate_world(spec);
  const Angle fp = principal_orientation(w.plan.walls);
  for (double h : {30.0, -12.0, 44.0, 100.0}) {
    const Observation obs = raycast_scan(w.plan, w.corridors.point_at(11.0), Angle::from_degrees(h));
    const double theta = alignment_angle(principal_orientation(obs.segments), fp).signed_degrees();
    double expected = std::remainder(-h, 90.0);
    if (expected <= -45.0) expected += 90.0;
    CHECK(std::abs(theta - expected) < 0.5);
  }
}

TEST_CASE("walks stay in the corridors") {
  WorldSpec spec;
  spec.generator = WorldGenerator::rooms_off_corridor;
  spec.extent_x = 60.0;
  spec.extent_y = 24.0;
  spec.seed = 5;
  const World w = generate_world(spec);
  const CollisionIndex index(w.plan);
  const Vec2 start = w.corridors.point_at(3.0);
  const TruthTrace t = generate_walk(w, start, 147.0, 8);
  CHECK(std::abs(t.path_length() - 147.0) < 0.05 * 147.0);
  for (std::size_t i = 1; i < t.poses.size(); ++i) {
    CHECK_FALSE(index.path_hits_wall_brute_force(t.poses[i - 1].position, t.poses[i].position));
    CHECK(t.poses[i].t > t.poses[i - 1].t);
  }
  const TruthTrace again = generate_walk(w, start, 147.0, 8);
  REQUIRE(again.poses.size() == t.poses.size());
  bool same = true;
  for (std::size_t i = 0; i < t.poses.size(); ++i) same = same && again.poses[i].position == t.poses[i].position;
  CHECK(same);
  const TruthTrace other = generate_walk(w, start, 147.0, 9);
  CHECK_FALSE(other.poses.back().position == t.poses.back().position);

  CHECK_THROWS_AS(generate_walk(w, w.plan.walls[0].a(), 10.0, 1), std::invalid_argument);
}

TEST_CASE("clean odometry reproduces the truth") {
  WorldSpec spec;
  const World w = generate_world(spec);
  const TruthTrace t = generate_walk(w, w.corridors.point_at(4.0), 60.0, 2);
  OdometryNoise clean;
  clean.step_noise_fraction = 0.0;
  const auto steps = corrupt_odometry(t, 0.0, clean, 1);
  REQUIRE(steps.size() + 1 == t.poses.size());
  const auto path = dead_reckon(t.poses[0].position, steps);
  double worst = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) worst = std::max(worst, (path[i] - t.poses[i].position).norm());
  CHECK(worst < 1e-9);

  // A 90 degree frame offset rotates every delta.
  const auto turned = corrupt_odometry(t, 90.0, clean, 1);
  for (std::size_t i = 0; i < turned.size(); ++i) {
    const Vec2 truth = t.poses[i + 1].position - t.poses[i].position;
    CHECK((rotate(turned[i].delta, -kPi / 2.0) - truth).norm() < 1e-9);
    CHECK(turned[i].t == t.poses[i + 1].t);
  }
}

TEST_CASE("accumulated heading drift") {
  const double delta = deg_to_rad(5.0);
  const double length = 60.0;
  const TruthTrace t = straight_trace(length, 0.12);
  OdometryNoise noise;
  noise.step_noise_fraction = 0.0;
  noise.accumulated_drift_deg = 5.0;
  const auto path = dead_reckon(t.poses[0].position, corrupt_odometry(t, 0.0, noise, 1));
  const double err = (path.back() - t.poses.back().position).norm();
  // Heading error growing linearly to delta: the endpoint error integrates
  // (cos e - 1, sin e) over the path.
  const double expected = length * std::hypot(std::sin(delta) / delta - 1.0, (1.0 - std::cos(delta)) / delta);
  CHECK(err == doctest::Approx(expected).epsilon(0.02));
  CHECK(err <= 2.0 * std::sin(delta / 2.0) * length);

  // On a turning walk the same bound holds.
  WorldSpec spec;
  spec.seed = 6;
  const World w = generate_world(spec);
  const TruthTrace walk = generate_walk(w, w.corridors.point_at(2.0), 100.0, 4);
  const auto walked = dead_reckon(walk.poses[0].position, corrupt_odometry(walk, 0.0, noise, 1));
  CHECK((walked.back() - walk.poses.back().position).norm() <= 2.0 * std::sin(delta / 2.0) * walk.path_length());
}

TEST_CASE("per-step noise scales with step length") {
  const TruthTrace t = straight_trace(120.0, 0.12);
  OdometryNoise noise;
  const auto steps = corrupt_odometry(t, 0.0, noise, 7);
  double s2 = 0.0;
  for (const auto& s : steps) s2 += (s.delta - Vec2{0.12, 0.0}).dot(s.delta - Vec2{0.12, 0.0});
  const double per_axis = std::sqrt(s2 / (2.0 * static_cast<double>(steps.size())));
  CHECK(per_axis == doctest::Approx(0.01 * 0.12).epsilon(0.05));
}

TEST_CASE("truth trace round trip") {
  WorldSpec spec;
  const World w = generate_world(spec);
  TruthTrace t = generate_walk(w, w.corridors.point_at(4.0), 20.0, 2);
  t.true_theta = Angle::from_degrees(-12.5);
  const TruthTrace back = load_truth(save_truth(t));
  REQUIRE(back.poses.size() == t.poses.size());
  for (std::size_t i = 0; i < t.poses.size(); ++i) {
    CHECK(back.poses[i].t == t.poses[i].t);
    CHECK(back.poses[i].position == t.poses[i].position);
  }
  CHECK(back.observation_point == t.observation_point);
  CHECK(back.true_theta.signed_degrees() == doctest::Approx(-12.5));
  CHECK_THROWS_AS(load_truth("format: other\n"), ParseError);
}

TEST_CASE("reference trajectory from a known start") {
  const FloorPlan plan = rect_plan(30.0, 3.0);
  const TruthTrace t = straight_trace(20.0, 0.12);
  OdometryNoise clean;
  clean.step_noise_fraction = 0.0;
  const auto steps = corrupt_odometry(t, 20.0, clean, 1);
  FilterConfig cfg;
  cfg.n_particles = 300;
  const TruthTrace ref = truth_from_recorded(plan, steps, t.poses[0].position, Angle::from_degrees(-20.0), cfg);
  REQUIRE(ref.poses.size() == t.poses.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.poses.size(); ++i) {
    worst = std::max(worst, (ref.poses[i].position - t.poses[i].position).norm());
  }
  CHECK(worst < 0.1);
}
