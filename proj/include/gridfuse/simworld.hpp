#pragma once

// Procedural 2D worlds, perimeter patrols, lidar simulation against the
// current world state, odometry drift with rendezvous alignment, and the
// seeded run loop that feeds one observation stream to every fusion arm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "gridfuse/arm.hpp"
#include "gridfuse/error.hpp"
#include "gridfuse/geometry.hpp"
#include "gridfuse/grid.hpp"
#include "gridfuse/random.hpp"
#include "gridfuse/sensor.hpp"

namespace gridfuse {

struct EnvParams {
  double width = 50.0;
  double height = 50.0;
  int rooms = 3;
  int corridors = 4;
  int static_obstacles = 5;
  int dynamic_obstacles = 3;
  double dynamic_speed = 0.5;
  // Rooms, obstacles and moving objects stay this far inside the outer walls,
  // which leaves the patrol rings clear.
  double interior_margin = 2.5;
  double wall_thickness = 0.2;
  double corridor_width = 1.2;
  double dynamic_size = 0.5;
  int retry_budget = 2000;
};

[[nodiscard]] inline EnvParams single_agent_env() { return EnvParams{}; }

[[nodiscard]] inline EnvParams multi_robot_env() {
  EnvParams p;
  p.width = p.height = 20.0;
  p.rooms = 1;
  p.corridors = 0;
  p.dynamic_speed = 0.3;
  p.interior_margin = 4.0;
  return p;
}

struct DynamicObstacle {
  geom::Polygon shape;
  Point2 direction;  // unit vector
  double speed = 0.0;
};

struct Environment {
  double width = 0.0;
  double height = 0.0;
  std::vector<geom::Polygon> walls;  // outer walls, room walls, corridor walls
  std::vector<geom::Polygon> static_obstacles;
  std::vector<DynamicObstacle> dynamic_obstacles;
  geom::Box interior;  // region confining dynamic obstacles
};

namespace detail {

struct RoomPlan {
  geom::Box box;
  std::vector<std::vector<double>> doors = std::vector<std::vector<double>>(4);  // per side
};

// Sides: 0 bottom, 1 right, 2 top, 3 left.
inline double side_length(const geom::Box& b, int side) {
  return side % 2 == 0 ? b.max_x - b.min_x : b.max_y - b.min_y;
}

// Split [lo, hi] into solid intervals around gaps of width w centred at `gaps`.
inline std::vector<std::pair<double, double>> solid_spans(double lo, double hi, std::vector<double> gaps,
                                                          double w) {
  std::sort(gaps.begin(), gaps.end());
  std::vector<std::pair<double, double>> out;
  double cur = lo;
  for (double g : gaps) {
    const double a = g - 0.5 * w;
    const double b = g + 0.5 * w;
    if (a > cur) out.emplace_back(cur, a);
    cur = std::max(cur, b);
  }
  if (hi > cur) out.emplace_back(cur, hi);
  return out;
}

inline void emit_room_walls(const RoomPlan& r, double t, double door, std::vector<geom::Polygon>& walls) {
  const geom::Box& b = r.box;
  for (auto [a, c] : solid_spans(b.min_x, b.max_x, r.doors[0], door))
    walls.push_back(geom::rectangle(a, b.min_y, c, b.min_y + t));
  for (auto [a, c] : solid_spans(b.min_x, b.max_x, r.doors[2], door))
    walls.push_back(geom::rectangle(a, b.max_y - t, c, b.max_y));
  for (auto [a, c] : solid_spans(b.min_y + t, b.max_y - t, r.doors[3], door))
    walls.push_back(geom::rectangle(b.min_x, a, b.min_x + t, c));
  for (auto [a, c] : solid_spans(b.min_y + t, b.max_y - t, r.doors[1], door))
    walls.push_back(geom::rectangle(b.max_x - t, a, b.max_x, c));
}

// Absolute door coordinate along a side (x for bottom/top, y for left/right).
inline double door_coordinate(const geom::Box& b, int side, double offset) {
  return (side % 2 == 0 ? b.min_x : b.min_y) + offset;
}

// Footprint of a corridor leaving `side` of `b` at `coord` with length `len`.
inline geom::Box corridor_box(const geom::Box& b, int side, double coord, double half, double len) {
  switch (side) {
    case 0: return {coord - half, b.min_y - len, coord + half, b.min_y};
    case 1: return {b.max_x, coord - half, b.max_x + len, coord + half};
    case 2: return {coord - half, b.max_y, coord + half, b.max_y + len};
    default: return {b.min_x - len, coord - half, b.min_x, coord + half};
  }
}

inline void emit_corridor_walls(const geom::Box& c, int side, double t, std::vector<geom::Polygon>& walls) {
  if (side % 2 == 0) {
    walls.push_back(geom::rectangle(c.min_x, c.min_y, c.min_x + t, c.max_y));
    walls.push_back(geom::rectangle(c.max_x - t, c.min_y, c.max_x, c.max_y));
  } else {
    walls.push_back(geom::rectangle(c.min_x, c.min_y, c.max_x, c.min_y + t));
    walls.push_back(geom::rectangle(c.min_x, c.max_y - t, c.max_x, c.max_y));
  }
}

inline bool overlaps_any(const geom::Box& b, const std::vector<geom::Box>& others, double margin) {
  return std::any_of(others.begin(), others.end(), [&](const geom::Box& o) { return b.overlaps(o, margin); });
}

}  // namespace detail

[[nodiscard]] inline Environment generate_environment(std::uint64_t seed, const EnvParams& p) {
  if (!(p.width > 0.0 && p.height > 0.0)) throw GenerationError("environment bounds must be positive");
  if (p.rooms < 0 || p.corridors < 0 || p.static_obstacles < 0 || p.dynamic_obstacles < 0) {
    throw GenerationError("object counts must be non-negative");
  }
  if (p.corridors > 0 && p.rooms == 0) throw GenerationError("corridors need at least one room");

  Rng rng = make_rng(seed, "env");
  Environment env;
  env.width = p.width;
  env.height = p.height;
  const double m = p.interior_margin;
  env.interior = {m, m, p.width - m, p.height - m};
  if (env.interior.max_x - env.interior.min_x < 1.0 || env.interior.max_y - env.interior.min_y < 1.0) {
    throw GenerationError("interior margin leaves no room for structures");
  }
  const geom::Box& inner = env.interior;
  const double t = p.wall_thickness;

  env.walls.push_back(geom::rectangle(0.0, 0.0, p.width, t));
  env.walls.push_back(geom::rectangle(0.0, p.height - t, p.width, p.height));
  env.walls.push_back(geom::rectangle(0.0, t, t, p.height - t));
  env.walls.push_back(geom::rectangle(p.width - t, t, p.width, p.height - t));

  int budget = p.retry_budget;
  auto spend = [&](const char* what) {
    if (--budget < 0) throw GenerationError(std::string("retry budget exhausted placing ") + what);
  };

  const double span = std::min(inner.max_x - inner.min_x, inner.max_y - inner.min_y);
  const double side_lo = std::max(3.0, 0.15 * span);
  const double side_hi = std::max(3.5, 0.25 * span);
  std::vector<detail::RoomPlan> rooms;
  std::vector<geom::Box> footprints;
  while (static_cast<int>(rooms.size()) < p.rooms) {
    spend("rooms");
    const double w = uniform(rng, side_lo, side_hi);
    const double h = uniform(rng, side_lo, side_hi);
    if (w > inner.max_x - inner.min_x || h > inner.max_y - inner.min_y) continue;
    const double x0 = uniform(rng, inner.min_x, inner.max_x - w);
    const double y0 = uniform(rng, inner.min_y, inner.max_y - h);
    const geom::Box box{x0, y0, x0 + w, y0 + h};
    if (detail::overlaps_any(box, footprints, 1.5)) continue;
    rooms.push_back({box});
    footprints.push_back(box);
  }

  const double half = 0.5 * p.corridor_width + t;
  const double door_edge = t + 0.5 * p.corridor_width + 0.3;
  std::vector<std::pair<geom::Box, int>> corridors;
  for (int c = 0; c < p.corridors; ++c) {
    detail::RoomPlan& room = rooms[static_cast<std::size_t>(c % p.rooms)];
    for (;;) {
      spend("corridors");
      const int side = static_cast<int>(uniform_index(rng, 4));
      const double len_side = detail::side_length(room.box, side);
      if (len_side < 2.0 * door_edge) continue;
      const double offset = uniform(rng, door_edge, len_side - door_edge);
      const double coord = detail::door_coordinate(room.box, side, offset);
      const double len = uniform(rng, 1.5, 3.0);
      const geom::Box cb = detail::corridor_box(room.box, side, coord, half, len);
      if (!inner.contains(cb)) continue;
      bool clash = false;
      for (const auto& fp : footprints) {
        if (cb.overlaps(fp, 0.3) && !(fp.min_x == room.box.min_x && fp.min_y == room.box.min_y &&
                                      fp.max_x == room.box.max_x && fp.max_y == room.box.max_y)) {
          clash = true;
        }
      }
      const auto& doors = room.doors[static_cast<std::size_t>(side)];
      for (double d : doors) {
        if (std::abs(d - coord) < 2.0 * half + 0.3) clash = true;
      }
      if (clash) continue;
      room.doors[static_cast<std::size_t>(side)].push_back(coord);
      corridors.emplace_back(cb, side);
      footprints.push_back(cb);
      break;
    }
  }
  for (auto& room : rooms) {
    const bool has_door = std::any_of(room.doors.begin(), room.doors.end(), [](const auto& d) { return !d.empty(); });
    if (has_door) continue;
    const int side = static_cast<int>(uniform_index(rng, 4));
    const double len_side = detail::side_length(room.box, side);
    const double offset = uniform(rng, door_edge, std::max(door_edge, len_side - door_edge));
    room.doors[static_cast<std::size_t>(side)].push_back(detail::door_coordinate(room.box, side, offset));
  }
  for (const auto& room : rooms) detail::emit_room_walls(room, t, p.corridor_width, env.walls);
  for (const auto& [cb, side] : corridors) detail::emit_corridor_walls(cb, side, t, env.walls);

  const double scale = std::clamp(span / 45.0, 0.5, 1.0);
  while (static_cast<int>(env.static_obstacles.size()) < p.static_obstacles) {
    spend("static obstacles");
    const double radius = scale * uniform(rng, 0.4, 1.0);
    const Point2 c{uniform(rng, inner.min_x + radius, inner.max_x - radius),
                   uniform(rng, inner.min_y + radius, inner.max_y - radius)};
    std::vector<Point2> pts;
    for (int k = 0; k < 7; ++k) {
      const double a = uniform(rng, -std::numbers::pi, std::numbers::pi);
      const double r = radius * std::sqrt(uniform(rng, 0.3, 1.0));
      pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
    geom::Polygon hull = geom::convex_hull(pts);
    if (hull.vertices.size() < 3) continue;
    const geom::Box hb = hull.bounds();
    if (!inner.contains(hb) || detail::overlaps_any(hb, footprints, 0.5)) continue;
    footprints.push_back(hb);
    env.static_obstacles.push_back(std::move(hull));
  }

  std::vector<geom::Box> movers;
  while (static_cast<int>(env.dynamic_obstacles.size()) < p.dynamic_obstacles) {
    spend("dynamic obstacles");
    const double s = p.dynamic_size;
    const double x0 = uniform(rng, inner.min_x, inner.max_x - s);
    const double y0 = uniform(rng, inner.min_y, inner.max_y - s);
    const geom::Box box{x0, y0, x0 + s, y0 + s};
    if (detail::overlaps_any(box, footprints, 0.3) || detail::overlaps_any(box, movers, 0.3)) continue;
    const double a = uniform(rng, -std::numbers::pi, std::numbers::pi);
    movers.push_back(box);
    env.dynamic_obstacles.push_back({geom::rectangle(box.min_x, box.min_y, box.max_x, box.max_y),
                                     {std::cos(a), std::sin(a)}, p.dynamic_speed});
  }
  return env;
}

namespace detail {
inline bool collides_static(const Environment& env, const geom::Polygon& shape) {
  const geom::Box b = shape.bounds();
  auto hit = [&](const geom::Polygon& q) { return q.bounds().overlaps(b) && geom::intersects(shape, q); };
  return std::any_of(env.walls.begin(), env.walls.end(), hit) ||
         std::any_of(env.static_obstacles.begin(), env.static_obstacles.end(), hit);
}

inline bool inside_box(const geom::Box& outer, const geom::Polygon& shape) {
  constexpr double tol = 1e-9;
  return geom::Box{outer.min_x - tol, outer.min_y - tol, outer.max_x + tol, outer.max_y + tol}.contains(shape.bounds());
}
}  // namespace detail

// Linear motion for dt seconds. Obstacles bounce off the interior bounds and
// off static geometry; motion is split into sub-steps of at most 0.1 m so
// thin walls cannot be skipped.
inline void advance_dynamic_obstacles(Environment& env, double dt) {
  for (DynamicObstacle& ob : env.dynamic_obstacles) {
    const double dist = ob.speed * dt;
    if (!(dist > 0.0)) continue;
    const int sub = std::max(1, static_cast<int>(std::ceil(dist / 0.1)));
    const double step = dist / sub;
    for (int s = 0; s < sub; ++s) {
      const Point2 candidates[] = {ob.direction,
                                   {-ob.direction.x, ob.direction.y},
                                   {ob.direction.x, -ob.direction.y},
                                   {-ob.direction.x, -ob.direction.y}};
      bool moved = false;
      for (const Point2 dir : candidates) {
        geom::Polygon next = ob.shape.translated(geom::operator*(step, dir));
        if (!detail::inside_box(env.interior, next) || detail::collides_static(env, next)) continue;
        ob.shape = std::move(next);
        ob.direction = dir;
        moved = true;
        break;
      }
      if (!moved) ob.direction = {-ob.direction.x, -ob.direction.y};
    }
  }
}

struct WorldHit {
  double distance = 0.0;
  double incidence = 0.0;
};

// Nearest surface along the ray, or nothing within max_range.
[[nodiscard]] inline std::optional<WorldHit> cast_world_ray(const Environment& env, Point2 origin, double angle,
                                                            double max_range) {
  const Point2 dir{std::cos(angle), std::sin(angle)};
  std::optional<geom::RayHit> best;
  auto test = [&](const geom::Polygon& poly) {
    if (auto h = geom::ray_intersect(poly, origin, dir); h && (!best || h->distance < best->distance)) best = h;
  };
  for (const auto& w : env.walls) test(w);
  for (const auto& o : env.static_obstacles) test(o);
  for (const auto& d : env.dynamic_obstacles) test(d.shape);
  if (!best || best->distance >= max_range) return std::nullopt;
  return WorldHit{best->distance, geom::incidence_angle(dir, best->normal)};
}

// Beams are cast from the true pose; bearings are reported relative to the
// believed heading so that drift shows up in the map.
[[nodiscard]] inline std::vector<BeamReading> simulate_scan(const Environment& env, const Pose2D& truth,
                                                            double believed_theta, const LidarConfig& lidar,
                                                            Rng& noise) {
  std::vector<BeamReading> beams;
  beams.reserve(static_cast<std::size_t>(lidar.num_rays));
  for (int k = 0; k < lidar.num_rays; ++k) {
    const double bearing = lidar.beam_angle(k);
    const double eps = standard_normal(noise);
    BeamReading b;
    b.angle = normalize_angle(believed_theta + bearing);
    const auto hit = cast_world_ray(env, {truth.x, truth.y}, truth.theta + bearing, lidar.max_range);
    if (hit) {
      b.range = std::clamp(hit->distance + lidar.range_noise_sigma * eps, 0.0, lidar.max_range);
      b.hit = b.range < lidar.max_range;
      b.incidence = hit->incidence;
    } else {
      b.range = lidar.max_range;
    }
    beams.push_back(b);
  }
  return beams;
}

// Cells whose centre lies inside a wall or static obstacle.
[[nodiscard]] inline OccupancyGrid<std::uint8_t> rasterize_ground_truth(const Environment& env,
                                                                        const GridSpec& spec) {
  OccupancyGrid<std::uint8_t> gt(spec, 0);
  auto paint = [&](const geom::Polygon& poly) {
    const geom::Box b = poly.bounds();
    const int i0 = std::max(0, static_cast<int>(std::floor((b.min_x - spec.origin_x) / spec.resolution)));
    const int j0 = std::max(0, static_cast<int>(std::floor((b.min_y - spec.origin_y) / spec.resolution)));
    const int i1 = std::min(spec.width_cells - 1, static_cast<int>(std::floor((b.max_x - spec.origin_x) / spec.resolution)));
    const int j1 = std::min(spec.height_cells - 1, static_cast<int>(std::floor((b.max_y - spec.origin_y) / spec.resolution)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        if (poly.contains(cell_center(spec, {i, j}))) gt[{i, j}] = 1;
      }
    }
  };
  for (const auto& w : env.walls) paint(w);
  for (const auto& o : env.static_obstacles) paint(o);
  return gt;
}

struct PatrolConfig {
  double inset = 1.0;
  double start_phase = 0.0;  // fraction of the circuit
  double step_size = 0.384;
  int steps = 500;
  bool counter_clockwise = true;
};

[[nodiscard]] inline double patrol_perimeter(const PatrolConfig& p, double width, double height) {
  return 2.0 * (width - 2.0 * p.inset) + 2.0 * (height - 2.0 * p.inset);
}

// Pose after `step` moves along the rectangular circuit, heading along it.
[[nodiscard]] inline Pose2D patrol_pose(const PatrolConfig& p, double width, double height, int step) {
  const double w = width - 2.0 * p.inset;
  const double h = height - 2.0 * p.inset;
  const double per = 2.0 * (w + h);
  double s = std::fmod(p.start_phase * per + step * p.step_size, per);
  if (s < 0.0) s += per;
  if (!p.counter_clockwise) s = per - s;
  const double lo = p.inset;
  Pose2D pose;
  if (s < w) {
    pose = {lo + s, lo, 0.0};
  } else if (s < w + h) {
    pose = {lo + w, lo + (s - w), 0.5 * std::numbers::pi};
  } else if (s < 2.0 * w + h) {
    pose = {lo + w - (s - w - h), lo + h, std::numbers::pi};
  } else {
    pose = {lo, lo + h - (s - 2.0 * w - h), -0.5 * std::numbers::pi};
  }
  if (!p.counter_clockwise) pose.theta = normalize_angle(pose.theta + std::numbers::pi);
  return pose;
}

struct RobotConfig {
  PatrolConfig patrol;
  LidarConfig lidar;
  double odom_sigma_trans = 0.0;  // metres per step
  double odom_sigma_rot = 0.0;    // radians per step

  [[nodiscard]] Pose2D start_pose(double width, double height) const {
    return patrol_pose(patrol, width, height, 0);
  }
};

struct RunConfig {
  std::uint64_t seed = 42;
  EnvParams env;
  double resolution = 0.1;
  std::vector<RobotConfig> robots;
  std::vector<ArmSpec> arms;  // l_occ, l_free and matching must agree across arms
  SensorDecay decay;
  double rendezvous_distance = 2.5;
  double nominal_speed = 0.5;  // m/s, sets the tick duration
};

struct RunResult {
  GridSpec spec;
  std::vector<ArmSpec> arms;
  std::vector<ArmGrid> grids;  // fused across robots, one per arm
  OccupancyGrid<std::uint8_t> ground_truth;
  std::vector<std::uint32_t> observation_counts;
  int rendezvous_events = 0;
};

using ObservationTap = std::function<void(std::size_t robot, std::span<const ScanObservation>)>;

namespace detail {

inline FusionParams sensor_params(const std::vector<ArmSpec>& arms) {
  if (arms.empty()) throw Error("run needs at least one fusion arm");
  const FusionParams& ref = arms.front().params;
  for (const ArmSpec& a : arms) {
    if (a.params.l_occ != ref.l_occ || a.params.l_free != ref.l_free || a.params.matching != ref.matching) {
      throw Error("all arms must share the sensor model (l_occ, l_free, matching)");
    }
  }
  return ref;
}

inline RunResult simulate(const RunConfig& run, const ObservationTap& tap) {
  if (run.robots.empty()) throw Error("run needs at least one robot");
  const FusionParams sensor = sensor_params(run.arms);
  Environment env = generate_environment(run.seed, run.env);
  const GridSpec spec(static_cast<int>(std::lround(run.env.width / run.resolution)),
                      static_cast<int>(std::lround(run.env.height / run.resolution)), run.resolution);

  const std::size_t R = run.robots.size();
  std::vector<std::vector<ArmGrid>> maps(R);
  for (auto& m : maps) {
    for (const ArmSpec& a : run.arms) m.emplace_back(spec, a.params);
  }

  std::vector<Rng> range_noise;
  std::vector<Rng> odometry;
  std::vector<Rng> alignment;
  for (std::size_t r = 0; r < R; ++r) {
    range_noise.push_back(make_rng(run.seed, "range-noise", r));
    odometry.push_back(make_rng(run.seed, "odometry", r));
    alignment.push_back(make_rng(run.seed, "alignment", r));
  }

  int horizon = 0;
  for (const auto& rc : run.robots) {
    if (!(rc.patrol.step_size > 0.0)) throw Error("patrol step size must be positive");
    horizon = std::max(horizon, rc.patrol.steps);
  }
  const double dt = run.robots.front().patrol.step_size / run.nominal_speed;

  std::vector<Pose2D> truth(R);
  std::vector<Pose2D> belief(R);
  std::vector<int> last_fix(R, -2);
  int events = 0;

  auto drifting = [](const RobotConfig& rc) { return rc.odom_sigma_trans > 0.0 || rc.odom_sigma_rot > 0.0; };

  for (int t = 0; t < horizon; ++t) {
    if (t > 0) advance_dynamic_obstacles(env, dt);
    for (std::size_t r = 0; r < R; ++r) {
      const RobotConfig& rc = run.robots[r];
      if (t >= rc.patrol.steps) continue;
      const Pose2D now = patrol_pose(rc.patrol, env.width, env.height, t);
      if (t == 0 || !drifting(rc)) {
        belief[r] = now;
      } else {
        const Pose2D odo = relative_pose(truth[r], now);
        const Pose2D noise{rc.odom_sigma_trans * standard_normal(odometry[r]),
                           rc.odom_sigma_trans * standard_normal(odometry[r]),
                           rc.odom_sigma_rot * standard_normal(odometry[r])};
        belief[r] = compose_pose(belief[r], compose_pose(odo, noise));
      }
      truth[r] = now;

      const auto beams = simulate_scan(env, now, belief[r].theta, rc.lidar, range_noise[r]);
      const ScanContext ctx{spec, belief[r], beams, rc.lidar.max_range, sensor, run.decay};
      const auto obs = observe(ctx);
      if (tap) tap(r, obs);
      for (ArmGrid& g : maps[r]) g.integrate(obs);
    }

    for (std::size_t a = 0; a < R; ++a) {
      for (std::size_t b = a + 1; b < R; ++b) {
        if (t >= run.robots[a].patrol.steps || t >= run.robots[b].patrol.steps) continue;
        if (t - last_fix[a] < 2 || t - last_fix[b] < 2) continue;
        if (std::hypot(truth[a].x - truth[b].x, truth[a].y - truth[b].y) >= run.rendezvous_distance) continue;
        ++events;
        for (std::size_t r : {a, b}) {
          last_fix[r] = t;
          const RobotConfig& rc = run.robots[r];
          if (!drifting(rc)) continue;
          const double st = rc.odom_sigma_trans / std::numbers::sqrt2;
          const double sr = rc.odom_sigma_rot / std::numbers::sqrt2;
          belief[r] = {truth[r].x + st * standard_normal(alignment[r]),
                       truth[r].y + st * standard_normal(alignment[r]),
                       normalize_angle(truth[r].theta + sr * standard_normal(alignment[r]))};
        }
      }
    }
  }

  RunResult out;
  out.spec = spec;
  out.arms = run.arms;
  out.ground_truth = rasterize_ground_truth(env, spec);
  out.rendezvous_events = events;
  out.grids = std::move(maps.front());
  for (std::size_t r = 1; r < R; ++r) {
    for (std::size_t a = 0; a < out.grids.size(); ++a) out.grids[a].fuse(maps[r][a]);
  }
  out.observation_counts = out.grids.front().counts();
  return out;
}

}  // namespace detail

[[nodiscard]] inline RunResult run_single_agent(const RunConfig& run, const ObservationTap& tap = {}) {
  if (run.robots.size() != 1) throw Error("single-agent run needs exactly one robot");
  return detail::simulate(run, tap);
}

[[nodiscard]] inline RunResult run_multi_robot(const RunConfig& run, const ObservationTap& tap = {}) {
  return detail::simulate(run, tap);
}

}  // namespace gridfuse
