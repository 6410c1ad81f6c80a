#pragma once

// Lidar inverse sensor model: grid traversal of each beam, distance/incidence
// decay of the per-observation log-odds, and matched belief masses so that
// every emitted observation carries the same decision probability for both
// fusion families.

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "gridfuse/fusion.hpp"
#include "gridfuse/grid.hpp"

namespace gridfuse {

struct LidarConfig {
  int num_rays = 180;
  double fov = 2.0 * std::numbers::pi;
  double max_range = 15.0;
  double range_noise_sigma = 0.02;

  // Bearing of beam k relative to the sensor heading. A full circle spaces
  // beams fov/n apart; a partial fan spans [-fov/2, +fov/2] inclusive.
  [[nodiscard]] double beam_angle(int k) const {
    if (num_rays <= 1) return 0.0;
    if (fov >= 2.0 * std::numbers::pi - 1e-9) return -std::numbers::pi + k * fov / num_rays;
    return -0.5 * fov + k * fov / (num_rays - 1);
  }
};

struct SensorDecay {
  double lambda_d = 0.1;      // per metre
  double lambda_alpha = 0.5;  // per radian
  bool enabled = false;
};

enum class ObservationKind { Free, Occupied };

struct ScanObservation {
  CellIndex cell;
  ObservationKind kind = ObservationKind::Free;
  double l = 0.0;  // effective log-odds of this single observation
  BBA bba;         // matched masses under the run's transform

  friend bool operator==(const ScanObservation&, const ScanObservation&) = default;
};

// Cells strictly between the sensor cell and the endpoint cell, in traversal
// order, plus the endpoint cell itself. `endpoint` is absent when the beam
// leaves the grid before reaching its end.
struct RayCells {
  std::vector<CellIndex> traversed;
  std::optional<CellIndex> endpoint;
};

namespace detail {
inline int floor_index(double v, double origin, double res) {
  return static_cast<int>(std::floor((v - origin) / res));
}
}  // namespace detail

// Exact grid walk from the sensor position along `angle` for `range` metres.
// Corner crossings step diagonally. Precondition: the origin lies
// inside the grid.
[[nodiscard]] inline RayCells raycast_cells(const GridSpec& spec, const Pose2D& origin,
                                            double angle, double range) {
  RayCells out;
  const auto start = world_to_cell(spec, origin.x, origin.y);
  if (!start) return out;

  const double dx = std::cos(angle) * range;
  const double dy = std::sin(angle) * range;
  const double ex = origin.x + dx;
  const double ey = origin.y + dy;
  const CellIndex goal{detail::floor_index(ex, spec.origin_x, spec.resolution),
                       detail::floor_index(ey, spec.origin_y, spec.resolution)};

  CellIndex cur = *start;
  int remaining_i = std::abs(goal.i - cur.i);
  int remaining_j = std::abs(goal.j - cur.j);
  const int step_i = goal.i > cur.i ? 1 : -1;
  const int step_j = goal.j > cur.j ? 1 : -1;

  // Parametric distance (t in [0, 1]) to the next vertical / horizontal boundary.
  // Crossings closer than kCornerTol count as passing through the corner.
  constexpr double kCornerTol = 1e-12;
  const double inf = std::numeric_limits<double>::infinity();
  auto first_boundary = [&](double o, double d, int idx, int step, double grid_origin) {
    if (d == 0.0) return inf;
    const double boundary = grid_origin + (step > 0 ? idx + 1 : idx) * spec.resolution;
    return (boundary - o) / d;
  };
  double t_max_x = first_boundary(origin.x, dx, cur.i, step_i, spec.origin_x);
  double t_max_y = first_boundary(origin.y, dy, cur.j, step_j, spec.origin_y);
  const double t_delta_x = dx != 0.0 ? spec.resolution / std::abs(dx) : inf;
  const double t_delta_y = dy != 0.0 ? spec.resolution / std::abs(dy) : inf;

  out.traversed.reserve(static_cast<std::size_t>(remaining_i + remaining_j));
  while (remaining_i > 0 || remaining_j > 0) {
    bool move_x = false;
    bool move_y = false;
    if (remaining_j == 0) {
      move_x = true;
    } else if (remaining_i == 0) {
      move_y = true;
    } else if (t_max_x < t_max_y - kCornerTol) {
      move_x = true;
    } else if (t_max_y < t_max_x - kCornerTol) {
      move_y = true;
    } else {
      move_x = move_y = true;
    }
    if (move_x) {
      cur.i += step_i;
      t_max_x += t_delta_x;
      --remaining_i;
    }
    if (move_y) {
      cur.j += step_j;
      t_max_y += t_delta_y;
      --remaining_j;
    }
    if (!spec.contains(cur)) return out;
    if (remaining_i == 0 && remaining_j == 0) break;
    out.traversed.push_back(cur);
  }
  out.endpoint = cur;
  return out;
}

[[nodiscard]] inline double effective_logodds(ObservationKind kind, double d, double alpha,
                                              const FusionParams& params,
                                              const SensorDecay& decay) {
  const double base = kind == ObservationKind::Occupied ? params.l_occ : params.l_free;
  if (!decay.enabled) return base;
  return base * std::exp(-decay.lambda_d * d) * std::exp(-decay.lambda_alpha * alpha);
}

// One beam of a scan: bearing in the world frame, measured range, whether the
// beam struck a surface before max range, and the incidence angle at the hit.
struct BeamReading {
  double angle = 0.0;
  double range = 0.0;
  bool hit = false;
  double incidence = 0.0;
};

struct ScanContext {
  const GridSpec& spec;
  Pose2D pose;
  std::span<const BeamReading> beams;
  double max_range = 15.0;
  const FusionParams& params;  // l_occ, l_free and matching are read
  const SensorDecay& decay;
};

// One observation per traversed cell per beam (no deduplication across beams).
[[nodiscard]] inline std::vector<ScanObservation> observe(const ScanContext& ctx) {
  std::vector<ScanObservation> out;
  auto emit = [&](CellIndex c, ObservationKind kind, double alpha) {
    const Point2 center = cell_center(ctx.spec, c);
    const double d = std::hypot(center.x - ctx.pose.x, center.y - ctx.pose.y);
    const double l = effective_logodds(kind, d, alpha, ctx.params, ctx.decay);
    out.push_back({c, kind, l, matched_masses(l, ctx.params.matching)});
  };
  for (const BeamReading& beam : ctx.beams) {
    if (!(beam.range >= 0.0)) continue;
    const bool hit = beam.hit && beam.range < ctx.max_range;
    const double range = std::min(beam.range, ctx.max_range);
    const RayCells cells = raycast_cells(ctx.spec, ctx.pose, beam.angle, range);
    const double alpha = hit ? beam.incidence : 0.0;
    for (const CellIndex c : cells.traversed) emit(c, ObservationKind::Free, alpha);
    if (cells.endpoint) {
      if (hit) {
        emit(*cells.endpoint, ObservationKind::Occupied, alpha);
      } else if (range > 0.0) {
        emit(*cells.endpoint, ObservationKind::Free, alpha);
      }
    }
  }
  return out;
}

}  // namespace gridfuse
