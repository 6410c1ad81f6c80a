#pragma once

// CARMEN log ingestion and the scan-split protocol: a temporal train/test
// split, round-robin virtual robots mapped at the logged poses, cell-wise
// fusion, and test-scan evaluation sets.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gridfuse/arm.hpp"
#include "gridfuse/error.hpp"
#include "gridfuse/grid.hpp"
#include "gridfuse/metrics.hpp"
#include "gridfuse/sensor.hpp"
#include "gridfuse/stats.hpp"

namespace gridfuse {

struct CarmenScan {
  std::vector<double> ranges;
  Pose2D pose;  // corrected laser pose
  Pose2D odom;
  double timestamp = 0.0;
};

struct CarmenLog {
  std::vector<CarmenScan> scans;
  std::size_t warnings = 0;  // malformed FLASER records skipped
};

namespace detail {
inline bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last && std::isfinite(out);
}
}  // namespace detail

// Reads FLASER records:
//   FLASER n r_1 .. r_n x y theta odom_x odom_y odom_theta ipc_ts host logger_ts
// Other record types and comment lines are ignored.
[[nodiscard]] inline CarmenLog parse_carmen(std::istream& in) {
  CarmenLog log;
  std::string line;
  std::vector<std::string> tok;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    tok.clear();
    for (std::string t; ss >> t;) tok.push_back(std::move(t));
    if (tok.empty() || tok[0] != "FLASER") continue;

    double count = 0.0;
    if (tok.size() < 2 || !detail::parse_double(tok[1], count) || count < 0.0 || count != std::floor(count) ||
        tok.size() != static_cast<std::size_t>(count) + 11) {
      ++log.warnings;
      continue;
    }
    const auto n = static_cast<std::size_t>(count);
    CarmenScan scan;
    scan.ranges.resize(n);
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) ok = detail::parse_double(tok[2 + k], scan.ranges[k]) && scan.ranges[k] >= 0.0;
    double v[7];
    const std::size_t at = 2 + n;
    for (std::size_t k = 0; k < 6 && ok; ++k) ok = detail::parse_double(tok[at + k], v[k]);
    ok = ok && detail::parse_double(tok[at + 6], v[6]);
    if (!ok) {
      ++log.warnings;
      continue;
    }
    scan.pose = {v[0], v[1], normalize_angle(v[2])};
    scan.odom = {v[3], v[4], normalize_angle(v[5])};
    scan.timestamp = v[6];
    log.scans.push_back(std::move(scan));
  }
  if (log.scans.empty()) throw ParseError("log contains no FLASER records");
  return log;
}

struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  int R = 1;
  std::vector<std::vector<std::size_t>> subsequences;  // train positions dealt round-robin
};

// Temporal prefix split; train scans are dealt to R virtual robots in turn.
[[nodiscard]] inline SplitPlan split_scans(std::size_t n_scans, double ratio = 0.8, int R = 1) {
  if (n_scans < 5) throw DomainError("split needs at least five scans");
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("train ratio must lie in (0, 1)");
  if (R < 1) throw DomainError("scan split needs R >= 1");
  SplitPlan plan;
  plan.R = R;
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n_scans) + 1e-9));
  for (std::size_t k = 0; k < n_scans; ++k) (k < n_train ? plan.train : plan.test).push_back(k);
  plan.subsequences.resize(static_cast<std::size_t>(R));
  for (std::size_t k = 0; k < plan.train.size(); ++k) {
    plan.subsequences[k % static_cast<std::size_t>(R)].push_back(plan.train[k]);
  }
  return plan;
}

struct RealDataConfig {
  double max_range = 8.0;
  double fov = std::numbers::pi;
  double resolution = 0.1;
};

// Beam k of n spans the field of view starting at theta - fov/2. Ranges above
// max_range are free-space returns to max_range; zero ranges carry no data.
[[nodiscard]] inline std::vector<BeamReading> carmen_beams(const CarmenScan& scan, const RealDataConfig& cfg) {
  std::vector<BeamReading> beams;
  const std::size_t n = scan.ranges.size();
  beams.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = scan.ranges[k];
    if (r == 0.0) continue;
    const double offset = n > 1 ? -0.5 * cfg.fov + static_cast<double>(k) * cfg.fov / static_cast<double>(n - 1) : 0.0;
    BeamReading b;
    b.angle = normalize_angle(scan.pose.theta + offset);
    if (r < cfg.max_range) {
      b.range = r;
      b.hit = true;
    } else {
      b.range = cfg.max_range;
    }
    beams.push_back(b);
  }
  return beams;
}

// Trajectory bounding box grown by max_range on every side.
[[nodiscard]] inline GridSpec fit_grid(const std::vector<CarmenScan>& scans, const RealDataConfig& cfg) {
  double x0 = scans.front().pose.x, x1 = x0, y0 = scans.front().pose.y, y1 = y0;
  for (const auto& s : scans) {
    x0 = std::min(x0, s.pose.x);
    x1 = std::max(x1, s.pose.x);
    y0 = std::min(y0, s.pose.y);
    y1 = std::max(y1, s.pose.y);
  }
  const double res = cfg.resolution;
  const double ox = std::floor((x0 - cfg.max_range) / res) * res;
  const double oy = std::floor((y0 - cfg.max_range) / res) * res;
  const int w = static_cast<int>(std::ceil((x1 + cfg.max_range - ox) / res)) + 1;
  const int h = static_cast<int>(std::ceil((y1 + cfg.max_range - oy) / res)) + 1;
  return GridSpec(w, h, res, ox, oy);
}

[[nodiscard]] inline std::vector<ScanObservation> observe_carmen(const CarmenScan& scan, const GridSpec& spec,
                                                                 const FusionParams& sensor,
                                                                 const RealDataConfig& cfg) {
  static const SensorDecay kConstant{};
  const auto beams = carmen_beams(scan, cfg);
  return observe({spec, scan.pose, beams, cfg.max_range, sensor, kConstant});
}

struct RealDataResult {
  GridSpec spec;
  std::vector<ArmSpec> arms;
  std::vector<ArmGrid> grids;  // fused over virtual robots
  EvalSet eval;
};

[[nodiscard]] inline RealDataResult run_realdata(const std::vector<CarmenScan>& scans, const SplitPlan& plan,
                                                 const std::vector<ArmSpec>& arms,
                                                 const RealDataConfig& cfg = {}) {
  if (arms.empty()) throw Error("realdata run needs at least one arm");
  const FusionParams& sensor = arms.front().params;
  const GridSpec spec = fit_grid(scans, cfg);

  std::vector<ScanObservation> test_obs;
  for (std::size_t k : plan.test) {
    auto obs = observe_carmen(scans[k], spec, sensor, cfg);
    test_obs.insert(test_obs.end(), obs.begin(), obs.end());
  }
  EvalSet eval = build_eval_set(test_obs, spec);

  RealDataResult out{spec, arms, {}, std::move(eval)};
  for (const auto& sub : plan.subsequences) {
    std::vector<ArmGrid> robot;
    for (const ArmSpec& a : arms) robot.emplace_back(spec, a.params);
    for (std::size_t k : sub) {
      const auto obs = observe_carmen(scans[k], spec, sensor, cfg);
      for (ArmGrid& g : robot) g.integrate(obs);
    }
    if (out.grids.empty()) {
      out.grids = std::move(robot);
    } else {
      for (std::size_t a = 0; a < arms.size(); ++a) out.grids[a].fuse(robot[a]);
    }
  }
  if (out.grids.empty()) {
    for (const ArmSpec& a : arms) out.grids.emplace_back(spec, a.params);
  }
  return out;
}

// Per-cell contribution of `metric` for arm a minus arm b over the eval cells
// both arms observed. Sharpness contributes at boundary cells only.
[[nodiscard]] inline stats::DeltaField per_cell_delta(const ArmGrid& a, const ArmGrid& b, const EvalSet& ev,
                                                      Metric metric) {
  const GridSpec& spec = ev.spec;
  const ProbabilityGrid pa = a.probability_grid();
  const ProbabilityGrid pb = b.probability_grid();
  stats::DeltaField f{spec.width_cells, spec.height_cells, std::vector<double>(spec.cell_count(), 0.0),
                      std::vector<bool>(spec.cell_count(), false)};
  auto both_seen = [&](std::size_t k) { return a.counts()[k] > 0 && b.counts()[k] > 0; };
  if (metric == Metric::BoundarySharpness) {
    for (std::size_t k : ev.boundary_cells) {
      if (!both_seen(k)) continue;
      f.mask[k] = true;
      f.delta[k] = gradient_magnitude(pa, k) - gradient_magnitude(pb, k);
    }
    return f;
  }
  for (std::size_t e = 0; e < ev.eval_cells.size(); ++e) {
    const std::size_t k = ev.eval_cells[e];
    if (!both_seen(k)) continue;
    const double g = ev.labels[e];
    const double xa = pa.at_linear(k);
    const double xb = pb.at_linear(k);
    double d = 0.0;
    switch (metric) {
      case Metric::CellAccuracy: d = double((xa > 0.5) == (g == 1.0)) - double((xb > 0.5) == (g == 1.0)); break;
      case Metric::Brier: d = (xa - g) * (xa - g) - (xb - g) * (xb - g); break;
      case Metric::Entropy: d = binary_entropy_bits(xa) - binary_entropy_bits(xb); break;
      case Metric::BoundarySharpness: break;
    }
    f.mask[k] = true;
    f.delta[k] = d;
  }
  return f;
}

}  // namespace gridfuse
