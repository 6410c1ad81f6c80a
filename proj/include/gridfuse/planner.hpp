#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>
#include <vector>

#include "gridfuse/error.hpp"
#include "gridfuse/grid.hpp"
#include "gridfuse/random.hpp"

namespace gridfuse {

struct PlanQuery {
  CellIndex start;
  CellIndex goal;
};

struct PlanOutcome {
  bool found = false;
  std::vector<CellIndex> path;
  double length = 0.0;     // in cells
  double clearance = 0.0;  // in cells
};

struct PlannerOptions {
  double obstacle_threshold = 0.5;  // obstacle iff p > threshold
};

[[nodiscard]] inline std::vector<bool> obstacle_mask(const ProbabilityGrid& probs, const PlannerOptions& opt = {}) {
  std::vector<bool> m(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) m[k] = probs.at_linear(k) > opt.obstacle_threshold;
  return m;
}

// Exact Euclidean distance (in cells) from every cell to the nearest
// obstacle, by two passes of the 1D lower-envelope transform. With no
// obstacles every cell gets the grid diagonal.
[[nodiscard]] inline std::vector<double> distance_transform(const std::vector<bool>& obstacles, int width,
                                                            int height) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto W = static_cast<std::size_t>(width);
  const auto H = static_cast<std::size_t>(height);
  std::vector<double> f(W * H);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = obstacles[k] ? 0.0 : inf;

  auto pass = [&](std::size_t n, auto get, auto set) {
    std::vector<double> g(n), d(n), z(n + 1);
    std::vector<std::size_t> v(n);
    for (std::size_t q = 0; q < n; ++q) g[q] = get(q);
    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
      if (g[q] == inf) continue;
      if (!any) {
        v[0] = q;
        z[0] = -inf;
        z[1] = inf;
        any = true;
        continue;
      }
      double s = 0.0;
      for (;;) {
        const double p = static_cast<double>(v[k]);
        const double qd = static_cast<double>(q);
        s = ((g[q] + qd * qd) - (g[v[k]] + p * p)) / (2.0 * qd - 2.0 * p);
        if (s <= z[k] && k > 0) {
          --k;
          continue;
        }
        break;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
    }
    if (!any) return;
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
      while (z[k + 1] < static_cast<double>(q)) ++k;
      const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
      d[q] = dq * dq + g[v[k]];
    }
    for (std::size_t q = 0; q < n; ++q) set(q, d[q]);
  };

  for (std::size_t i = 0; i < W; ++i) {
    pass(H, [&](std::size_t j) { return f[j * W + i]; }, [&](std::size_t j, double val) { f[j * W + i] = val; });
  }
  for (std::size_t j = 0; j < H; ++j) {
    pass(W, [&](std::size_t i) { return f[j * W + i]; }, [&](std::size_t i, double val) { f[j * W + i] = val; });
  }
  const double sentinel = std::hypot(static_cast<double>(width), static_cast<double>(height));
  for (double& x : f) x = x == inf ? sentinel : std::sqrt(x);
  return f;
}

[[nodiscard]] inline double clearance(const std::vector<double>& dt, const GridSpec& spec,
                                      const std::vector<CellIndex>& path) {
  if (path.empty()) throw DomainError("clearance needs a non-empty path");
  double c = std::numeric_limits<double>::infinity();
  for (const CellIndex p : path) c = std::min(c, dt[spec.linear(p)]);
  return c;
}

[[nodiscard]] inline double clearance(const ProbabilityGrid& probs, const std::vector<CellIndex>& path,
                                      const PlannerOptions& opt = {}) {
  const GridSpec& s = probs.spec();
  return clearance(distance_transform(obstacle_mask(probs, opt), s.width_cells, s.height_cells), s, path);
}

namespace detail {
struct OpenEntry {
  double f;
  double h;
  std::size_t index;
  bool operator>(const OpenEntry& o) const { return std::tie(f, h, index) > std::tie(o.f, o.h, o.index); }
};
}  // namespace detail

// 8-connected A* with Euclidean step costs and heuristic; diagonal moves may
// cut corners. Ties are broken by f, then h, then row-major index.
[[nodiscard]] inline PlanOutcome plan_astar(const std::vector<bool>& obstacles, const GridSpec& spec,
                                            const PlanQuery& q) {
  if (!spec.contains(q.start) || !spec.contains(q.goal)) throw DomainError("plan query outside the grid");
  PlanOutcome out;
  const std::size_t s = spec.linear(q.start);
  const std::size_t g = spec.linear(q.goal);
  if (obstacles[s] || obstacles[g]) return out;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(spec.cell_count(), inf);
  std::vector<std::size_t> parent(spec.cell_count(), SIZE_MAX);
  std::vector<bool> closed(spec.cell_count(), false);
  auto h = [&](CellIndex c) { return std::hypot(double(c.i - q.goal.i), double(c.j - q.goal.j)); };

  std::priority_queue<detail::OpenEntry, std::vector<detail::OpenEntry>, std::greater<>> open;
  cost[s] = 0.0;
  open.push({h(q.start), h(q.start), s});
  while (!open.empty()) {
    const detail::OpenEntry top = open.top();
    open.pop();
    if (closed[top.index]) continue;
    closed[top.index] = true;
    if (top.index == g) break;
    const CellIndex c = spec.unlinear(top.index);
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0) continue;
        const CellIndex n{c.i + di, c.j + dj};
        if (!spec.contains(n)) continue;
        const std::size_t nk = spec.linear(n);
        if (obstacles[nk] || closed[nk]) continue;
        const double step = (di != 0 && dj != 0) ? std::numbers::sqrt2 : 1.0;
        const double nc = cost[top.index] + step;
        if (nc < cost[nk]) {
          cost[nk] = nc;
          parent[nk] = top.index;
          const double hn = h(n);
          open.push({nc + hn, hn, nk});
        }
      }
    }
  }
  if (!closed[g]) return out;
  out.found = true;
  out.length = cost[g];
  for (std::size_t k = g; k != SIZE_MAX; k = parent[k]) out.path.push_back(spec.unlinear(k));
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

[[nodiscard]] inline PlanOutcome plan_astar(const ProbabilityGrid& probs, const PlanQuery& q,
                                            const PlannerOptions& opt = {}) {
  const GridSpec& s = probs.spec();
  const auto obstacles = obstacle_mask(probs, opt);
  PlanOutcome out = plan_astar(obstacles, s, q);
  if (out.found) out.clearance = clearance(distance_transform(obstacles, s.width_cells, s.height_cells), s, out.path);
  return out;
}

// Start/goal pairs on cells free in the ground truth.
[[nodiscard]] inline std::vector<PlanQuery> sample_queries(const OccupancyGrid<std::uint8_t>& truth, int n,
                                                           std::uint64_t seed, int budget = 1000000) {
  Rng rng = make_rng(seed, "plan-queries");
  const GridSpec& s = truth.spec();
  std::vector<PlanQuery> out;
  auto draw = [&]() -> CellIndex {
    return {static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.width_cells))),
            static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.height_cells)))};
  };
  while (static_cast<int>(out.size()) < n) {
    if (--budget < 0) throw GenerationError("could not sample enough free start/goal pairs");
    const CellIndex a = draw();
    const CellIndex b = draw();
    if (a == b || truth[a] || truth[b]) continue;
    out.push_back({a, b});
  }
  return out;
}

struct DownstreamReport {
  std::size_t queries = 0;
  std::vector<double> success_rate;  // per arm
  double shared_success = 0.0;
  double path_equiv_rate = 0.0;  // identical paths among shared successes
  double clearance_delta_median = 0.0;
  double clearance_delta_mean = 0.0;
  double frac_below_1cell = 0.0;
  bool ground_truth_reference = false;  // deltas measured on the true map
  double own_map_delta_median = 0.0;    // deltas measured on each arm's map
  double own_map_delta_mean = 0.0;
};

namespace detail {
inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}
inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
}  // namespace detail

// Compares arm 0 against arm 1; every arm contributes its success rate.
// With a reference map, clearance deltas are distances on that map; without
// one, each path is measured on its own arm's map.
[[nodiscard]] inline DownstreamReport compare_arms(const std::vector<ProbabilityGrid>& grids,
                                                   const std::vector<PlanQuery>& queries,
                                                   const PlannerOptions& opt = {},
                                                   const OccupancyGrid<std::uint8_t>* reference = nullptr) {
  if (grids.size() < 2) throw DomainError("compare_arms needs at least two arms");
  for (const auto& g : grids) {
    if (!(g.spec() == grids.front().spec())) throw DomainError("compare_arms needs identical grid geometry");
  }
  const GridSpec& s = grids.front().spec();
  if (reference && !(reference->spec() == s)) throw DomainError("reference map geometry differs from the arms");
  std::vector<std::vector<bool>> masks;
  std::vector<std::vector<double>> dts;
  for (const auto& g : grids) {
    masks.push_back(obstacle_mask(g, opt));
    dts.push_back(distance_transform(masks.back(), s.width_cells, s.height_cells));
  }
  std::vector<double> ref_dt;
  if (reference) {
    std::vector<bool> m(reference->size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = reference->at_linear(k) != 0;
    ref_dt = distance_transform(m, s.width_cells, s.height_cells);
  }

  DownstreamReport r;
  r.queries = queries.size();
  r.ground_truth_reference = reference != nullptr;
  r.success_rate.assign(grids.size(), 0.0);
  std::size_t shared = 0;
  std::size_t equal_paths = 0;
  std::vector<double> deltas;
  std::vector<double> own;
  for (const PlanQuery& q : queries) {
    std::vector<PlanOutcome> outs;
    bool all = true;
    for (std::size_t a = 0; a < grids.size(); ++a) {
      outs.push_back(plan_astar(masks[a], s, q));
      if (outs.back().found) {
        outs.back().clearance = clearance(dts[a], s, outs.back().path);
        r.success_rate[a] += 1.0;
      } else {
        all = false;
      }
    }
    if (!all) continue;
    ++shared;
    equal_paths += outs[0].path == outs[1].path;
    own.push_back(std::abs(outs[0].clearance - outs[1].clearance));
    deltas.push_back(reference ? std::abs(clearance(ref_dt, s, outs[0].path) - clearance(ref_dt, s, outs[1].path))
                               : own.back());
  }
  const double nq = static_cast<double>(std::max<std::size_t>(1, queries.size()));
  for (double& x : r.success_rate) x /= nq;
  r.shared_success = static_cast<double>(shared) / nq;
  if (!deltas.empty()) {
    r.path_equiv_rate = static_cast<double>(equal_paths) / static_cast<double>(shared);
    r.clearance_delta_median = detail::median_of(deltas);
    r.clearance_delta_mean = detail::mean_of(deltas);
    r.frac_below_1cell = static_cast<double>(std::count_if(deltas.begin(), deltas.end(), [](double d) { return d < 1.0; })) /
                         static_cast<double>(deltas.size());
    r.own_map_delta_median = detail::median_of(own);
    r.own_map_delta_mean = detail::mean_of(own);
  }
  return r;
}

}  // namespace gridfuse
