#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "gridfuse/planner.hpp"

using namespace gridfuse;

namespace {

std::vector<bool> random_mask(std::mt19937_64& g, int w, int h, double density) {
  std::bernoulli_distribution b(density);
  std::vector<bool> m(static_cast<std::size_t>(w * h));
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = b(g);
  return m;
}

// Plain Dijkstra over the same 8-connected move set.
double dijkstra(const std::vector<bool>& mask, const GridSpec& s, CellIndex a, CellIndex b) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(s.cell_count(), inf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[s.linear(a)] = 0.0;
  pq.push({0.0, s.linear(a)});
  while (!pq.empty()) {
    auto [d, k] = pq.top();
    pq.pop();
    if (d > dist[k]) continue;
    const CellIndex c = s.unlinear(k);
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const CellIndex n{c.i + di, c.j + dj};
        if ((di == 0 && dj == 0) || !s.contains(n) || mask[s.linear(n)]) continue;
        const double nd = d + ((di && dj) ? std::numbers::sqrt2 : 1.0);
        if (nd < dist[s.linear(n)]) {
          dist[s.linear(n)] = nd;
          pq.push({nd, s.linear(n)});
        }
      }
    }
  }
  return dist[s.linear(b)];
}

double brute_distance(const std::vector<bool>& mask, int w, int h, int i, int j) {
  double best = std::hypot(double(w), double(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask[static_cast<std::size_t>(y * w + x)]) best = std::min(best, std::hypot(double(x - i), double(y - j)));
    }
  }
  return best;
}

}  // namespace

TEST(AStar, StraightLineOnEmptyGrid) {
  const ProbabilityGrid p(GridSpec(10, 10, 0.1), 0.5);
  const PlanOutcome o = plan_astar(p, {{0, 0}, {0, 5}});
  ASSERT_TRUE(o.found);
  EXPECT_DOUBLE_EQ(o.length, 5.0);
  ASSERT_EQ(o.path.size(), 6u);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(o.path[k], (CellIndex{0, k}));
}

TEST(AStar, EnclosedGoal) {
  ProbabilityGrid p(GridSpec(9, 9, 0.1), 0.0);
  for (int j = 3; j <= 5; ++j) {
    for (int i = 3; i <= 5; ++i) {
      if (i != 4 || j != 4) p[{i, j}] = 0.9;
    }
  }
  EXPECT_FALSE(plan_astar(p, {{0, 0}, {4, 4}}).found);
  EXPECT_FALSE(plan_astar(p, {{0, 0}, {3, 3}}).found);
}

TEST(AStar, MatchesDijkstraOnRandomGrids) {
  std::mt19937_64 g(31);
  const GridSpec s(20, 20, 0.1);
  int compared = 0;
  for (int k = 0; k < 50; ++k) {
    auto mask = random_mask(g, 20, 20, 0.3);
    const CellIndex a{static_cast<int>(g() % 20), static_cast<int>(g() % 20)};
    const CellIndex b{static_cast<int>(g() % 20), static_cast<int>(g() % 20)};
    mask[s.linear(a)] = false;
    mask[s.linear(b)] = false;
    const PlanOutcome o = plan_astar(mask, s, {a, b});
    const double ref = dijkstra(mask, s, a, b);
    ASSERT_EQ(o.found, std::isfinite(ref)) << k;
    if (!o.found) continue;
    ++compared;
    EXPECT_NEAR(o.length, ref, 1e-9) << k;
    for (std::size_t t = 1; t < o.path.size(); ++t) {
      EXPECT_LE(std::abs(o.path[t].i - o.path[t - 1].i), 1);
      EXPECT_LE(std::abs(o.path[t].j - o.path[t - 1].j), 1);
      EXPECT_FALSE(mask[s.linear(o.path[t])]);
    }
  }
  EXPECT_GT(compared, 20);
}

TEST(DistanceTransform, MatchesBruteForce) {
  std::mt19937_64 g(32);
  for (auto [w, h] : {std::pair{50, 50}, std::pair{17, 33}, std::pair{1, 9}}) {
    for (double density : {0.002, 0.05, 0.4}) {
      const auto mask = random_mask(g, w, h, density);
      const auto dt = distance_transform(mask, w, h);
      for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
          ASSERT_NEAR(dt[static_cast<std::size_t>(j * w + i)], brute_distance(mask, w, h, i, j), 1e-9);
        }
      }
    }
  }
}

TEST(Clearance, WallAdjacentAndObstacleFree) {
  ProbabilityGrid p(GridSpec(10, 10, 0.1), 0.0);
  for (int i = 0; i < 10; ++i) p[{i, 0}] = 1.0;
  EXPECT_DOUBLE_EQ(clearance(p, {{2, 1}, {3, 1}, {4, 2}}), 1.0);
  const ProbabilityGrid free(GridSpec(10, 10, 0.1), 0.2);
  EXPECT_DOUBLE_EQ(clearance(free, {{5, 5}}), std::hypot(10.0, 10.0));
}

TEST(Compare, IdenticalGridsAreEquivalent) {
  std::mt19937_64 g(33);
  const GridSpec s(30, 30, 0.1);
  ProbabilityGrid p(s, 0.0);
  OccupancyGrid<std::uint8_t> truth(s, 0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g() % 10 == 0) {
      p.at_linear(k) = 0.9;
      truth.at_linear(k) = 1;
    }
  }
  const auto q = sample_queries(truth, 100, 0);
  for (const auto& r : {compare_arms({p, p}, q), compare_arms({p, p}, q, {}, &truth)}) {
    EXPECT_DOUBLE_EQ(r.path_equiv_rate, 1.0);
    EXPECT_DOUBLE_EQ(r.clearance_delta_median, 0.0);
    EXPECT_DOUBLE_EQ(r.clearance_delta_mean, 0.0);
    EXPECT_DOUBLE_EQ(r.success_rate[0], r.success_rate[1]);
  }
}

TEST(Compare, FullyOccupiedArmNeverShares) {
  const GridSpec s(10, 10, 0.1);
  const OccupancyGrid<std::uint8_t> truth(s, 0);
  const auto q = sample_queries(truth, 50, 1);
  const auto r = compare_arms({ProbabilityGrid(s, 0.1), ProbabilityGrid(s, 1.0)}, q);
  EXPECT_DOUBLE_EQ(r.shared_success, 0.0);
  EXPECT_DOUBLE_EQ(r.success_rate[0], 1.0);
}

TEST(Queries, DeterministicAndFree) {
  const GridSpec s(20, 20, 0.1);
  OccupancyGrid<std::uint8_t> truth(s, 0);
  for (int i = 0; i < 20; ++i) truth[{i, 10}] = 1;
  const auto a = sample_queries(truth, 200, 0), b = sample_queries(truth, 200, 0);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].start, b[k].start);
    EXPECT_EQ(a[k].goal, b[k].goal);
    EXPECT_FALSE(a[k].start == a[k].goal);
    EXPECT_FALSE(truth[a[k].start] || truth[a[k].goal]);
  }
  const OccupancyGrid<std::uint8_t> full(s, 1);
  EXPECT_THROW((void)sample_queries(full, 1, 0, 1000), GenerationError);
}
