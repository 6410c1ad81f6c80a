#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gridfuse/sensor.hpp"

using namespace gridfuse;

namespace {

using CellSet = std::set<std::pair<int, int>>;

CellSet walked(const RayCells& rc) {
  CellSet s;
  for (const CellIndex c : rc.traversed) s.insert({c.i, c.j});
  if (rc.endpoint) s.insert({rc.endpoint->i, rc.endpoint->j});
  return s;
}

// Cells whose open square overlaps the segment with positive length, found
// by Liang-Barsky clipping against every candidate square.
CellSet clipped(const GridSpec& g, double x0, double y0, double x1, double y1) {
  CellSet s;
  const double dx = x1 - x0, dy = y1 - y0;
  for (int j = 0; j < g.height_cells; ++j) {
    for (int i = 0; i < g.width_cells; ++i) {
      const double bx0 = g.origin_x + i * g.resolution, bx1 = bx0 + g.resolution;
      const double by0 = g.origin_y + j * g.resolution, by1 = by0 + g.resolution;
      double t0 = 0.0, t1 = 1.0;
      bool ok = true;
      auto clip = [&](double p, double q) {
        if (p == 0.0) {
          if (q < 0.0) ok = false;
          return;
        }
        const double r = q / p;
        if (p < 0.0) t0 = std::max(t0, r);
        else t1 = std::min(t1, r);
      };
      clip(-dx, x0 - bx0);
      clip(dx, bx1 - x0);
      clip(-dy, y0 - by0);
      clip(dy, by1 - y0);
      if (ok && t1 - t0 > 1e-9) s.insert({i, j});
    }
  }
  return s;
}

}  // namespace

TEST(Raycast, AxisAlignedExample) {
  const GridSpec g(20, 20, 0.1);
  const auto rc = raycast_cells(g, {0.05, 0.05, 0.0}, 0.0, 0.55);
  ASSERT_EQ(rc.traversed.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(rc.traversed[k], (CellIndex{k + 1, 0}));
  ASSERT_TRUE(rc.endpoint);
  EXPECT_EQ(*rc.endpoint, (CellIndex{6, 0}));
}

TEST(Raycast, ZeroLength) {
  const GridSpec g(10, 10, 0.1);
  const auto rc = raycast_cells(g, {0.35, 0.45, 0.0}, 1.0, 0.0);
  EXPECT_TRUE(rc.traversed.empty());
  ASSERT_TRUE(rc.endpoint);
  EXPECT_EQ(*rc.endpoint, (CellIndex{3, 4}));
}

TEST(Raycast, DiagonalMatchesSupersampledWalk) {
  const GridSpec g(40, 40, 0.1);
  const Pose2D o{0.05, 0.05, 0.0};
  const double range = 3.0;
  const auto rc = raycast_cells(g, o, std::numbers::pi / 4, range);
  CellSet oracle;
  const double step = g.resolution / 10.0;
  for (double s = 0.0; s <= range; s += step) {
    const double x = o.x + s * std::cos(std::numbers::pi / 4), y = o.y + s * std::sin(std::numbers::pi / 4);
    if (auto c = world_to_cell(g, x, y)) oracle.insert({c->i, c->j});
  }
  oracle.erase({0, 0});
  EXPECT_EQ(walked(rc), oracle);
}

TEST(Raycast, RandomRaysMatchExactClipping) {
  const GridSpec g(30, 30, 0.1);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.2, 2.8), ang(-std::numbers::pi, std::numbers::pi), len(0.0, 2.0);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const Pose2D o{pos(rng), pos(rng), 0.0};
    const double a = ang(rng), r = len(rng);
    const double ex = o.x + r * std::cos(a), ey = o.y + r * std::sin(a);
    if (ex < 0.0 || ey < 0.0 || ex >= 3.0 || ey >= 3.0) continue;
    const auto rc = raycast_cells(g, o, a, r);
    CellSet oracle = clipped(g, o.x, o.y, ex, ey);
    const auto start = *world_to_cell(g, o.x, o.y);
    oracle.erase({start.i, start.j});
    const auto end = *world_to_cell(g, ex, ey);
    oracle.insert({end.i, end.j});
    if (end == start) oracle = {{end.i, end.j}};
    EXPECT_EQ(walked(rc), oracle) << "ray " << k;
    CellSet unique(walked(rc));
    EXPECT_EQ(unique.size(), rc.traversed.size() + 1);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Raycast, ExitingRayHasNoEndpoint) {
  const GridSpec g(10, 10, 0.1);
  const auto rc = raycast_cells(g, {0.55, 0.55, 0.0}, 0.0, 5.0);
  EXPECT_FALSE(rc.endpoint);
  EXPECT_EQ(rc.traversed.size(), 4u);
}

TEST(Decay, EffectiveLogOdds) {
  FusionParams p;
  SensorDecay on{0.1, 0.5, true};
  SensorDecay off{};
  EXPECT_DOUBLE_EQ(effective_logodds(ObservationKind::Occupied, 0.0, 0.0, p, on), 2.0);
  EXPECT_NEAR(effective_logodds(ObservationKind::Occupied, 10.0, 0.0, p, on), 0.7358, 5e-5);
  EXPECT_DOUBLE_EQ(effective_logodds(ObservationKind::Free, 10.0, 1.0, p, off), -0.5);
}

TEST(Decay, MonotoneAndSignPreserving) {
  FusionParams p;
  SensorDecay on{0.1, 0.5, true};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(0.0, 20.0), a(0.0, std::numbers::pi / 2);
  for (int k = 0; k < 10000; ++k) {
    const double d1 = d(rng), d2 = d(rng), al = a(rng);
    const double l1 = effective_logodds(ObservationKind::Occupied, std::min(d1, d2), al, p, on);
    const double l2 = effective_logodds(ObservationKind::Occupied, std::max(d1, d2), al, p, on);
    EXPECT_GT(l1, 0.0);
    EXPECT_GE(l1, l2);
    EXPECT_LT(effective_logodds(ObservationKind::Free, d1, al, p, on), 0.0);
  }
}

TEST(Observe, WallHitExample) {
  const GridSpec g(50, 50, 0.1);
  FusionParams p;
  const SensorDecay off{};
  const BeamReading beam{0.0, 2.0, true, 0.0};
  const auto obs = observe({g, {0.05, 0.05, 0.0}, std::span(&beam, 1), 15.0, p, off});
  ASSERT_FALSE(obs.empty());
  const ScanObservation& end = obs.back();
  EXPECT_EQ(end.kind, ObservationKind::Occupied);
  EXPECT_DOUBLE_EQ(end.l, 2.0);
  EXPECT_NEAR(end.bba.m_o, 0.7616, 5e-5);
  EXPECT_NEAR(end.bba.m_of, 0.2384, 5e-5);
  p.matching = Matching::PPl;
  const auto pp = observe({g, {0.05, 0.05, 0.0}, std::span(&beam, 1), 15.0, p, off});
  EXPECT_NEAR(pp.back().bba.m_o, 0.8647, 5e-5);
  EXPECT_NEAR(pp.back().bba.m_of, 0.1353, 5e-5);
}

TEST(Observe, MaxRangeGivesOnlyFree) {
  const GridSpec g(50, 50, 0.1);
  FusionParams p;
  const SensorDecay off{};
  const BeamReading beam{0.0, 3.0, false, 0.0};
  const auto obs = observe({g, {0.05, 0.05, 0.0}, std::span(&beam, 1), 3.0, p, off});
  ASSERT_FALSE(obs.empty());
  for (const auto& o : obs) EXPECT_EQ(o.kind, ObservationKind::Free);
}

TEST(Observe, MatchingHoldsPerObservation) {
  const GridSpec g(100, 100, 0.1);
  const SensorDecay on{0.1, 0.5, true};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ang(-3.1, 3.1), rr(0.1, 4.0), inc(0.0, 1.5);
  for (Matching m : {Matching::BetP, Matching::PPl}) {
    FusionParams p;
    p.matching = m;
    std::vector<BeamReading> beams;
    for (int k = 0; k < 60; ++k) beams.push_back({ang(rng), rr(rng), k % 3 != 0, inc(rng)});
    for (const auto& o : observe({g, {5.0, 5.0, 0.0}, beams, 15.0, p, on})) {
      EXPECT_EQ(o.l > 0.0, o.kind == ObservationKind::Occupied);
      const double tp = m == Matching::BetP ? betp(o.bba) : ppl(o.bba);
      EXPECT_NEAR(tp, logistic(o.l), 1e-12);
    }
  }
}

TEST(Grid, WorldToCellAndCentres) {
  const GridSpec g(10, 5, 0.5, -1.0, 2.0);
  EXPECT_EQ(*world_to_cell(g, -1.0, 2.0), (CellIndex{0, 0}));
  EXPECT_EQ(*world_to_cell(g, 3.99, 4.49), (CellIndex{9, 4}));
  EXPECT_FALSE(world_to_cell(g, 4.0, 3.0));
  EXPECT_FALSE(world_to_cell(g, -1.01, 3.0));
  const Point2 c = cell_center(g, {2, 1});
  EXPECT_DOUBLE_EQ(c.x, 0.25);
  EXPECT_DOUBLE_EQ(c.y, 2.75);
  EXPECT_EQ(g.unlinear(g.linear({7, 3})), (CellIndex{7, 3}));
  EXPECT_THROW(GridSpec(0, 3, 0.1), std::invalid_argument);
}

TEST(Grid, CentreRoundTrip) {
  const GridSpec g(64, 48, 0.05, 1.5, -2.0);
  std::mt19937_64 rng(10);
  for (int k = 0; k < 1000; ++k) {
    const CellIndex c{static_cast<int>(rng() % 64), static_cast<int>(rng() % 48)};
    const Point2 p = cell_center(g, c);
    EXPECT_EQ(*world_to_cell(g, p.x, p.y), c);
  }
}

TEST(Pose, CompositionAndInverse) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0), th(-3.1, 3.1);
  for (int k = 0; k < 1000; ++k) {
    const Pose2D a{u(rng), u(rng), th(rng)}, b{u(rng), u(rng), th(rng)}, c{u(rng), u(rng), th(rng)};
    const Pose2D id = compose_pose(a, inverse_pose(a));
    EXPECT_NEAR(id.x, 0.0, 1e-12);
    EXPECT_NEAR(id.y, 0.0, 1e-12);
    EXPECT_NEAR(id.theta, 0.0, 1e-12);
    const Pose2D l = compose_pose(compose_pose(a, b), c), r = compose_pose(a, compose_pose(b, c));
    EXPECT_NEAR(l.x, r.x, 1e-9);
    EXPECT_NEAR(l.y, r.y, 1e-9);
    EXPECT_NEAR(std::remainder(l.theta - r.theta, 2 * std::numbers::pi), 0.0, 1e-9);
    const Pose2D rel = compose_pose(a, relative_pose(a, b));
    EXPECT_NEAR(rel.x, b.x, 1e-9);
    EXPECT_NEAR(rel.y, b.y, 1e-9);
  }
  EXPECT_DOUBLE_EQ(normalize_angle(-std::numbers::pi), std::numbers::pi);
}
