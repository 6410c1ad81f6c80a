#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gridfuse/arm.hpp"
#include "gridfuse/fusion.hpp"

using namespace gridfuse;

namespace {

void expect_bba(const BBA& m, double o, double f, double of, double tol) {
  EXPECT_NEAR(m.m_o, o, tol);
  EXPECT_NEAR(m.m_f, f, tol);
  EXPECT_NEAR(m.m_of, of, tol);
}

BBA random_consonant(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const double a = u(g);
  return g() % 2 ? BBA{a, 0.0, 1.0 - a} : BBA{0.0, a, 1.0 - a};
}

BBA random_bba(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double o = u(g), f = u(g), t = u(g) + 0.05;
  const double s = o + f + t;
  return {o / s, f / s, t / s};
}

}  // namespace

TEST(Transforms, WorkedNumbers) {
  expect_bba(masses_from_logodds_betp(2.0), 0.7616, 0.0, 0.2384, 5e-5);
  expect_bba(masses_from_logodds_betp(-0.5), 0.0, 0.2449, 0.7551, 5e-5);
  EXPECT_NEAR(betp(masses_from_logodds_betp(2.0)), 0.8808, 5e-5);
  EXPECT_NEAR(betp(masses_from_logodds_betp(-0.5)), 0.3775, 5e-5);
}

TEST(Transforms, ZeroLogOddsIsVacuous) { EXPECT_EQ(masses_from_logodds_betp(0.0), BBA::vacuous()); }

TEST(Transforms, BetPMatchingAgreesWithLogistic) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int k = 0; k < 10000; ++k) {
    const double l = u(g);
    EXPECT_NEAR(betp(masses_from_logodds_betp(l)), logistic(l), 1e-12);
  }
}

TEST(Transforms, BijectionRoundTrip) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int k = 0; k < 10000; ++k) {
    const double l = u(g);
    if (l == 0.0) continue;
    EXPECT_NEAR(logodds_from_masses(masses_from_logodds_betp(l)), l, 1e-9) << l;
  }
}

TEST(Transforms, PplMatchingAgreesWithLogistic) {
  for (double l : {-4.0, -0.5, 0.3, 2.0, 7.0}) {
    const BBA m = masses_from_logodds_ppl(l);
    EXPECT_TRUE(m.valid());
    EXPECT_NEAR(ppl(m), logistic(l), 1e-12);
  }
}

TEST(Transforms, DegenerateInverseThrows) {
  EXPECT_THROW((void)logodds_from_masses({1.0, 0.0, 0.0}), DegenerateBbaError);
  EXPECT_THROW((void)logodds_from_masses({0.0, 1.0, 0.0}), DegenerateBbaError);
}

TEST(Transforms, LogisticIsStableAtExtremes) {
  EXPECT_EQ(logistic(-800.0), 0.0);
  EXPECT_EQ(logistic(800.0), 1.0);
  EXPECT_NEAR(logit(logistic(3.0)), 3.0, 1e-12);
}

TEST(Dempster, VacuousIsIdentity) {
  const BBA m{0.3, 0.2, 0.5};
  expect_bba(dempster_combine(m, BBA::vacuous()).m, 0.3, 0.2, 0.5, 1e-15);
}

TEST(Dempster, HandComputedConflict) {
  const auto r = dempster_combine({0.6, 0.1, 0.3}, {0.2, 0.5, 0.3});
  const double K = 0.6 * 0.5 + 0.1 * 0.2;
  EXPECT_DOUBLE_EQ(r.conflict.K, K);
  expect_bba(r.m, (0.12 + 0.18 + 0.06) / (1 - K), (0.05 + 0.03 + 0.15) / (1 - K), 0.09 / (1 - K), 1e-12);
}

TEST(Dempster, TotalConflictThrows) {
  EXPECT_THROW((void)dempster_combine({1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}), TotalConflictError);
}

TEST(Dempster, ConvergenceTable) {
  struct Row {
    int N;
    double L, p, m_o, m_of, bp;
  };
  const Row rows[] = {{1, 2.0, 0.8808, 0.7616, 0.2384, 0.8808},
                      {2, 4.0, 0.9820, 0.9432, 0.0568, 0.9716},
                      {5, 10.0, 0.999955, 0.9992, 0.0008, 0.9996}};
  const LogOddsLimit lmax(10.0);
  for (const Row& r : rows) {
    const double a = masses_from_logodds_betp(2.0).m_o;
    EXPECT_NEAR(a, 0.7616, 5e-5);
    BBA m = BBA::vacuous();
    LogOddsCell c;
    for (int k = 0; k < r.N; ++k) {
      m = dempster_combine(m, masses_from_logodds_betp(2.0)).m;
      c = bayes_update(c, 2.0, lmax);
    }
    EXPECT_NEAR(c.L, r.L, 5e-5);
    EXPECT_NEAR(logistic(c.L), r.p, r.N == 5 ? 1e-6 : 5e-5);
    EXPECT_NEAR(m.m_o, r.m_o, 5e-5);
    EXPECT_NEAR(m.m_of, r.m_of, 5e-5);
    EXPECT_NEAR(betp(m), r.bp, 5e-5);
    if (r.N == 2) {
      EXPECT_NEAR(betp(m) - logistic(c.L), -0.0104, 5e-5);
    }
  }
}

TEST(Dempster, ClosedFormMatchesIteration) {
  for (double a : {0.05, 0.3, 0.7616, 0.95}) {
    BBA m = BBA::vacuous();
    for (int N = 1; N <= 50; ++N) {
      m = dempster_combine(m, {a, 0.0, 1.0 - a}).m;
      const BBA cf = closed_form_consonant(a, N);
      expect_bba(m, cf.m_o, cf.m_f, cf.m_of, 1e-9);
    }
  }
  EXPECT_THROW((void)closed_form_consonant(1.0, 3), DomainError);
}

TEST(Dempster, Associative) {
  std::mt19937_64 g(3);
  for (int k = 0; k < 2000; ++k) {
    const BBA a = random_bba(g), b = random_bba(g), c = random_bba(g);
    const BBA l = dempster_combine(dempster_combine(a, b).m, c).m;
    const BBA r = dempster_combine(a, dempster_combine(b, c).m).m;
    expect_bba(l, r.m_o, r.m_f, r.m_of, 1e-9);
  }
}

TEST(Dempster, Commutative) {
  std::mt19937_64 g(4);
  for (int k = 0; k < 1000; ++k) {
    const BBA a = random_bba(g), b = random_bba(g);
    const BBA x = dempster_combine(a, b).m, y = dempster_combine(b, a).m;
    expect_bba(x, y.m_o, y.m_f, y.m_of, 1e-15);
  }
}

TEST(Dempster, IgnoranceStrictlyDecays) {
  std::mt19937_64 g(5);
  for (int k = 0; k < 10000; ++k) {
    const BBA a = random_consonant(g), b = random_consonant(g);
    const BBA m = dempster_combine(a, b).m;
    EXPECT_LT(m.m_of, std::min(a.m_of, b.m_of));
    EXPECT_TRUE(m.valid());
  }
}

TEST(Dempster, MixedEvidenceDivergence) {
  BBA m = BBA::vacuous();
  LogOddsCell c;
  const LogOddsLimit lmax(10.0);
  for (int k = 0; k < 5; ++k) {
    m = dempster_combine(m, masses_from_logodds_betp(2.0)).m;
    c = bayes_update(c, 2.0, lmax);
  }
  for (int k = 0; k < 5; ++k) {
    m = dempster_combine(m, masses_from_logodds_betp(-0.5)).m;
    c = bayes_update(c, -0.5, lmax);
  }
  EXPECT_NEAR(betp(m), 0.9973, 5e-5);
  EXPECT_NEAR(logistic(c.L), 0.9994, 5e-5);
}

TEST(Yager, EqualsDempsterWithoutConflict) {
  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int k = 0; k < 1000; ++k) {
    const double a = u(g), b = u(g);
    const BBA x{a, 0.0, 1.0 - a}, y{b, 0.0, 1.0 - b};
    const BBA d = dempster_combine(x, y).m, yy = yager_combine(x, y);
    expect_bba(yy, d.m_o, d.m_f, d.m_of, 1e-15);
  }
}

TEST(Yager, ConflictGoesToIgnorance) {
  const BBA m = yager_combine({0.6, 0.1, 0.3}, {0.2, 0.5, 0.3});
  const double K = 0.6 * 0.5 + 0.1 * 0.2;
  expect_bba(m, 0.36, 0.23, 0.09 + K, 1e-12);
  EXPECT_NO_THROW((void)yager_combine({1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}));
}

TEST(Yager, NotAssociative) {
  const BBA a{0.7, 0.0, 0.3}, b{0.0, 0.6, 0.4}, c{0.5, 0.2, 0.3};
  const BBA l = yager_combine(yager_combine(a, b), c);
  const BBA r = yager_combine(a, yager_combine(b, c));
  EXPECT_GT(std::abs(l.m_o - r.m_o) + std::abs(l.m_f - r.m_f), 1e-6);
}

TEST(Bayes, ClampBreaksAssociativity) {
  // Six hits then six misses: sequential clamping loses the excess over L_max.
  const LogOddsLimit lmax(10.0);
  LogOddsCell seq;
  for (int k = 0; k < 6; ++k) seq = bayes_update(seq, 2.0, lmax);
  for (int k = 0; k < 6; ++k) seq = bayes_update(seq, -0.5, lmax);
  EXPECT_DOUBLE_EQ(seq.L, 7.0);
  EXPECT_DOUBLE_EQ(lmax.apply(6 * 2.0 + 6 * -0.5), 9.0);
}

TEST(Bayes, UnboundedIsAdditive) {
  LogOddsCell c;
  for (int k = 0; k < 40; ++k) c = bayes_update(c, 2.0, LogOddsLimit::unbounded());
  EXPECT_DOUBLE_EQ(c.L, 80.0);
  EXPECT_EQ(c.n, 40u);
  EXPECT_DOUBLE_EQ(bayes_trajectory(2.0, LogOddsLimit(10.0), 7), 10.0);
  EXPECT_EQ(LogOddsLimit::unbounded().str(), "inf");
  EXPECT_EQ(LogOddsLimit(10.0).str(), "10");
}

TEST(Floor, KeepsIgnoranceAboveFloor) {
  const BBA m = apply_mof_floor({0.99, 0.0, 0.01}, 0.05);
  EXPECT_DOUBLE_EQ(m.m_of, 0.05);
  EXPECT_NEAR(m.sum(), 1.0, 1e-15);
  EXPECT_EQ(apply_mof_floor({0.5, 0.0, 0.5}, 0.05), (BBA{0.5, 0.0, 0.5}));
}

TEST(Arm, FloorAppliesInsideCombination) {
  FusionParams p;
  p.rule = FusionRule::Dempster;
  p.mof_floor = 0.01;
  ArmGrid g(GridSpec(1, 1, 1.0), p);
  ScanObservation o{{0, 0}, ObservationKind::Occupied, 2.0, masses_from_logodds_betp(2.0)};
  for (int k = 0; k < 30; ++k) g.integrate(o);
  EXPECT_NEAR(g.belief().at_linear(0).m_of, 0.01, 1e-15);
}

TEST(Arm, FuseRejectsMismatchedRules) {
  FusionParams a, b;
  b.rule = FusionRule::Dempster;
  ArmGrid x(GridSpec(2, 2, 1.0), a), y(GridSpec(2, 2, 1.0), b);
  EXPECT_THROW(x.fuse(y), Error);
}

TEST(Arm, UnboundedLogOddsFusionIsOrderFree) {
  FusionParams p;
  p.l_max = LogOddsLimit::unbounded();
  const GridSpec s(1, 1, 1.0);
  ArmGrid all(s, p), a(s, p), b(s, p);
  const ScanObservation hit{{0, 0}, ObservationKind::Occupied, 2.0, {}};
  const ScanObservation miss{{0, 0}, ObservationKind::Free, -0.5, {}};
  for (int k = 0; k < 8; ++k) {
    all.integrate(hit);
    a.integrate(hit);
  }
  for (int k = 0; k < 8; ++k) {
    all.integrate(miss);
    b.integrate(miss);
  }
  a.fuse(b);
  EXPECT_DOUBLE_EQ(a.logodds().at_linear(0).L, all.logodds().at_linear(0).L);
  EXPECT_EQ(a.counts()[0], 16u);
}
