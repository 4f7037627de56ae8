#include <gtest/gtest.h>

#include <cmath>

#include "phflat/saddle.hpp"

using namespace phflat;

TEST(SaddleModel, BundledTransitionHasKnownInvariants) {
  const SaddleModel M = SaddleModel::bundled();
  EXPECT_NO_THROW(M.validate());
  const auto as = invariants_AS(M.transition_jet());
  EXPECT_EQ(as.A, Rational(2));
  EXPECT_EQ(as.S, Rational(-6));
  EXPECT_EQ(M.mu1(), Rational(1));
  EXPECT_EQ(M.mu2(), Rational(1));
}

TEST(SaddleModel, ValidationRejectsBadData) {
  SaddleModel M = SaddleModel::bundled();
  M.chart1.lambda = Rational(1);
  EXPECT_THROW(M.validate(), PreconditionError);
  M = SaddleModel::bundled();
  M.chart2.u = Rational(1, 2);
  EXPECT_THROW(M.validate(), NonHyperbolicError);
  M = SaddleModel::bundled();
  M.phi1[1][0] = Rational(1, 3);  // Φ_1 no longer lands on (0, y_b, 0)
  EXPECT_THROW(M.validate(), PreconditionError);
  M = SaddleModel::bundled();
  M.phi2[0].set({1, 0, 0}, Rational(-1));
  EXPECT_THROW(M.validate(), OrientationError);
}

TEST(SaddleSchedule, MatchesBruteForceBalance) {
  const SaddleModel M = SaddleModel::bundled();
  const auto sched = balanced_schedule(M, 5, 60);
  ASSERT_FALSE(sched.empty());
  std::size_t idx = 0;
  for (long m2 = 5; m2 <= 60; ++m2) {
    // Brute force: every m1 whose product lies in the window.
    std::vector<long> hits;
    for (long m1 = 1; m1 <= 200; ++m1) {
      const double v = std::pow(1.5, m1) * std::pow(0.8, m2);
      if (v > 0.9 && v < 1.1) hits.push_back(m1);
    }
    if (hits.empty()) {
      EXPECT_TRUE(idx >= sched.size() || sched[idx].second != m2);
      continue;
    }
    ASSERT_LT(idx, sched.size());
    EXPECT_EQ(sched[idx].second, m2);
    EXPECT_EQ(sched[idx].first, hits.front());  // the window is narrower than one factor of λ_1
    ++idx;
  }
  EXPECT_EQ(idx, sched.size());
}

namespace {

std::vector<LoopReturn> bundled_sweep() {
  const SaddleModel M = SaddleModel::bundled();
  return sweep_schedule(M, balanced_schedule(M, 10, 40), 2);
}

}  // namespace

TEST(LoopReturn, InvariantsConvergeToTheTransitionValues) {
  const auto runs = bundled_sweep();
  ASSERT_GE(runs.size(), 10u);
  for (const auto& r : runs) {
    EXPECT_GT(r.nominal_multiplier, 0.9);
    EXPECT_LT(r.nominal_multiplier, 1.1);
    EXPECT_LT(std::fabs(r.A - r.A_ref) / std::fabs(r.A_ref), 0.05) << r.m1 << "," << r.m2;
    EXPECT_LT(std::fabs(r.S - r.S_ref) / std::fabs(r.S_ref), 0.05) << r.m1 << "," << r.m2;
  }
  const auto& last = runs.back();
  EXPECT_LT(std::fabs(last.A - 2) / 2, 1e-3);
  EXPECT_LT(std::fabs(last.S + 6) / 6, 1e-3);
}

TEST(LoopReturn, ThirdLegNonlinearityDecays) {
  const auto runs = bundled_sweep();
  for (std::size_t i = 1; i < runs.size(); ++i) EXPECT_LT(runs[i].A_F3_scaled, runs[i - 1].A_F3_scaled);
  EXPECT_LT(runs.back().A_F3_scaled, 1e-2);
}

TEST(LoopReturn, MultiplierMatchesLegProduct) {
  for (const auto& r : bundled_sweep()) {
    EXPECT_NEAR(r.multiplier, r.leg_multiplier, 1e-12 * r.multiplier);
    // μ_1, μ_2 measured along the curve approach their values at q.
    EXPECT_NEAR(r.multiplier / r.nominal_multiplier, 1.0, 1e-2);
  }
}

TEST(LoopReturn, NonlinearityCocycleAlongTheLegs) {
  // F_2 and F_4 are linear, so A(F) = A(F_1) + A(F_3)·λ_2^{m_2}·F_1'(0) and
  // S(F) = S(F_1) + S(F_3)·(λ_2^{m_2}·F_1'(0))².
  const SaddleModel M = SaddleModel::bundled();
  for (auto [m1, m2] : balanced_schedule(M, 10, 30)) {
    const LoopReturn r = loop_return_jet(M, m1, m2);
    const double l2 = std::pow(0.8, static_cast<double>(m2));
    EXPECT_NEAR(r.A, r.A_F1 + r.A_F3 * l2 * r.slope_F1, 1e-12);
    EXPECT_NEAR(r.S, r.S_F1 + r.S_F3 * std::pow(l2 * r.slope_F1, 2), 1e-12);
    EXPECT_NEAR(r.slope_F1, 1.0, 1e-3);
  }
}

TEST(LoopReturn, CenterCurveIsInvariantToThirdOrder) {
  // Independent of the jet machinery: evaluate the return map itself at
  // points of the computed curve; R(C(t)) − C(F(t)) must vanish like t^4.
  const SaddleModel M = SaddleModel::bundled();
  const long m1 = 11, m2 = 20;
  const LoopReturn r = loop_return_jet(M, m1, m2);
  auto defect = [&](const HighFloat& t) {
    const std::vector<HighFloat> c{r.point_hp[0] + t, r.point_hp[1] + r.sigma.eval(t), r.point_hp[2] + r.eta.eval(t)};
    const auto Rc = saddle_return_point(M, m1, m2, c);
    const HighFloat ft = r.f.eval(t);
    return std::vector<HighFloat>{Rc[0] - (r.point_hp[0] + ft), Rc[1] - (r.point_hp[1] + r.sigma.eval(ft))};
  };
  // The fifth-order coefficient of the defect is large (the ratio is still
  // ~29 at t = 1e-4), so probe well inside the asymptotic regime.
  const HighFloat h("1e-8");
  const auto d1 = defect(h), d2 = defect(h * 2);
  for (int i = 0; i < 2; ++i) {
    const double ratio = (d2[static_cast<std::size_t>(i)] / d1[static_cast<std::size_t>(i)]).convert_to<double>();
    EXPECT_GT(ratio, 15.0) << i;
    EXPECT_LT(ratio, 17.0) << i;
  }
  // The periodic point is a fixed point of the map itself.
  const auto Rp = saddle_return_point(M, m1, m2, r.point_hp);
  EXPECT_LT(boost::multiprecision::abs(Rp[0] - r.point_hp[0]).convert_to<double>(), 1e-50);
}

TEST(LoopReturn, AffineTransitionsGiveZeroNonlinearity) {
  const SaddleModel M = SaddleModel::bundled(true);
  for (auto [m1, m2] : balanced_schedule(M, 10, 30)) {
    const LoopReturn r = loop_return_jet(M, m1, m2);
    EXPECT_LT(std::fabs(r.A), 1e-30);
    EXPECT_LT(std::fabs(r.S), 1e-30);
  }
}

TEST(LoopReturn, OrbitOutsideTheBallsIsAGeometryError) {
  SaddleModel M = SaddleModel::bundled();
  M.ball = 1e-12;
  EXPECT_THROW(loop_return_jet(M, 11, 20), GeometryError);
}

TEST(LoopReturn, SweepIsIndependentOfWorkerCount) {
  const SaddleModel M = SaddleModel::bundled();
  const auto sched = balanced_schedule(M, 10, 25);
  const auto a = sweep_schedule(M, sched, 1), b = sweep_schedule(M, sched, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].A, b[i].A);
    EXPECT_EQ(a[i].S, b[i].S);
    EXPECT_EQ(a[i].multiplier, b[i].multiplier);
  }
}
