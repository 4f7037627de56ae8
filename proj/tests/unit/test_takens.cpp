#include <gtest/gtest.h>

#include <random>

#include "phflat/takens.hpp"

using namespace phflat;

namespace {

Rational q(long p, long d = 1) {
  Rational v(p, d);
  v.canonicalize();
  return v;
}

Series<Rational> rseries(std::vector<Rational> c) { return Series<Rational>(std::move(c)); }

MatPoly<Rational> scalar_poly(std::vector<Rational> c) { return MatPoly<Rational>::scalar(rseries(std::move(c))); }

// A scalar (1,1,1) Takens map with the given center germ and blocks.
TakensMap<Rational> scalar_map(std::vector<Rational> center, std::vector<Rational> as, std::vector<Rational> au) {
  TakensMap<Rational> m;
  m.center = rseries(std::move(center));
  m.As = scalar_poly(std::move(as));
  m.Au = scalar_poly(std::move(au));
  return m;
}

Rational random_rational(std::mt19937_64& rng, long num_range, long den) {
  std::uniform_int_distribution<long> d(-num_range, num_range);
  return q(d(rng), den);
}

// Order-r orbit-product oracle for the scalar correctors, written directly
// from the defining formulas:
//   P_n = Taylor_r[ Π_{j<n} A^s(F^{j}(G)) · ŷ(G) ],  G = F^{-n}
//   Q_n = Taylor_r[ (Π_{j<n} A^u(F^{j}))^{-1} · ẑ(F^n) ]
std::pair<Series<Rational>, Series<Rational>> product_oracle(const TakensMap<Rational>& m, const Series<Rational>& yhat, const Series<Rational>& zhat, long n) {
  const int r = yhat.order();
  const Jet<Rational> F = Jet<Rational>::from_series(m.center.truncated(r));
  const Series<Rational> G = power(F, -n).series();
  auto Aeval = [&](const MatPoly<Rational>& A, const Series<Rational>& arg) {
    Series<Rational> out = Series<Rational>::constant(Rational(0), r);
    Series<Rational> p = Series<Rational>::constant(Rational(1), r);
    for (int k = 0; k <= r && k <= A.degree(); ++k) {
      out += p * A.coeff(k)(0, 0);
      p = p * arg;
    }
    return out;
  };
  Series<Rational> prod = Series<Rational>::constant(Rational(1), r);
  for (long j = 0; j < n; ++j) prod = prod * Aeval(m.As, power(F, j - n).series());
  const Series<Rational> P = prod * yhat.compose(G);

  Series<Rational> uprod = Series<Rational>::constant(Rational(1), r);
  for (long j = 0; j < n; ++j) uprod = uprod * Aeval(m.Au, power(F, j).series());
  const Series<Rational> Q = uprod.reciprocal() * zhat.compose(power(F, n).series());
  return {P, Q};
}

// Random scalar map pinched at order 3: center close to a contraction or
// expansion of rate ~1, stable block ~0.3, unstable block ~3.
TakensMap<Rational> random_pinched(std::mt19937_64& rng) {
  std::uniform_int_distribution<long> lam(95, 105);
  TakensMap<Rational> m = scalar_map({q(0), q(lam(rng), 100), random_rational(rng, 5, 100), random_rational(rng, 5, 100)},
                                     {q(std::uniform_int_distribution<long>(20, 35)(rng), 100), random_rational(rng, 4, 100), random_rational(rng, 4, 100), random_rational(rng, 4, 100)},
                                     {q(std::uniform_int_distribution<long>(25, 40)(rng), 10), random_rational(rng, 10, 100), random_rational(rng, 10, 100), random_rational(rng, 10, 100)});
  return m;
}

}  // namespace

// ----------------------------------------------------------------- seminorms

TEST(Seminorm, ScalarPolynomialOnePlusT) {
  EXPECT_DOUBLE_EQ(scalar_poly({q(1), q(1)}).seminorm(), 2.0);
}

TEST(Seminorm, IdentityMatrixConstant) {
  EXPECT_DOUBLE_EQ(MatPoly<Rational>::constant(Mat<Rational>::identity(3), 2).seminorm(), 1.0);
}

TEST(Seminorm, UsesSpectralNorms) {
  // [[3,0],[4,0]] has spectral norm 5 (not the max-row or Frobenius value).
  Mat<double> m(2, 2, {3, 0, 4, 0});
  EXPECT_NEAR(MatPoly<double>::constant(m, 0).seminorm(), 5.0, 1e-12);
}

TEST(Seminorm, TriangleAndProductBoundsOnRandomInstances) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + trial % 4;
    auto rnd = [&](int rows, int cols) {
      MatPoly<double> p(rows, cols, r, 0.25);
      for (int k = 0; k <= r; ++k)
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j) p.coeff(k)(i, j) = u(rng);
      return p;
    };
    const MatPoly<double> A = rnd(2, 3), B = rnd(2, 3), C = rnd(3, 1);
    EXPECT_LE((A + B).seminorm(), A.seminorm() + B.seminorm() + 1e-12);
    EXPECT_LE((A * C).seminorm(), A.seminorm() * C.seminorm() * (1 + 1e-12));
    const MatPoly<double> g = rnd(1, 1);
    EXPECT_LE(scalar_product(g, A).seminorm(), g.seminorm() * A.seminorm() * (1 + 1e-12) + 1e-12);
  }
}

TEST(Seminorm, CompositionBoundOnRandomDegreeThreeInstances) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    MatPoly<double> G(2, 2, 3, 0.7), F(1, 1, 3, -0.2);
    for (int k = 0; k <= 3; ++k) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) G.coeff(k)(i, j) = u(rng);
      F.coeff(k)(0, 0) = k == 0 ? 0.7 : u(rng);
    }
    const ComposeBound b = seminorm_compose_bound(G, F);
    EXPECT_TRUE(b.holds()) << b.lhs << " vs " << b.rhs;
  }
}

TEST(Seminorm, CompositionWithIdentityShiftKeepsNorm) {
  MatPoly<Rational> G = scalar_poly({q(1), q(-2), q(3, 4), q(5)});
  G = MatPoly<Rational>({G.coeff(0), G.coeff(1), G.coeff(2), G.coeff(3)}, q(1, 2));
  // F(p1 + t) = p2 + t, based at p1 = -1.
  MatPoly<Rational> F = MatPoly<Rational>({Mat<Rational>::scalar(q(1, 2)), Mat<Rational>::scalar(q(1)), Mat<Rational>::scalar(q(0)), Mat<Rational>::scalar(q(0))}, q(-1));
  const ComposeBound b = seminorm_compose_bound(G, F);
  EXPECT_DOUBLE_EQ(b.lhs, G.seminorm());
  EXPECT_DOUBLE_EQ(b.rhs, G.seminorm());
}

TEST(Seminorm, LinearCompositionIsTight) {
  const MatPoly<Rational> G = scalar_poly({q(0), q(3)});
  const MatPoly<Rational> F = scalar_poly({q(0), q(2)});
  const ComposeBound b = seminorm_compose_bound(G, F);
  EXPECT_DOUBLE_EQ(b.lhs, 6.0);
  EXPECT_DOUBLE_EQ(b.rhs, 6.0);
}

TEST(Seminorm, CompositionRejectsBasePointMismatch) {
  const MatPoly<Rational> G = scalar_poly({q(0), q(3)});
  const MatPoly<Rational> F = scalar_poly({q(1), q(2)});
  EXPECT_THROW(seminorm_compose_bound(G, F), PreconditionError);
}

TEST(MatPolyAlgebra, InverseIsPointwiseInverse) {
  Mat<Rational> a0(2, 2, {q(2), q(1), q(0), q(3)}), a1(2, 2, {q(1), q(0), q(1, 2), q(1)}), a2(2, 2, {q(0), q(1), q(1), q(0)});
  const MatPoly<Rational> M({a0, a1, a2});
  const MatPoly<Rational> I = M * M.inverse();
  EXPECT_EQ(I.coeff(0), Mat<Rational>::identity(2));
  EXPECT_TRUE(I.coeff(1).is_zero());
  EXPECT_TRUE(I.coeff(2).is_zero());
  EXPECT_THROW(MatPoly<Rational>::constant(Mat<Rational>(2, 2), 1).inverse(), NonInvertibleError);
}

// ----------------------------------------------------------------- Takens maps

TEST(TakensMapShape, ValidatesHyperbolicBlocks) {
  EXPECT_NO_THROW(scalar_map({q(0), q(1)}, {q(1, 3)}, {q(2)}).validate());
  EXPECT_THROW(scalar_map({q(0), q(1)}, {q(1)}, {q(2)}).validate(), NonHyperbolicError);
  EXPECT_THROW(scalar_map({q(0), q(1)}, {q(1, 3)}, {q(-1, 2)}).validate(), NonHyperbolicError);
  EXPECT_THROW(scalar_map({q(1), q(1)}, {q(1, 3)}, {q(2)}).validate(), PreconditionError);
}

TEST(Pinching, LinearMapWithComfortableMarginsPasses) {
  auto m = TakensMap<Rational>::linear(q(1), Mat<Rational>::scalar(q(3, 10)), Mat<Rational>::scalar(q(2)), 3);
  const PinchingReport rep = pinching_report(m, 3);
  EXPECT_DOUBLE_EQ(rep.stable, 0.3);
  EXPECT_DOUBLE_EQ(rep.unstable, 0.5);
  EXPECT_TRUE(pinching_check(m, 3));
}

TEST(Pinching, ArithmeticCounterexample) {
  // ‖A^s‖ = 0.9 and F_c(x) = x/1.2 so that ‖F_c^{-1}‖ = 1.2; at r = 2 the
  // stable quantity is 0.9·1.44 = 1.296.
  auto m = TakensMap<Rational>::linear(q(5, 6), Mat<Rational>::scalar(q(9, 10)), Mat<Rational>::scalar(q(3)), 2);
  const PinchingReport rep = pinching_report(m, 2);
  EXPECT_NEAR(rep.stable, 1.296, 1e-12);
  EXPECT_FALSE(pinching_check(m, 2));
}

TEST(Pinching, SingularUnstableBlockOnTheBallIsAnError) {
  // A^u(x) = 2 − 4x vanishes at x = 1/2 inside |x| ≤ 1.
  auto m = scalar_map({q(0), q(1)}, {q(1, 4)}, {q(2), q(-4)});
  EXPECT_THROW(pinching_check(m, 1), NonInvertibleError);
}

TEST(Rescale, LinearMapUnchanged) {
  auto m = TakensMap<Rational>::linear(q(7, 8), Mat<Rational>::scalar(q(1, 4)), Mat<Rational>::scalar(q(5)), 3);
  auto r = rescale_conjugacy(m, q(1, 3));
  EXPECT_EQ(r.center, m.center);
  EXPECT_EQ(r.As, m.As);
  EXPECT_EQ(r.Au, m.Au);
  EXPECT_DOUBLE_EQ(r.alpha_c, 3.0);
}

TEST(Rescale, RatioOfSchwarzianToNonlinearityHalves) {
  auto m = scalar_map({q(0), q(1), q(1), q(-10)}, {q(1, 4)}, {q(3)});
  const auto before = invariants_AS(Jet<Rational>::from_series(m.center));
  EXPECT_EQ(abs(before.S / before.A), q(33));
  auto r = rescale_conjugacy(m, q(1, 2));
  const auto after = invariants_AS(Jet<Rational>::from_series(r.center));
  EXPECT_EQ(abs(after.S / after.A), q(33, 2));
  // Same result as the one-dimensional conjugation by t ↦ αt.
  const Jet<Rational> H = Jet<Rational>::linear(q(1, 2), 3);
  EXPECT_EQ(Jet<Rational>::from_series(r.center), conjugate(Jet<Rational>::from_series(m.center), H));
}

TEST(Rescale, SmallAlphaRepairsPinching) {
  auto m = scalar_map({q(0), q(1), q(1), q(0)}, {q(1, 2), q(1, 2), q(0), q(0)}, {q(3), q(1), q(0), q(0)});
  EXPECT_FALSE(pinching_check(m, 3));
  EXPECT_TRUE(pinching_check(rescale_conjugacy(m, q(1, 100)), 3));
}

TEST(Rescale, BlockDeviationShrinksMonotonically) {
  auto m = scalar_map({q(0), q(1), q(1), q(0)}, {q(1, 2), q(1, 2), q(-1, 3), q(1, 5)}, {q(3), q(1), q(0), q(2)});
  double prev = 1e300;
  for (int i = 0; i <= 12; ++i) {
    const Rational alpha(1, 1L << i);
    const auto r = rescale_conjugacy(m, alpha);
    MatPoly<Rational> dev = r.As;
    dev.coeff(0) = Mat<Rational>(1, 1);
    const double d = dev.seminorm();
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-3);
}

// ----------------------------------------------------------------- correctors

TEST(Correctors, MatchDirectOrbitProductsOnRandomMaps) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    TakensMap<Rational> m = random_pinched(rng);
    ASSERT_TRUE(pinching_check(m, 3));
    const Series<Rational> y = rseries({q(1, 2), random_rational(rng, 9, 10), random_rational(rng, 9, 10), random_rational(rng, 9, 10)});
    const Series<Rational> z = rseries({q(-1, 3), random_rational(rng, 9, 10), random_rational(rng, 9, 10), random_rational(rng, 9, 10)});
    ConnectingProblem<Rational> P{m, MatPoly<Rational>::scalar(y), MatPoly<Rational>::scalar(z)};
    const long n = 1 + trial % 4;
    const auto c = connecting_correctors(P, n);
    const auto [Po, Qo] = product_oracle(m, y, z, n);
    EXPECT_EQ(c.P.entry(0, 0), Po) << "trial " << trial;
    EXPECT_EQ(c.Q.entry(0, 0), Qo) << "trial " << trial;
  }
}

TEST(Correctors, ValuesAtZero) {
  std::mt19937_64 rng(5);
  TakensMap<Rational> m = random_pinched(rng);
  ConnectingProblem<Rational> P{m, scalar_poly({q(1, 2), q(1), q(0), q(2)}), scalar_poly({q(1, 4), q(0), q(1), q(0)})};
  const long n = 4;
  const auto c = connecting_correctors(P, n);
  Rational s = m.As.coeff(0)(0, 0), u = m.Au.coeff(0)(0, 0);
  Rational sn = 1, un = 1;
  for (long i = 0; i < n; ++i) {
    sn *= s;
    un *= u;
  }
  EXPECT_EQ(c.P.coeff(0)(0, 0), sn * q(1, 2));
  EXPECT_EQ(c.Q.coeff(0)(0, 0), q(1, 4) / un);
}

TEST(Correctors, LinearMapMatchesClosedForm) {
  const Rational lam = q(9, 10);
  Mat<Rational> As(2, 2, {q(1, 5), q(1, 10), q(0), q(1, 4)}), Au(1, 1, {q(3)});
  auto m = TakensMap<Rational>::linear(lam, As, Au, 1);
  const std::vector<Rational> ys{q(1, 3), q(-1, 4)}, yp{q(2), q(1)}, zs{q(1, 2)}, zp{q(-3)};
  MatPoly<Rational> yhat(2, 1, 1), zhat(1, 1, 1);
  yhat.coeff(0) = Mat<Rational>::column(ys);
  yhat.coeff(1) = Mat<Rational>::column(yp);
  zhat.coeff(0) = Mat<Rational>::column(zs);
  zhat.coeff(1) = Mat<Rational>::column(zp);
  ConnectingProblem<Rational> P{m, yhat, zhat};
  for (long n = 1; n <= 6; ++n) {
    const auto c = connecting_correctors(P, n);
    // The generic P_n is the closed form evaluated at λ^{-n}t (x* = 0).
    Rational ln = 1;
    for (long k = 0; k < n; ++k) ln *= lam;
    const MatPoly<Rational> closedP = linear_corrector_P(As, ys, yp, n);
    EXPECT_EQ(c.P, closedP.compose_offset(Series<Rational>::variable(q(0), 1) * (q(1) / ln)));
    EXPECT_EQ(c.Q, linear_corrector_Q(Au, lam, zs, zp, n));
  }
}

TEST(Correctors, ZeroCurveGivesZeroCorrector) {
  std::mt19937_64 rng(8);
  TakensMap<Rational> m = random_pinched(rng);
  // ŷ ≡ 0 is outside the problem's domain (q_- ≠ 0), so apply the recurrence
  // through a problem with ŷ(0) ≠ 0 and subtract the linear response.
  ConnectingProblem<Rational> P1{m, scalar_poly({q(1, 2), q(1), q(1), q(1)}), scalar_poly({q(1, 2), q(0), q(0), q(0)})};
  ConnectingProblem<Rational> P2{m, scalar_poly({q(1), q(2), q(2), q(2)}), scalar_poly({q(1, 2), q(0), q(0), q(0)})};
  const auto a = connecting_correctors(P1, 3), b = connecting_correctors(P2, 3);
  EXPECT_TRUE((a.P * q(2) - b.P).is_zero());  // P_n is linear in ŷ, so P_n[0] = 0
}

TEST(Correctors, DecayWithinPinchingRate) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    TakensMap<Rational> m = random_pinched(rng);
    const PinchingReport rep = pinching_report(m, 3);
    ConnectingProblem<Rational> P{m, scalar_poly({q(1, 2), q(1), q(-1), q(1, 2)}), scalar_poly({q(1, 2), q(1, 3), q(1), q(-2)})};
    double prevP = P.yhat.seminorm(), prevQ = P.zhat.seminorm();
    for (long n = 1; n <= 6; ++n) {
      const auto c = connecting_correctors(P, n);
      EXPECT_LE(c.P.seminorm(), rep.stable * prevP * (1 + 1e-12));
      EXPECT_LE(c.Q.seminorm(), rep.unstable * prevQ * (1 + 1e-12));
      prevP = c.P.seminorm();
      prevQ = c.Q.seminorm();
    }
  }
}

TEST(Correctors, RefuseUnpinchedMaps) {
  auto m = TakensMap<Rational>::linear(q(5, 6), Mat<Rational>::scalar(q(9, 10)), Mat<Rational>::scalar(q(3)), 2);
  ConnectingProblem<Rational> P{m, scalar_poly({q(1, 2), q(1), q(0)}), scalar_poly({q(1, 2), q(1), q(0)})};
  EXPECT_THROW(connecting_correctors(P, 2), PreconditionError);
}

// ----------------------------------------------------------------- connecting identity

TEST(Connecting, ZeroResidualOnRandomPinchedMaps) {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    TakensMap<Rational> m = random_pinched(rng);
    ASSERT_TRUE(pinching_check(m, 3));
    ConnectingProblem<Rational> P{m, scalar_poly({q(1, 2), random_rational(rng, 9, 10), random_rational(rng, 9, 10), random_rational(rng, 9, 10)}),
                                  scalar_poly({q(-1, 2), random_rational(rng, 9, 10), random_rational(rng, 9, 10), random_rational(rng, 9, 10)})};
    const auto res = verify_connecting(P, 2 + trial % 4);
    EXPECT_TRUE(res.is_zero()) << "trial " << trial << " max " << res.max_abs();
  }
}

TEST(Connecting, RescaledQuadraticCenterThroughOrderThree) {
  auto base = scalar_map({q(0), q(1), q(1), q(0)}, {q(1, 3), q(1), q(0), q(0)}, {q(3), q(-1), q(0), q(0)});
  auto m = rescale_conjugacy(base, q(1, 20));
  ASSERT_TRUE(pinching_check(m, 3));
  ConnectingProblem<Rational> P{m, scalar_poly({q(1, 2), q(1), q(2), q(-1)}), scalar_poly({q(1, 2), q(-1), q(1, 3), q(1)})};
  for (long n : {1L, 3L, 5L}) EXPECT_TRUE(verify_connecting(P, n).is_zero()) << n;
}

TEST(Connecting, OmittingPlusCorrectionLeavesStableResidual) {
  std::mt19937_64 rng(99);
  TakensMap<Rational> m = random_pinched(rng);
  ConnectingProblem<Rational> P{m, scalar_poly({q(1, 2), q(1), q(0), q(1)}), scalar_poly({q(1, 2), q(0), q(1), q(0)})};
  ConnectingOptions opt;
  opt.apply_plus = false;
  const auto res = verify_connecting(P, 3, opt);
  EXPECT_FALSE(res.y.is_zero());
  EXPECT_TRUE(res.z.is_zero());
  EXPECT_GE(res.first_nonzero_y_order(), 0);
  EXPECT_LE(res.first_nonzero_y_order(), 3);
}

TEST(Connecting, LinearCaseOrderOne) {
  auto m = TakensMap<Rational>::linear(q(1), Mat<Rational>::scalar(q(1, 4)), Mat<Rational>::scalar(q(4)), 1);
  ConnectingProblem<Rational> P{m, scalar_poly({q(1, 2), q(3)}), scalar_poly({q(1, 3), q(-2)})};
  EXPECT_TRUE(verify_connecting(P, 7).is_zero());
}

TEST(Connecting, PointsOutsideTheBallAreGeometryErrors) {
  auto m = TakensMap<Rational>::linear(q(1), Mat<Rational>::scalar(q(1, 4)), Mat<Rational>::scalar(q(4)), 1);
  m.alpha_s = 0.5;
  m.alpha_u = 0.25;
  ConnectingProblem<Rational> ok{m, scalar_poly({q(1, 2), q(1)}), scalar_poly({q(1, 5), q(1)})};
  EXPECT_NO_THROW(verify_connecting(ok, 3));
  ConnectingProblem<Rational> far_minus{m, scalar_poly({q(3, 5), q(1)}), scalar_poly({q(1, 5), q(1)})};
  EXPECT_THROW(verify_connecting(far_minus, 3), GeometryError);
  ConnectingProblem<Rational> far_plus{m, scalar_poly({q(1, 2), q(1)}), scalar_poly({q(1, 2), q(1)})};
  EXPECT_THROW(verify_connecting(far_plus, 3), GeometryError);
  ConnectingProblem<Rational> at_origin{m, scalar_poly({q(0), q(1)}), scalar_poly({q(1, 5), q(1)})};
  EXPECT_THROW(verify_connecting(at_origin, 3), GeometryError);
}

TEST(Connecting, OrbitStaysInsideTheBallUnderPinching) {
  // With ‖A^s(0)‖ < 1 and ‖A^u(0)^{-1}‖ < 1 every iterate of q_- (after the
  // first correction) is no larger than q_- or q_+; a shear block shows the
  // spectral norm, not the eigenvalues, is what matters.
  Mat<Rational> S(2, 2, {q(1, 10), q(1, 2), q(0), q(1, 10)});
  auto shear = TakensMap<Rational>::linear(q(1), S, Mat<Rational>::scalar(q(4)), 1);
  shear.alpha_s = 0.5;
  shear.alpha_u = 0.5;
  ASSERT_TRUE(pinching_check(shear, 1));
  MatPoly<Rational> y2(2, 1, 1);
  y2.coeff(0) = Mat<Rational>::column({q(0), q(1, 2)});
  y2.coeff(1) = Mat<Rational>::column({q(1), q(0)});
  ConnectingProblem<Rational> P{shear, y2, scalar_poly({q(1, 2), q(1)})};
  for (long n = 1; n <= 10; ++n) EXPECT_TRUE(verify_connecting(P, n).is_zero());
}

TEST(Connecting, LinearClosedFormsWithOffsetBasePoint) {
  Mat<Rational> As(2, 2, {q(1, 5), q(1, 7), q(0), q(1, 3)}), Au(1, 1, {q(5, 2)});
  for (long n = 1; n <= 8; ++n) {
    const auto res = verify_linear_connecting(q(4, 5), As, Au, q(1, 10), {q(1, 4), q(-1, 5)}, {q(2), q(3)}, {q(1, 3)}, {q(-1)}, n);
    EXPECT_TRUE(res.is_zero()) << n;
  }
}

// ----------------------------------------------------------------- normal form

namespace {

PolyMap<Rational> two_dim_example() {
  // (x + x², y/2 + x²)
  MPoly<Rational> x = MPoly<Rational>::variable(2, 3, 0), y = MPoly<Rational>::variable(2, 3, 1);
  return {x + x * x, y * q(1, 2) + x * x};
}

}  // namespace

TEST(NormalForm, RemovesPureCenterTermFromStableLine) {
  const PolyMap<Rational> f = two_dim_example();
  const auto nf = normal_form_reduce(f, 1, 0);
  // The y-line of the reduced map has no x² term; the change is y + 2x².
  EXPECT_EQ(nf.reduced[1].coeff({2, 0}), q(0));
  EXPECT_EQ(nf.change[1].coeff({2, 0}), q(2));
  EXPECT_EQ(nf.reduced[0].coeff({2, 0}), q(1));
  for (const auto& c : normal_form_defect(f, nf)) EXPECT_TRUE(c.is_zero());
  EXPECT_EQ(nf.takens.center[2], q(1));
  EXPECT_EQ(nf.takens.As.coeff(0)(0, 0), q(1, 2));
}

TEST(NormalForm, TakensFormInputGivesIdentityChange) {
  MPoly<Rational> x = MPoly<Rational>::variable(3, 4, 0), y = MPoly<Rational>::variable(3, 4, 1), z = MPoly<Rational>::variable(3, 4, 2);
  PolyMap<Rational> f{x + x * x * q(3) - x * x * x, (q(1, 3) + x * q(2)) * y, (q(5) - x * x) * z};
  const auto nf = normal_form_reduce(f, 1, 1);
  EXPECT_EQ(nf.change, identity_map<Rational>(3, 4));
  EXPECT_EQ(nf.reduced, f);
}

TEST(NormalForm, RoundTripOnRandomJets) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    const int K = 3 + trial % 2;
    const int ds = 1 + trial % 2, du = 1;
    const int n = 1 + ds + du;
    PolyMap<Rational> f;
    std::vector<Rational> mu{q(1), q(1, 3), q(2, 7), q(4)};
    std::vector<Rational> diag{q(1)};
    for (int i = 0; i < ds; ++i) diag.push_back(mu[static_cast<std::size_t>(1 + i)]);
    diag.push_back(mu[3]);
    for (int j = 0; j < n; ++j) {
      MPoly<Rational> p(n, K);
      for (std::size_t m = 0; m < p.size(); ++m) {
        const int d = p.total_degree(m);
        if (d == 1) {
          p[m] = p.exponent(m)[static_cast<std::size_t>(j)] == 1 ? diag[static_cast<std::size_t>(j)] : q(0);
        } else if (d >= 2) {
          p[m] = random_rational(rng, 6, 7);
        }
      }
      f.push_back(p);
    }
    const auto nf = normal_form_reduce(f, ds, du);
    for (const auto& c : normal_form_defect(f, nf)) EXPECT_TRUE(c.is_zero()) << "trial " << trial;
    // The reduced map is in skew form: the x-line depends on x only, the
    // y-lines are linear in y without z, the z-lines linear in z without y.
    for (int j = 0; j < n; ++j)
      for (std::size_t m = 0; m < nf.reduced[static_cast<std::size_t>(j)].size(); ++m) {
        if (nf.reduced[static_cast<std::size_t>(j)].total_degree(m) < 2 || nf.reduced[static_cast<std::size_t>(j)][m] == 0) continue;
        EXPECT_TRUE(detail::takens_allowed(nf.reduced[static_cast<std::size_t>(j)].exponent(m), j, ds, du));
      }
  }
}

TEST(NormalForm, ReciprocalHyperbolicPairIsResonantWithCenter) {
  MPoly<Rational> x = MPoly<Rational>::variable(3, 2, 0), y = MPoly<Rational>::variable(3, 2, 1), z = MPoly<Rational>::variable(3, 2, 2);
  PolyMap<Rational> f{x + y * z, y * q(1, 2), z * q(2)};
  try {
    normal_form_reduce(f, 1, 1);
    FAIL() << "expected a resonance error";
  } catch (const ResonanceError& e) {
    EXPECT_NE(std::string(e.what()).find("y1*z1"), std::string::npos) << e.what();
  }
}

TEST(NormalForm, Preconditions) {
  MPoly<Rational> x = MPoly<Rational>::variable(2, 2, 0), y = MPoly<Rational>::variable(2, 2, 1);
  EXPECT_THROW(normal_form_reduce<Rational>({x * q(2), y * q(1, 2)}, 1, 0), PreconditionError);
  EXPECT_THROW(normal_form_reduce<Rational>({x + y, y * q(1, 2)}, 1, 0), UnsupportedError);
  EXPECT_THROW(normal_form_reduce<Rational>({x + q(1), y * q(1, 2)}, 1, 0), PreconditionError);
  EXPECT_THROW(normal_form_reduce<Rational>({x, y * q(3, 2)}, 1, 0), NonHyperbolicError);
}
