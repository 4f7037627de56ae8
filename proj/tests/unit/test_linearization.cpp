#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "phflat/expr.hpp"
#include "phflat/fixed_points.hpp"
#include "phflat/linearization.hpp"
#include "phflat/smooth_map.hpp"

using namespace phflat;

namespace {

using Domain = SmoothMap1D::Domain;

// y − ε(y−1/2)(y−1/2−ε)(y−1/2+ε): fixed points 1/2−ε, 1/2, 1/2+ε.
SmoothMap1D cubic_pinch(double eps) {
  return SmoothMap1D::from_generic(
      [eps](const auto& y) {
        auto u = y - 0.5;
        return y - eps * (u * (u - eps) * (u + eps));
      },
      Domain::interval(0, 1), "cubic");
}

HyperbolicFixedPoint point_at(const SmoothMap1D& f, double p) {
  for (const auto& q : find_fixed_points(f, p - 1e-3, p + 1e-3)) {
    if (std::fabs(q.p - p) < 1e-9) return q;
  }
  throw std::runtime_error("no fixed point near requested location");
}

}  // namespace

// --- expressions -------------------------------------------------------------

TEST(Expression, EvaluatesDoubleAndExactRational) {
  Expr e = Expr::parse("x/2 + x^2 - 3*(x - 1)");
  EXPECT_DOUBLE_EQ(e.eval(0.3), 0.15 + 0.09 - 3 * (0.3 - 1));
  Rational x(3, 4);
  EXPECT_EQ(e.eval(x), Rational(3, 8) + Rational(9, 16) + Rational(3, 4));
}

TEST(Expression, DecimalLiteralsAreExact) {
  Expr e = Expr::parse("0.99*x + 1.5e-2");
  EXPECT_EQ(e.eval(Rational(1)), Rational(99, 100) + Rational(15, 1000));
}

TEST(Expression, NamedConstantsAndUnaryMinus) {
  Expr e = Expr::parse("-eps*(y - 1/2)^3 + y", "y", {{"eps", Rational(1, 10)}});
  EXPECT_EQ(e.eval(Rational(1)), Rational(1) - Rational(1, 80));
}

TEST(Expression, SeriesEvaluationGivesTaylorJet) {
  Expr e = Expr::parse("exp(x) + sin(x)");
  Series<double> s = e.eval(Series<double>::variable(0.0, 3));
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  EXPECT_NEAR(s[1], 2.0, 1e-15);
  EXPECT_NEAR(s[2], 0.5, 1e-15);
  EXPECT_NEAR(s[3], 1.0 / 6 - 1.0 / 6, 1e-15);
}

TEST(Expression, TranscendentalHasNoExactValue) {
  Expr e = Expr::parse("exp(x)");
  EXPECT_THROW(e.eval(Rational(0)), UnsupportedError);
}

TEST(Expression, IntervalEnclosesPointValue) {
  Expr e = Expr::parse("x^3 - 0.1*x");
  Interval v = e.eval(Interval(0.2, 0.3));
  for (double x : {0.2, 0.25, 0.3}) {
    const double y = x * x * x - 0.1 * x;
    EXPECT_LE(v.lower(), y);
    EXPECT_GE(v.upper(), y);
  }
}

TEST(Expression, ParseErrors) {
  EXPECT_THROW(Expr::parse("x +"), ParseError);
  EXPECT_THROW(Expr::parse("foo(x)"), ParseError);
  EXPECT_THROW(Expr::parse("(x"), ParseError);
  EXPECT_THROW(Expr::parse("x^x"), ParseError);
  EXPECT_THROW(Expr::parse("z"), ParseError);
}

// --- smooth maps ---------------------------------------------------------------

TEST(SmoothMap, JetMatchesFiniteDifferences) {
  auto f = SmoothMap1D::from_string("x + 0.1*sin(3*x) + x^3/7");
  for (double x : {-0.7, 0.1, 1.3}) {
    Series<double> j = f.jet_at(x, 3);
    const double h = 1e-3;
    const double d1 = (f(x + h) - f(x - h)) / (2 * h);
    const double d2 = (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
    EXPECT_NEAR(j[0], f(x), 1e-15);
    EXPECT_NEAR(j[1], d1, 1e-6);
    EXPECT_NEAR(2 * j[2], d2, 1e-5);
  }
}

TEST(SmoothMap, CircleLiftCommutesWithTranslation) {
  auto f = SmoothMap1D::from_string("x + 0.05*sin(2*x)", Domain::circle_from(0, M_PI));
  for (double x : {0.3, 1.7, 2.9}) {
    EXPECT_NEAR(f(x + M_PI), f(x) + M_PI, 1e-13);
    EXPECT_NEAR(f(x - 2 * M_PI), f(x) - 2 * M_PI, 1e-13);
  }
}

TEST(SmoothMap, InverseRoundTrips) {
  auto f = SmoothMap1D::from_string("2*x + x^2", Domain::interval(-0.5, 2));
  for (double y : {-0.3, 0.01, 0.7, 3.0}) EXPECT_NEAR(f(f.inverse(y)), y, 1e-14);
}

TEST(SmoothMap, ReversingMapIsRejected) {
  auto f = SmoothMap1D::from_string("x^3 - x");
  EXPECT_THROW(f.check_diffeomorphism(-1, 1), GeometryError);
}

// --- fixed points --------------------------------------------------------------

TEST(FixedPoints, CubicPinchHasThreeRoots) {
  const double eps = 0.1;
  auto f = cubic_pinch(eps);
  auto pts = find_fixed_points(f, 0.0, 1.0);
  ASSERT_EQ(pts.size(), 3u);
  // Root accuracy is limited by rounding in f(y) − y over slopes of order ε³.
  EXPECT_NEAR(pts[0].p, 0.4, 1e-12);
  EXPECT_NEAR(pts[1].p, 0.5, 1e-12);
  EXPECT_NEAR(pts[2].p, 0.6, 1e-12);
  // f'(y) = 1 − ε(3u² − ε²): 1 − 2ε³ at the outer roots, 1 + ε³ in the middle.
  EXPECT_TRUE(pts[0].attracting());
  EXPECT_TRUE(pts[1].repelling());
  EXPECT_TRUE(pts[2].attracting());
  EXPECT_NEAR(pts[1].lambda, 1 + eps * eps * eps, 1e-14);
  EXPECT_NEAR(pts[2].lambda, 1 - 2 * eps * eps * eps, 1e-14);
}

TEST(FixedPoints, IrrationalRotationHasNone) {
  auto f = SmoothMap1D::from_generic([](const auto& x) { return x + (std::sqrt(2.0) - 1); }, Domain::circle_from(0, 1));
  EXPECT_TRUE(find_fixed_points(f, 0, 1).empty());
}

TEST(FixedPoints, RationalRotationWithWindingIsFound) {
  // x + 1 + 0.1 sin(2πx) on ℝ/ℤ: fixed on the circle at 0 and 1/2 with winding 1.
  auto f = SmoothMap1D::from_generic([](const auto& x) { return x + 1.0 + 0.1 * sin(2 * M_PI * x); }, Domain::circle_from(0, 1));
  auto pts = find_fixed_points(f, 0, 1);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].p, 0.0, 1e-15);
  EXPECT_NEAR(pts[1].p, 0.5, 1e-15);
  EXPECT_EQ(pts[0].winding, 1);
  EXPECT_TRUE(pts[0].repelling());
  EXPECT_TRUE(pts[1].attracting());
}

TEST(FixedPoints, ProductFactoryHasEvenlySpacedRoots) {
  const double eps = 0.1, delta = 0.1;
  for (int a : {1, 3, 5}) {
    auto f = SmoothMap1D::from_generic(
        [=](const auto& t) {
          auto prod = t;
          for (int j = 1; j <= a; ++j) prod = prod * (t - j * delta / a);
          return t + eps * prod;
        },
        Domain::line());
    auto pts = find_fixed_points(f, -delta / a / 2, delta + delta / a, 1e-13);
    ASSERT_EQ(pts.size(), static_cast<std::size_t>(a + 1)) << "a = " << a;
    for (int j = 0; j <= a; ++j) {
      EXPECT_NEAR(pts[static_cast<std::size_t>(j)].p, j * delta / a, 1e-8);
      EXPECT_TRUE(pts[static_cast<std::size_t>(j)].hyperbolic());
      // d'(jδ/a) has the sign of (−1)^{a−j}.
      EXPECT_EQ(pts[static_cast<std::size_t>(j)].repelling(), (a - j) % 2 == 0) << a << " " << j;
    }
  }
}

TEST(FixedPoints, TangencyIsKeptAndFlagged) {
  // x + (x − 0.3)²: a double root at 0.3 with multiplier 1.
  auto f = SmoothMap1D::from_string("x + (x - 0.3)^2");
  auto rep = find_fixed_points_report(f, 0, 1);
  ASSERT_EQ(rep.points.size(), 1u);
  EXPECT_NEAR(rep.points[0].p, 0.3, 1e-6);
  EXPECT_FALSE(rep.points[0].hyperbolic());
  EXPECT_FALSE(rep.clusters.empty());
}

TEST(FixedPoints, HiddenPairInsideOneCellIsFound) {
  // Two roots 1e-6 apart, far below the grid spacing; slopes of ±1e-6 limit
  // the attainable accuracy to about 1e-16/1e-6.
  auto f = SmoothMap1D::from_string("x + (x - 0.3)*(x - 0.300001)");
  auto pts = find_fixed_points(f, 0, 1, 1e-12);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].p, 0.3, 1e-10);
  EXPECT_NEAR(pts[1].p, 0.300001, 1e-10);
}

// --- Koenigs linearization ----------------------------------------------------

TEST(Koenigs, ExactJetOfHalfPlusSquare) {
  // ψ∘F = λψ for F = x/2 + x²: c₂ = 4, c₃ = 32/3.
  RationalJet F({Rational(1, 2), Rational(1), Rational(0), Rational(0), Rational(0), Rational(0)});
  RationalJet psi = koenigs_jet(F);
  EXPECT_EQ(psi.c(1), Rational(1));
  EXPECT_EQ(psi.c(2), Rational(4));
  EXPECT_EQ(psi.c(3), Rational(32, 3));
  RationalJet lhs = compose(psi, F);
  for (int k = 1; k <= F.order(); ++k) EXPECT_EQ(lhs.c(k), F.c(1) * psi.c(k)) << k;
}

TEST(Koenigs, LinearMapIsItsOwnLinearization) {
  auto f = SmoothMap1D::from_generic([](const auto& x) { return 0.5 * (x - 1.0) + 1.0; }, Domain::line());
  auto pts = find_fixed_points(f, 0, 2);
  ASSERT_EQ(pts.size(), 1u);
  Linearizer L = koenigs(f, pts[0]);
  EXPECT_EQ(L.jet().c(1), 1.0);
  EXPECT_EQ(L.jet().c(2), 0.0);
  EXPECT_EQ(L.jet().c(3), 0.0);
  for (double x : {0.2, 0.9, 1.05, 1.7}) EXPECT_NEAR(L(x), x - 1, 1e-14);
  EXPECT_LT(L.residual(), 1e-14);
}

TEST(Koenigs, AttractingCaseMatchesIterationLimit) {
  auto f = SmoothMap1D::from_string("x/2 + x^2", Domain::interval(-0.25, 0.4));
  auto pts = find_fixed_points(f, -0.2, 0.4);
  ASSERT_FALSE(pts.empty());
  Linearizer L = koenigs(f, pts[0]);
  ASSERT_NEAR(L.base(), 0, 1e-18);
  EXPECT_NEAR(L.jet().c(2), 4.0, 1e-12);
  EXPECT_NEAR(L.jet().c(3), 32.0 / 3, 1e-11);
  EXPECT_LT(L.residual(), 1e-10);

  // Oracle: ψ(x) = lim 2^n f^n(x), iterated in extended precision.
  auto oracle = [](long double x) {
    for (int n = 0; n < 64; ++n) x = x / 2 + x * x;
    return std::ldexp(x, 64);
  };
  for (double x : {-0.05, 0.01, 0.03, 0.06, 0.2, 0.3}) EXPECT_NEAR(L(x), static_cast<double>(oracle(x)), 1e-13 * (1 + std::fabs(x))) << x;
  ASSERT_LT(L.local_radius(), 0.2);  // the outer samples exercise the forward iteration
  const long double h = 1e-4L;
  const double c2 = static_cast<double>((oracle(h) + oracle(-h)) / (2 * h * h));
  EXPECT_NEAR(L.jet().c(2), c2, 1e-5);
}

TEST(Koenigs, RepellingCaseUsesInverseBranch) {
  auto f = SmoothMap1D::from_string("2*x + x^2", Domain::interval(-0.5, 1));
  auto pts = find_fixed_points(f, -0.5, 0.5);
  ASSERT_EQ(pts.size(), 1u);
  Linearizer L = koenigs(f, pts[0]);
  EXPECT_TRUE(L.uses_inverse_branch());
  EXPECT_LT(L.residual(), 1e-10);
  // Oracle: the inverse branch is g(y) = √(1+y) − 1, and ψ = lim 2^n g^n.
  auto oracle = [](long double x) {
    for (int n = 0; n < 64; ++n) x = x / (std::sqrt(1 + x) + 1);
    return std::ldexp(x, 64);
  };
  for (double x : {-0.1, 0.02, 0.08, 0.12, 0.4, 0.9}) EXPECT_NEAR(L(x), static_cast<double>(oracle(x)), 1e-13 * (1 + std::fabs(x))) << x;
  ASSERT_LT(L.local_radius(), 0.4);  // the outer samples exercise the inverse iteration
  // ψ∘f = 2ψ, so the jet solves (λ² − λ)c₂ = −1: c₂ = −1/2.
  EXPECT_NEAR(L.jet().c(2), -0.5, 1e-13);
}

TEST(Koenigs, ResidualBoundHoldsOnFreshSamples) {
  const double eps = 0.1;
  auto f = cubic_pinch(eps);
  for (double p : {0.4, 0.5, 0.6}) {
    Linearizer L = koenigs(f, point_at(f, p));
    EXPECT_LT(L.residual(), 1e-10) << p;
    EXPECT_LE(L.measure_residual(101), std::max(L.residual(), 1e-16) * 4) << p;
    // ψ' > 0 throughout the validity neighborhood.
    for (int i = 0; i <= 16; ++i) {
      const double x = L.lo() + (L.hi() - L.lo()) * i / 16;
      EXPECT_GT(L.jet_at(x, 1)[1], 0) << p << " " << x;
    }
  }
}

TEST(Koenigs, NormalizationQuotientIsConstant) {
  auto f = SmoothMap1D::from_string("x + 0.2*x*(1 - x)*(x - 0.4)", Domain::interval(-0.5, 1.5));
  auto p = point_at(f, 0.0);
  KoenigsOptions a, b;
  a.internal_order = 24;
  b.internal_order = 12;
  b.radius = 0.02;
  Linearizer La = koenigs(f, p, a), Lb = koenigs(f, p, b);
  ASSERT_NE(La.local_radius(), Lb.local_radius());
  const double ref = La(0.015) / Lb(0.015);
  EXPECT_GT(ref, 0);
  for (double x : {-0.015, -0.005, 0.004, 0.01}) EXPECT_NEAR(La(x) / Lb(x), ref, 1e-10) << x;
}

TEST(Koenigs, Preconditions) {
  auto id = SmoothMap1D::from_string("x + (x - 0.3)^2");
  HyperbolicFixedPoint fp;
  fp.p = 0.3;
  fp.lambda = 1;
  EXPECT_THROW(koenigs(id, fp), NonHyperbolicError);
  RationalJet flip({Rational(-1, 2), Rational(1)});
  EXPECT_THROW(koenigs_jet(flip), UnsupportedError);
  RationalJet tangent({Rational(1), Rational(1)});
  EXPECT_THROW(koenigs_jet(tangent), NonHyperbolicError);
}

// --- transition maps ------------------------------------------------------------

TEST(Transition, MobiusHasVanishingSchwarzian) {
  // f = 2x/(1+x): ψ^u = x/(1−x), ψ^s = (x−1)/x, so with v = q/(1−q)
  // ψ_q(t) = 1/v − 1/(v+t) = t/v² − t²/v³ + t³/v⁴: A = −2/v, S = 0.
  auto f = SmoothMap1D::from_generic([](const auto& x) { return 2.0 * x / (1.0 + x); }, Domain::interval(-0.5, 4));
  auto pts = find_fixed_points(f, -0.4, 3);
  ASSERT_EQ(pts.size(), 2u);
  for (double q : {0.2, 0.5, 0.8}) {
    auto rec = transition_map(f, pts[0], pts[1], q);
    const double v = q / (1 - q);
    EXPECT_NEAR(rec.psi_q.c(1), 1 / (v * v), 1e-9 / (v * v)) << q;
    EXPECT_NEAR(rec.psi_q.c(2), -1 / (v * v * v), 1e-9 / (v * v * v)) << q;
    EXPECT_NEAR(rec.psi_q.c(3), 1 / (v * v * v * v), 1e-8 / (v * v * v * v)) << q;
    EXPECT_NEAR(rec.A, -2 / v, 1e-8) << q;
    EXPECT_NEAR(rec.S, 0, 1e-8) << q;
    EXPECT_EQ(rec.signature.tau_A, -1);
    EXPECT_EQ(rec.signature.tau_S, 0);
  }
  auto rep = signature_stability(f, pts[0], pts[1], transition_map(f, pts[0], pts[1], 0.5));
  EXPECT_FALSE(rep.stable);
}

TEST(Transition, LinearMapIsNotHeteroclinic) {
  auto f = SmoothMap1D::from_generic([](const auto& x) { return 0.5 * (x - 1.0) + 1.0; }, Domain::line());
  auto pts = find_fixed_points(f, 0, 2);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_THROW(transition_map(f, pts[0], pts[0], 1.5), PreconditionError);
}

TEST(Transition, WrongBasinIsRejected) {
  auto f = cubic_pinch(0.1);
  // 0.45 lies between 0.4 and 0.5, outside the basin of 0.6.
  EXPECT_THROW(transition_map(f, point_at(f, 0.5), point_at(f, 0.6), 0.45), PreconditionError);
  EXPECT_THROW(transition_map(f, point_at(f, 0.6), point_at(f, 0.5), 0.55), PreconditionError);
}

TEST(Transition, IterateCapIsEnforced) {
  auto f = cubic_pinch(0.1);
  TransitionOptions opt;
  opt.iterate_cap = 10;
  EXPECT_THROW(transition_map(f, point_at(f, 0.5), point_at(f, 0.6), 0.55, opt), ConnectivityError);
}

namespace {

// Multiprecision oracle for the cubic pinch: ψ^s(x) = lim λ_s^{-n}(f^n(x) − p_s)
// and (ψ^u)^{-1}(v) = lim f^n(p_u + λ_u^{-n} v), both by forward iteration
// only; the jet of ψ_q then comes from finite differences.
struct PinchOracle {
  using R = boost::multiprecision::cpp_bin_float_50;
  R eps, pu, ps, lu, ls;

  explicit PinchOracle(int eps_den) : eps(R(1) / eps_den) {
    pu = R(1) / 2;
    ps = pu + eps;
    lu = 1 + eps * eps * eps;
    ls = 1 - 2 * eps * eps * eps;
  }
  R f(const R& y) const {
    const R u = y - R(1) / 2;
    return y - eps * u * (u - eps) * (u + eps);
  }
  R psi_s(R x) const {
    R scale = 1;
    while (abs(x - ps) > R("1e-20")) {
      x = f(x);
      scale /= ls;
    }
    return scale * (x - ps);
  }
  R psi_u_inv(const R& v) const {
    R x = v;
    long n = 0;
    while (abs(x) > R("1e-20")) {
      x /= lu;
      ++n;
    }
    x += pu;
    for (long i = 0; i < n; ++i) x = f(x);
    return x;
  }
  // ψ^u(q) by the secant method on the forward formula (rounding is amplified
  // by λ_u^n ≈ 1e19 there, so the stopping threshold sits above 1e-31).
  R psi_u(const R& q) const {
    R a = q - pu, b = a * R("1.01");
    R fa = psi_u_inv(a) - q, fb = psi_u_inv(b) - q;
    for (int i = 0; i < 30 && abs(fb) > R("1e-28"); ++i) {
      const R c = b - fb * (b - a) / (fb - fa);
      a = b;
      fa = fb;
      b = c;
      fb = psi_u_inv(b) - q;
    }
    return b;
  }
  // (c1, c2, c3) of ψ_q by fourth-order central differences; the third
  // derivative stencil is second order, so it is Richardson-extrapolated from
  // steps h and h/2.
  std::array<double, 3> psi_q(double q, double h) const {
    const R vq = psi_u(R(q));
    const R s0 = psi_s(R(q));
    auto g = [&](const R& t) { return psi_s(psi_u_inv(vq + t)) - s0; };
    const R H(h);
    const R gp1 = g(H), gm1 = g(-H), gp2 = g(2 * H), gm2 = g(-2 * H);
    const R gph = g(H / 2), gmh = g(-H / 2);
    const R d1 = (8 * (gp1 - gm1) - (gp2 - gm2)) / (12 * H);
    const R d2 = (-gp2 + 16 * gp1 + 16 * gm1 - gm2) / (12 * H * H);
    const R d3_h = (gp2 - 2 * gp1 + 2 * gm1 - gm2) / (2 * H * H * H);
    const R Hh = H / 2;
    const R d3_half = (gp1 - 2 * gph + 2 * gmh - gm1) / (2 * Hh * Hh * Hh);
    const R d3 = (4 * d3_half - d3_h) / 3;
    return {static_cast<double>(d1), static_cast<double>(d2 / 2), static_cast<double>(d3 / 6)};
  }
};

}  // namespace

TEST(Transition, CubicPinchPairMatchesMultiprecisionOracle) {
  auto f = cubic_pinch(0.1);
  auto pu = point_at(f, 0.5), ps = point_at(f, 0.6);
  const double q = 0.55;
  auto rec = transition_map(f, pu, ps, q);
  EXPECT_GT(rec.psi_q.c(1), 0);
  EXPECT_NE(rec.signature.tau_A, 0);

  PinchOracle oracle(10);
  auto c = oracle.psi_q(q, 1e-4);
  const double A = 2 * c[1] / c[0];
  const double S = 6 * c[2] / c[0] - 6 * (c[1] / c[0]) * (c[1] / c[0]);
  EXPECT_NEAR(rec.psi_q.c(1), c[0], 1e-8 * std::fabs(c[0]));
  EXPECT_NEAR(rec.A, A, 1e-6 * std::fabs(A));
  EXPECT_NEAR(rec.S, S, 1e-5 * std::max(1.0, std::fabs(S)));
  EXPECT_EQ(rec.signature.tau_A, A > 0 ? 1 : -1);
  EXPECT_EQ(rec.signature.tau_S, S > 0 ? 1 : -1);
}

TEST(Transition, SignatureIsInvariantAlongTheOrbit) {
  auto f = cubic_pinch(0.1);
  auto pu = point_at(f, 0.5), ps = point_at(f, 0.6);
  auto rec = transition_map(f, pu, ps, 0.55);
  auto rep = signature_stability(f, pu, ps, rec);
  EXPECT_TRUE(rep.stable);
  ASSERT_EQ(rep.signatures.size(), 8u);
  for (const auto& s : rep.signatures) EXPECT_EQ(s, rec.signature);
  auto shifted = transition_map(f, pu, ps, f(0.55));
  EXPECT_EQ(shifted.signature, rec.signature);
}

TEST(Transition, CircleMapPairAcrossTheSeam) {
  // On ℝ/ℤ, x + 0.02 sin(2πx): repeller 0, attractor 1/2; q = 0.9 flows
  // backward to the lift 1 of the repeller.
  auto f = SmoothMap1D::from_generic([](const auto& x) { return x + 0.02 * sin(2 * M_PI * x); }, Domain::circle_from(0, 1));
  auto pts = find_fixed_points(f, 0, 1);
  ASSERT_EQ(pts.size(), 2u);
  auto rec_a = transition_map(f, pts[0], pts[1], 0.1);
  auto rec_b = transition_map(f, pts[0], pts[1], 0.9);
  // The reflection x ↦ 1 − x conjugates f to itself, sending A to −A and fixing S.
  EXPECT_NEAR(rec_a.A, -rec_b.A, 1e-8);
  EXPECT_NEAR(rec_a.S, rec_b.S, 1e-7);
}
