#include <gtest/gtest.h>

#include <random>

#include "phflat/jet.hpp"

using namespace phflat;
using Q = Rational;

namespace {

Q q(long p, long d = 1) {
  Q v(p, d);
  v.canonicalize();
  return v;
}

Jet<Q> J(std::vector<Q> c) { return Jet<Q>(std::move(c)); }

Q random_rational(std::mt19937_64& rng, int span = 9) {
  std::uniform_int_distribution<long> num(-span, span);
  std::uniform_int_distribution<long> den(1, span);
  return q(num(rng), den(rng));
}

Jet<Q> random_jet(std::mt19937_64& rng, int K, bool one_flat = false) {
  std::vector<Q> c(static_cast<std::size_t>(K));
  for (auto& x : c) x = random_rational(rng);
  if (one_flat) {
    c[0] = 1;
  } else {
    while (sgn(c[0]) == 0) c[0] = random_rational(rng);
  }
  return J(c);
}

// Oracle: coefficients of outer(inner(t)) by expanding every power of inner
// with plain nested loops over exponent lists (no Horner, no series class).
std::vector<Q> naive_compose(const std::vector<Q>& outer, const std::vector<Q>& inner, int K) {
  // outer/inner hold c_1..c_K.
  std::vector<Q> result(static_cast<std::size_t>(K + 1), Q(0));
  std::vector<Q> power(static_cast<std::size_t>(K + 1), Q(0));
  power[0] = 1;  // inner^0
  for (int j = 1; j <= K; ++j) {
    std::vector<Q> next(static_cast<std::size_t>(K + 1), Q(0));
    for (int a = 0; a <= K; ++a) {
      for (int b = 1; a + b <= K; ++b) next[static_cast<std::size_t>(a + b)] += power[static_cast<std::size_t>(a)] * inner[static_cast<std::size_t>(b - 1)];
    }
    power = next;
    for (int k = 0; k <= K; ++k) result[static_cast<std::size_t>(k)] += outer[static_cast<std::size_t>(j - 1)] * power[static_cast<std::size_t>(k)];
  }
  return std::vector<Q>(result.begin() + 1, result.end());
}

// Oracle: Lagrange reversion [t^n] F^{-1} = (1/n) [u^{n-1}] (u / F(u))^n.
std::vector<Q> lagrange_inverse(const std::vector<Q>& F, int K) {
  // phi(u) = u / F(u) = 1 / (c1 + c2 u + ...), as a power series in u.
  std::vector<Q> g(static_cast<std::size_t>(K), Q(0));
  for (int k = 0; k < K; ++k) g[static_cast<std::size_t>(k)] = F[static_cast<std::size_t>(k)];
  std::vector<Q> phi(static_cast<std::size_t>(K), Q(0));
  phi[0] = Q(1) / g[0];
  for (int k = 1; k < K; ++k) {
    Q acc = 0;
    for (int j = 1; j <= k; ++j) acc += g[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(k - j)];
    phi[static_cast<std::size_t>(k)] = -acc / g[0];
  }
  std::vector<Q> out;
  std::vector<Q> pw(static_cast<std::size_t>(K), Q(0));
  pw[0] = 1;
  for (int n = 1; n <= K; ++n) {
    std::vector<Q> next(static_cast<std::size_t>(K), Q(0));
    for (int a = 0; a < K; ++a) {
      for (int b = 0; a + b < K; ++b) next[static_cast<std::size_t>(a + b)] += pw[static_cast<std::size_t>(a)] * phi[static_cast<std::size_t>(b)];
    }
    pw = next;
    out.push_back(pw[static_cast<std::size_t>(n - 1)] / Q(n));
  }
  return out;
}

}  // namespace

TEST(JetCompose, HandComputedExample) {
  auto outer = J({1, 1});
  auto inner = J({2, 0});
  EXPECT_EQ(compose(outer, inner), J({2, 4}));
}

TEST(JetCompose, IdentityIsNeutral) {
  std::mt19937_64 rng(7);
  auto F = random_jet(rng, 6);
  auto id = Jet<Q>::identity(6);
  EXPECT_EQ(compose(id, F), F);
  EXPECT_EQ(compose(F, id), F);
}

TEST(JetCompose, OrderMismatchIsArgumentError) {
  EXPECT_THROW(compose(J({1, 1}), J({1, 1, 1})), ArgumentError);
}

TEST(JetCompose, MatchesNaiveExpansionOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 1 + trial % 8;
    auto F = random_jet(rng, K);
    auto G = random_jet(rng, K);
    EXPECT_EQ(compose(F, G).coefficients(), naive_compose(F.coefficients(), G.coefficients(), K));
    EXPECT_EQ(compose(F, G).c(1), F.c(1) * G.c(1));
  }
}

TEST(JetCompose, AssociativeExactly) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    auto F = random_jet(rng, 8), G = random_jet(rng, 8), H = random_jet(rng, 8);
    EXPECT_EQ(compose(F, compose(G, H)), compose(compose(F, G), H));
  }
}

TEST(JetInvert, Examples) {
  EXPECT_EQ(invert(J({2})), J({q(1, 2)}));
  EXPECT_EQ(invert(J({1, 1, 0})), J({1, -1, 2}));
  EXPECT_EQ(invert(Jet<Q>::identity(4)), Jet<Q>::identity(4));
}

TEST(JetInvert, MatchesLagrangeReversionAndIsTwoSided) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const int K = 1 + trial % 8;
    auto F = random_jet(rng, K);
    auto G = invert(F);
    EXPECT_EQ(G.coefficients(), lagrange_inverse(F.coefficients(), K));
    EXPECT_EQ(compose(F, G), Jet<Q>::identity(K));
    EXPECT_EQ(compose(G, F), Jet<Q>::identity(K));
  }
}

TEST(JetInvert, ZeroLinearCoefficientRejected) {
  EXPECT_THROW(Jet<Q>({0, 1}), NonInvertibleError);
}

TEST(JetInvariants, Examples) {
  auto lin = invariants_AS(J({5, 0, 0}));
  EXPECT_EQ(lin.A, 0);
  EXPECT_EQ(lin.S, 0);
  auto quad = invariants_AS(J({1, 1, 0}));
  EXPECT_EQ(quad.A, 2);
  EXPECT_EQ(quad.S, -6);
  auto cub = invariants_AS(J({1, 0, 1}));
  EXPECT_EQ(cub.A, 0);
  EXPECT_EQ(cub.S, 6);
  EXPECT_THROW(invariants_AS(J({1, 1})), InsufficientOrderError);
}

TEST(JetInvariants, DerivativeDefinitionOracle) {
  // A = F''/F', S = F'''/F' - 3/2 (F''/F')^2 with F^{(j)}(0) = j! c_j.
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    auto F = random_jet(rng, 5);
    Q d1 = F.c(1), d2 = 2 * F.c(2), d3 = 6 * F.c(3);
    auto as = invariants_AS(F);
    EXPECT_EQ(as.A, Q(d2 / d1));
    EXPECT_EQ(as.S, Q(d3 / d1 - Q(3, 2) * (d2 / d1) * (d2 / d1)));
  }
}

TEST(JetInvariants, CocycleIdentitiesExact) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    auto F = random_jet(rng, 8), G = random_jet(rng, 8);
    auto aF = invariants_AS(F), aG = invariants_AS(G), aGF = invariants_AS(compose(G, F));
    const Q d = F.c(1);
    EXPECT_EQ(aGF.A, Q(aG.A * d + aF.A));
    EXPECT_EQ(aGF.S, Q(aG.S * d * d + aF.S));
  }
}

TEST(JetInvariants, AdditiveOnOneFlatGerms) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    auto F = random_jet(rng, 6, true), G = random_jet(rng, 6, true);
    auto aF = invariants_AS(F), aG = invariants_AS(G), aGF = invariants_AS(compose(G, F));
    EXPECT_EQ(aGF.A, Q(aG.A + aF.A));
    EXPECT_EQ(aGF.S, Q(aG.S + aF.S));
  }
}

TEST(JetConjugate, LinearScalingOfInvariants) {
  // 1-flat F with A = 2; H = 3t scales A by 3.
  auto F = J({1, 1, 5, 0});
  auto R = conjugate(F, J({3, 0, 0, 0}));
  EXPECT_EQ(invariants_AS(R).A, 6);
  EXPECT_EQ(conjugate(F, Jet<Q>::identity(4)), F);
}

TEST(JetConjugate, DirectCompositionOracleKeepsSigns) {
  auto F = J({1, 1, 1});
  auto H = J({1, 1, 0});
  auto R = conjugate(F, H);
  // Oracle: H^{-1} = t - t^2 + 2t^3, expanded by hand-free naive composition.
  auto Hinv = lagrange_inverse(H.coefficients(), 3);
  auto direct = naive_compose(Hinv, naive_compose(F.coefficients(), H.coefficients(), 3), 3);
  EXPECT_EQ(R.coefficients(), direct);
  EXPECT_EQ(signature(R), signature(F));
}

TEST(JetConjugate, OneFlatScalingLawAndFlatnessPreserved) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    auto F = random_jet(rng, 8, true);
    auto H = random_jet(rng, 8);
    auto R = conjugate(F, H);
    auto aF = invariants_AS(F), aR = invariants_AS(R);
    const Q h1 = H.c(1);
    EXPECT_EQ(aR.A, Q(aF.A * h1));
    EXPECT_EQ(aR.S, Q(aF.S * h1 * h1));
    EXPECT_EQ(flat_order(R), flat_order(F));
  }
}

TEST(JetFlatness, Examples) {
  EXPECT_EQ(flat_order(Jet<Q>::identity(5)), 5);
  EXPECT_EQ(flat_order(J({1, 0, 1})), 2);
  EXPECT_EQ(flat_order(J({2, 0})), 0);
  EXPECT_EQ(flat_order(J({1, 3, 0})), 1);
}

TEST(JetSignature, Examples) {
  EXPECT_EQ(signature(J({1, 1, -10})), (SignPair{1, -1}));
  EXPECT_EQ(signature(J({1, 0, 1})), (SignPair{0, 1}));
  EXPECT_EQ(signature(Jet<Q>::identity(3)), (SignPair{0, 0}));
  EXPECT_THROW(signature(J({2, 1, 1})), PreconditionError);
}

TEST(JetFlow, LinearAndTrivialCases) {
  auto F = J({4, 0, 0});
  EXPECT_EQ(flow_embed(F, q(1, 2)), J({2, 0, 0}));
  EXPECT_EQ(flow_embed(J({1, 1, 0, 0}), Q(0)), Jet<Q>::identity(4));
  EXPECT_THROW(flow_embed(J({-1, 0}), Q(1)), OrientationError);
}

TEST(JetFlow, HalfFlowSquaresToGerm) {
  auto F = J({1, 1, 0, 0, 0, 0, 0, 0});
  auto half = flow_embed(F, q(1, 2));
  EXPECT_EQ(compose(half, half), F);
  EXPECT_EQ(flow_embed(F, Q(1)), F);
}

TEST(JetFlow, AdditivityOnRandomTimes) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    auto F = random_jet(rng, 6, true);
    Q a = random_rational(rng), b = random_rational(rng);
    EXPECT_EQ(compose(flow_embed(F, a), flow_embed(F, b)), flow_embed(F, Q(a + b)));
  }
}

TEST(JetFlow, HyperbolicLinearPartWithRationalRoot) {
  auto F = J({9, 1, -2, 3, 0});
  auto third = flow_embed(F, q(1, 2));
  EXPECT_EQ(third.c(1), 3);
  EXPECT_EQ(compose(third, third), F);
  EXPECT_THROW(flow_embed(J({2, 1, 0}), q(1, 2)), ArgumentError);
}

TEST(JetFlow, BinaryVariantIsCloseToExact) {
  auto F = J({1, q(1, 3), q(-1, 5), q(2, 7), 0});
  auto exact = flow_embed(F, q(1, 3));
  auto approx = flow_embed(to_double(F), 1.0 / 3.0);
  for (int k = 1; k <= 5; ++k) EXPECT_NEAR(approx.c(k), exact.c(k).get_d(), 1e-13);
}

TEST(PolyNorm, Examples) {
  EXPECT_EQ(poly_norm(PolyGerm<Q>({1, 0, -2})), 3);
  EXPECT_EQ(poly_norm(PolyGerm<Q>({0})), 0);
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    PolyGerm<Q> P({random_rational(rng), random_rational(rng), random_rational(rng)});
    PolyGerm<Q> R({random_rational(rng), random_rational(rng)});
    EXPECT_LE(poly_norm(P + R), Q(poly_norm(P) + poly_norm(R)));
  }
}

TEST(JetText, RoundTripAndPadding) {
  auto F = J({1, q(-3, 7), 0, 2});
  EXPECT_EQ(to_text(F), "jet(4)[1, -3/7, 0, 2]");
  EXPECT_EQ(parse_jet(to_text(F)), F);
  EXPECT_EQ(parse_jet("jet(3)[1, 1/2]"), J({1, q(1, 2), 0}));
  EXPECT_EQ(parse_jet("jet(2)[0.25, -1e-1]"), J({q(1, 4), q(-1, 10)}));
  EXPECT_THROW(parse_jet("jet(1)[1, 2]"), ParseError);
  EXPECT_THROW(parse_jet("jt(1)[1]"), ParseError);
}
