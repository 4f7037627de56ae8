#pragma once

#include <array>
#include <vector>

#include "phflat/jet.hpp"
#include "phflat/synthesis.hpp"

namespace phflat::fixtures {

namespace detail {

// Jet of order 8 with c_j = coeffs[j-1]·scale^{j-1}, i.e. the germ conjugated
// by t -> scale·t. Small scales keep the germs near the identity.
inline Jet<Rational> scaled_jet(std::vector<Rational> coeffs, const Rational& scale) {
  coeffs.resize(8, Rational(0));
  Rational p = 1;
  for (auto& c : coeffs) {
    c *= p;
    p *= scale;
  }
  return Jet<Rational>(coeffs);
}

}  // namespace detail

// A family of level-1 synthesis problems (eight 1-flat germs and eight
// connectors each). Problem i has S(F_1) < 0 for even i and S(F_1) > 0 for odd
// i, so the composites come with both cubic signs and can be chained. Every
// problem satisfies the sign and ratio conditions required for k = 1. The
// connectors come in inverse pairs so their multipliers multiply to one and
// the even-slot interpolators stay exact.
inline std::vector<SynthesisProblem> chain_level1_problems(std::size_t count = 8) {
  const Rational d(1, 10);
  auto J = [&](std::vector<Rational> c) { return detail::scaled_jet(std::move(c), d); };
  const Jet<Rational> g1 = J({1, Rational(1, 3)});
  const Jet<Rational> g3 = J({1, Rational(-1, 4), Rational(1, 2)});
  const Jet<Rational> g5 = J({1, Rational(1, 2)});
  const Jet<Rational> g7 = J({1, 0, Rational(1, 5)});
  std::vector<SynthesisProblem> out;
  for (std::size_t i = 0; i < count; ++i) {
    SynthesisProblem P;
    P.k = 1;
    const Rational s = (i % 2) ? 1 : -1;
    P.F = {J({1, 1, -10 * s}),
           J({1, 0, Rational(static_cast<long>(i % 4) + 1)}),
           J({1, -1, 2 * s}),
           J({1, 0, -1}),
           J({1, 0, Rational(static_cast<long>(i % 3))}),
           J({1, 0, -2}),
           J({1, 0, 1}),
           J({1, 0, Rational(1 - static_cast<long>(i % 2))})};
    P.G = {g1, invert(g1), g3, invert(g3), g5, invert(g5), g7, invert(g7)};
    out.push_back(P);
  }
  return out;
}

// The single fixed octuple used for one-step k = 1 synthesis.
inline SynthesisProblem keq1a_octuple() { return chain_level1_problems(1).front(); }

}  // namespace phflat::fixtures
