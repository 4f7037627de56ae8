#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/jet.hpp"
#include "phflat/scalar.hpp"

namespace phflat {

// Eight k-flat germs F_1..F_8 with connectors G_1..G_8 (stored 0-based).
struct SynthesisProblem {
  int k = 1;
  std::array<Jet<Rational>, 8> F{make_identity(), make_identity(), make_identity(), make_identity(),
                                 make_identity(), make_identity(), make_identity(), make_identity()};
  std::array<Jet<Rational>, 8> G{make_identity(), make_identity(), make_identity(), make_identity(),
                                 make_identity(), make_identity(), make_identity(), make_identity()};
  long N = 1;                        // minimum exponent
  Rational box = Rational(1, 100);   // bound on ‖H_i − id‖
  long search_cap = 100000;          // cap on any exponent search
  int target_sign = 0;               // k = 1 only: requested sign of S(F̄); 0 = natural (sign of S(F_1))

 private:
  static Jet<Rational> make_identity() { return Jet<Rational>::identity(8); }
};

struct SynthesisResult {
  int k = 1;
  std::array<PolyGerm<Rational>, 8> H;
  std::array<long, 8> n{};
  Jet<Rational> composite = Jet<Rational>::identity(8);
  int flat_order = 0;
  bool relabeled = false;  // F_1 and F_3 were exchanged to reach target_sign
  // Bookkeeping of the dispatch (alpha/beta for k = 1, gamma for k = 2, alpha for k >= 3).
  Rational alpha = 0;
  Rational beta = 0;
  Rational gamma = 0;
};

struct EvenInterpolators {
  std::array<PolyGerm<Rational>, 4> H;  // H_2, H_4, H_6, H_8
  std::array<long, 4> n{};              // n_2, n_4, n_6, n_8
};

struct TwoFlatSolution {
  PolyGerm<Rational> H;
  long m = 0;
  long n = 0;
};

struct HigherFlatSolution {
  std::array<PolyGerm<Rational>, 4> R;
  long n = 0;
};

namespace detail {

inline Rational rq(long p, long q = 1) {
  Rational v(p, q);
  v.canonicalize();
  return v;
}

// Nearest integer (ties toward +inf), as a long.
inline long round_nearest(const Rational& x) {
  Rational shifted = x + Rational(1, 2);
  mpz_class fl;
  mpz_fdiv_q(fl.get_mpz_t(), shifted.get_num_mpz_t(), shifted.get_den_mpz_t());
  if (!fl.fits_slong_p()) return fl > 0 ? std::numeric_limits<long>::max() : std::numeric_limits<long>::min();
  return fl.get_si();
}

inline std::string show(const Rational& v) { return v.get_str(); }

inline void require_same_orders(const std::vector<const Jet<Rational>*>& jets, int min_order, const std::string& who) {
  const int K = jets.front()->order();
  for (auto* J : jets) {
    if (J->order() != K) throw ArgumentError(who + ": all jets must share one truncation order");
  }
  if (K < min_order) throw InsufficientOrderError(who + ": jets must have order >= " + std::to_string(min_order));
}

// (H∘F)^n as a jet of F's order.
inline Jet<Rational> corrected_power(const PolyGerm<Rational>& H, const Jet<Rational>& F, long n) {
  return power(compose(H.to_jet(F.order()), F), n);
}

}  // namespace detail

// Even-slot interpolators: H_{2j} is the degree-k Taylor polynomial of the
// time-1/n flow of Φ_j = G_{2j}^{-1}∘G_{2j-1}^{-1}, with the smallest n >= N
// whose corrector lies in the box. In exact arithmetic the n-th root of Φ_j's
// multiplier must be rational; exponents without one are skipped.
inline EvenInterpolators even_interpolators(const SynthesisProblem& P) {
  EvenInterpolators out;
  const int K = P.F[0].order();
  for (int j = 0; j < 4; ++j) {
    const Jet<Rational>& G_odd = P.G[static_cast<std::size_t>(2 * j)];
    const Jet<Rational>& G_even = P.G[static_cast<std::size_t>(2 * j + 1)];
    Jet<Rational> phi = compose(invert(G_even), invert(G_odd));
    const Rational lambda = phi.c(1);
    if (sgn(lambda) <= 0) throw OrientationError("even_interpolators: connectors must preserve orientation");
    const bool flat = lambda == 1;
    std::optional<Series<Rational>> logarithm;
    if (flat) logarithm = formal_logarithm(phi);
    bool found = false;
    for (long n = std::max(P.N, 1L); n <= P.search_cap; ++n) {
      const Rational mu = detail::rq(1, n);
      Jet<Rational> root = Jet<Rational>::identity(K);
      if (flat) {
        root = Jet<Rational>::from_series(detail::lie_flow(*logarithm, mu));
      } else {
        if (!exact_rational_power(lambda, mu)) continue;
        root = flow_embed(phi, mu);
      }
      PolyGerm<Rational> H = PolyGerm<Rational>::taylor(root, P.k);
      if (distance_to_identity(H) < P.box) {
        out.H[static_cast<std::size_t>(j)] = H;
        out.n[static_cast<std::size_t>(j)] = n;
        found = true;
        break;
      }
    }
    if (!found) {
      throw SearchExhaustedError("even_interpolators: no exponent n <= " + std::to_string(P.search_cap) + " puts H_" +
                                 std::to_string(2 * j + 2) + " inside the box (multiplier of Φ is " + detail::show(lambda) + ")");
    }
  }
  return out;
}

// Finds a 1-flat H = t + h t^2 with ‖H − id‖ < box and exponents m, n >= floor such
// that A(F3^n∘(H∘F1)^m) + alpha = 0 and S(F1)·(S(F3^n∘(H∘F1)^m) + beta) > 0.
inline TwoFlatSolution solve_two_flat(const Jet<Rational>& F1, const Jet<Rational>& F3, const Rational& alpha,
                                      const Rational& beta, const Rational& box, long floor = 1, long cap = 100000) {
  detail::require_same_orders({&F1, &F3}, 3, "solve_two_flat");
  if (flat_order(F1) < 1 || flat_order(F3) < 1) throw PreconditionError("solve_two_flat: F1 and F3 must be 1-flat");
  const auto a1 = invariants_AS(F1);
  const auto a3 = invariants_AS(F3);
  if (sgn(a1.A) * sgn(a3.A) >= 0) {
    throw PreconditionError("solve_two_flat: need A(F1)·A(F3) < 0, got A(F1) = " + detail::show(a1.A) + ", A(F3) = " + detail::show(a3.A));
  }
  if (sgn(a1.S) * sgn(a3.S) >= 0) {
    throw PreconditionError("solve_two_flat: need S(F1)·S(F3) < 0, got S(F1) = " + detail::show(a1.S) + ", S(F3) = " + detail::show(a3.S));
  }
  const Rational ratio1 = abs(a1.S / a1.A);
  const Rational ratio3 = abs(a3.S / a3.A);
  if (ratio1 == ratio3) throw DegenerateError("solve_two_flat: |S(F1)/A(F1)| = |S(F3)/A(F3)| = " + detail::show(ratio1));
  if (ratio1 < ratio3) {
    throw PreconditionError("solve_two_flat: need |S(F1)/A(F1)| > |S(F3)/A(F3)|, got " + detail::show(ratio1) + " < " + detail::show(ratio3));
  }
  const long start = std::max(floor, 1L);
  for (long m = start; m <= cap; ++m) {
    const Rational target = (-alpha - Rational(m) * a1.A) / a3.A;
    long n = detail::round_nearest(target);
    if (n < start) n = start;
    if (n > cap) continue;
    const Rational residual = Rational(m) * a1.A + Rational(n) * a3.A + alpha;
    const Rational AH = -residual / Rational(m);
    const Rational h2 = AH / 2;
    if (abs(h2) >= box) continue;
    const Rational SH = -6 * h2 * h2;
    const Rational S_total = Rational(n) * a3.S + Rational(m) * (a1.S + SH);
    if (sgn(a1.S) * sgn(S_total + beta) <= 0) continue;
    PolyGerm<Rational> H({Rational(1), h2});
    // Independent exact verification by composition.
    Jet<Rational> C = compose(power(F3, n), detail::corrected_power(H, F1, m));
    const auto ac = invariants_AS(C);
    if (ac.A + alpha != 0 || sgn(a1.S) * sgn(ac.S + beta) <= 0) {
      throw std::logic_error("solve_two_flat: exact verification disagrees with the additive bookkeeping");
    }
    return {H, m, n};
  }
  throw SearchExhaustedError("solve_two_flat: no exponent pair with m <= " + std::to_string(cap) + " fits the box");
}

// Finds H = t + h t^3 in the box and m, n >= floor with F3^n∘(H∘F1)^m = t + gamma t^3
// up to order 3, for 2-flat F1, F3 with cubic coefficients of opposite signs.
inline TwoFlatSolution solve_three_flat(const Jet<Rational>& F1, const Jet<Rational>& F3, const Rational& gamma,
                                        const Rational& box, long floor = 1, long cap = 100000) {
  detail::require_same_orders({&F1, &F3}, 3, "solve_three_flat");
  if (flat_order(F1) < 2 || flat_order(F3) < 2) throw PreconditionError("solve_three_flat: F1 and F3 must be 2-flat");
  const Rational b1 = F1.c(3);
  const Rational b3 = F3.c(3);
  if (sgn(b1) * sgn(b3) >= 0) {
    throw PreconditionError("solve_three_flat: need F1'''(0)·F3'''(0) < 0, got cubic coefficients " + detail::show(b1) + " and " + detail::show(b3));
  }
  const long start = std::max(floor, 1L);
  for (long m = start; m <= cap; ++m) {
    long n = detail::round_nearest((gamma - Rational(m) * b1) / b3);
    if (n < start) n = start;
    if (n > cap) continue;
    const Rational h3 = (gamma - Rational(n) * b3 - Rational(m) * b1) / Rational(m);
    if (abs(h3) >= box) continue;
    PolyGerm<Rational> H({Rational(1), Rational(0), h3});
    Jet<Rational> C = compose(power(F3.with_order(3), n), detail::corrected_power(H, F1.with_order(3), m));
    if (C != Jet<Rational>({Rational(1), Rational(0), gamma})) {
      throw std::logic_error("solve_three_flat: exact verification disagrees with the cubic bookkeeping");
    }
    return {H, m, n};
  }
  throw SearchExhaustedError("solve_three_flat: no exponent pair with m <= " + std::to_string(cap) + " fits the box");
}

namespace detail {

inline Jet<Rational> quadruple_product(const std::array<Jet<Rational>, 4>& Q, const std::array<PolyGerm<Rational>, 4>& R, long n) {
  const int K = Q[0].order();
  Jet<Rational> out = Jet<Rational>::identity(K);
  for (std::size_t i = 0; i < 4; ++i) out = compose(corrected_power(R[i], Q[i], n), out);
  return out;
}

inline bool is_target(const Jet<Rational>& C, int k, const Rational& alpha) {
  if (C.c(1) != 1) return false;
  for (int j = 2; j <= k; ++j) {
    if (sgn(C.c(j)) != 0) return false;
  }
  return C.c(k + 1) == alpha;
}

}  // namespace detail

// Finds 1-flat R_1..R_4 in the box and n >= floor with
// (R_4∘Q_4)^n∘…∘(R_1∘Q_1)^n = t + alpha t^{k+1} up to order k+1 (k >= 3).
// Candidates in order: identity correctors (when n·Σa = alpha is solvable),
// equal leading-order correctors, and a commutator construction whose
// t^{k+1} contribution grows like n^2 while every R_i shrinks.
inline HigherFlatSolution solve_higher_flat(const std::array<Jet<Rational>, 4>& Qin, const Rational& alpha, int k,
                                            const Rational& box, long floor = 1, long cap = 100000) {
  if (k < 3) throw ArgumentError("solve_higher_flat: k must be >= 3");
  detail::require_same_orders({&Qin[0], &Qin[1], &Qin[2], &Qin[3]}, k + 1, "solve_higher_flat");
  std::array<Jet<Rational>, 4> Q{Qin[0].with_order(k + 1), Qin[1].with_order(k + 1), Qin[2].with_order(k + 1), Qin[3].with_order(k + 1)};
  Rational sum_a = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (flat_order(Q[i]) < k) throw PreconditionError("solve_higher_flat: Q_" + std::to_string(i + 1) + " is not " + std::to_string(k) + "-flat");
    sum_a += Q[i].c(k + 1);
  }
  const long start = std::max(floor, 1L);
  const auto identity_R = std::array<PolyGerm<Rational>, 4>{PolyGerm<Rational>::identity(1), PolyGerm<Rational>::identity(1),
                                                            PolyGerm<Rational>::identity(1), PolyGerm<Rational>::identity(1)};
  auto accept = [&](const std::array<PolyGerm<Rational>, 4>& R, long n) -> std::optional<HigherFlatSolution> {
    for (const auto& r : R) {
      if (distance_to_identity(r) >= box) return std::nullopt;
    }
    if (!detail::is_target(detail::quadruple_product(Q, R, n), k, alpha)) return std::nullopt;
    return HigherFlatSolution{R, n};
  };
  // Identity correctors.
  if (sgn(sum_a) == 0 && sgn(alpha) == 0) {
    if (auto s = accept(identity_R, start)) return *s;
  } else if (sgn(sum_a) != 0) {
    Rational nq = alpha / sum_a;
    if (nq.get_den() == 1 && nq >= start && nq <= cap) {
      if (auto s = accept(identity_R, nq.get_num().get_si())) return *s;
    }
  }
  auto monomial = [&](const Rational& coeff, int degree) {
    std::vector<Rational> a(static_cast<std::size_t>(k + 1), Rational(0));
    a[0] = 1;
    a[static_cast<std::size_t>(degree - 1)] += coeff;
    return PolyGerm<Rational>(std::move(a));
  };
  // Taylor polynomial (degree k+1) of the time-s flow of sign·t^2 d/dt: t/(1 - sign·s·t).
  auto quadratic_flow = [&](const Rational& s, int sign) {
    std::vector<Rational> a(static_cast<std::size_t>(k + 1), Rational(0));
    Rational p = 1;
    for (int j = 1; j <= k + 1; ++j) {
      a[static_cast<std::size_t>(j - 1)] = p;
      p *= Rational(sign) * s;
    }
    return PolyGerm<Rational>(std::move(a));
  };
  // Exponents are tried along the doubling sequence start, 2·start, ... (capped).
  for (long n = start; n <= cap; n = (n >= cap) ? cap + 1 : std::min(cap, 2 * n)) {
    // Equal leading-order correctors t + r t^{k+1}.
    const Rational r = (alpha / Rational(n) - sum_a) / 4;
    if (abs(r) < box) {
      auto R = std::array<PolyGerm<Rational>, 4>{monomial(r, k + 1), monomial(r, k + 1), monomial(r, k + 1), monomial(r, k + 1)};
      if (auto s = accept(R, n)) return *s;
    }
    // Commutator of the flows of t^2 d/dt and t^k d/dt.
    const Rational step = box / 2;  // time step of the quadratic flow per iterate
    auto build = [&](const Rational& sigma) {
      return std::array<PolyGerm<Rational>, 4>{quadratic_flow(step, 1), monomial(sigma / Rational(n), k),
                                               quadratic_flow(step, -1), monomial(-sigma / Rational(n), k)};
    };
    const Rational c0 = detail::quadruple_product(Q, build(0), n).c(k + 1);
    const Rational c1 = detail::quadruple_product(Q, build(1), n).c(k + 1);
    if (c1 == c0) continue;
    const Rational sigma = (alpha - c0) / (c1 - c0);
    if (auto s = accept(build(sigma), n)) return *s;
  }
  throw SearchExhaustedError("solve_higher_flat: box " + detail::show(box) + " too small for the required correction at exponents <= " + std::to_string(cap));
}

// Checks the problem's invariants; throws with the failing inequality.
inline void validate(const SynthesisProblem& P) {
  if (P.k < 1) throw ArgumentError("synthesis: k must be >= 1");
  std::vector<const Jet<Rational>*> all;
  for (const auto& f : P.F) all.push_back(&f);
  for (const auto& g : P.G) all.push_back(&g);
  detail::require_same_orders(all, std::max(3, P.k + 1), "synthesis");
  for (std::size_t i = 0; i < 8; ++i) {
    if (flat_order(P.F[i]) < P.k) throw PreconditionError("synthesis: F_" + std::to_string(i + 1) + " is not " + std::to_string(P.k) + "-flat");
    if (sgn(P.G[i].c(1)) <= 0) throw OrientationError("synthesis: connector G_" + std::to_string(i + 1) + " reverses orientation");
  }
  if (P.N < 1) throw ArgumentError("synthesis: N must be >= 1");
  if (sgn(P.box) <= 0) throw ArgumentError("synthesis: box must be positive");
  if (P.k == 1) {
    const auto a1 = invariants_AS(P.F[0]);
    const auto a3 = invariants_AS(P.F[2]);
    if (sgn(a1.A) * sgn(a3.A) >= 0) throw PreconditionError("synthesis: A(F_1)·A(F_3) < 0 fails (" + detail::show(a1.A) + ", " + detail::show(a3.A) + ")");
    if (sgn(a1.S) * sgn(a3.S) >= 0) throw PreconditionError("synthesis: S(F_1)·S(F_3) < 0 fails (" + detail::show(a1.S) + ", " + detail::show(a3.S) + ")");
    const Rational r1 = abs(a1.S / a1.A), r3 = abs(a3.S / a3.A);
    if (r1 == r3) throw DegenerateError("synthesis: |S(F_1)/A(F_1)| = |S(F_3)/A(F_3)|");
    if (r1 < r3) throw PreconditionError("synthesis: |S(F_1)/A(F_1)| > |S(F_3)/A(F_3)| fails (" + detail::show(r1) + " <= " + detail::show(r3) + ")");
  } else if (P.k == 2) {
    if (sgn(P.F[0].c(3)) * sgn(P.F[2].c(3)) >= 0) throw PreconditionError("synthesis: S(F_1)·S(F_3) < 0 fails for the 2-flat inputs");
  }
}

// Composite G_8∘(H_8∘F_8)^{n_8}∘…∘G_1∘(H_1∘F_1)^{n_1}, by exact composition.
inline Jet<Rational> assemble_composite(const SynthesisProblem& P, const std::array<PolyGerm<Rational>, 8>& H, const std::array<long, 8>& n) {
  const int K = P.F[0].order();
  Jet<Rational> out = Jet<Rational>::identity(K);
  for (std::size_t i = 0; i < 8; ++i) {
    out = compose(detail::corrected_power(H[i], P.F[i], n[i]), out);
    out = compose(P.G[i], out);
  }
  return out;
}

// Raises flatness by one: returns correctors, exponents and the (k+1)-flat composite.
inline SynthesisResult synthesize(SynthesisProblem P) {
  bool relabeled = false;
  if (P.k == 1 && P.target_sign != 0) {
    const int natural = sgn(invariants_AS(P.F[0]).S);
    if (natural != P.target_sign) {
      std::swap(P.F[0], P.F[2]);
      relabeled = true;
      try {
        validate(P);
      } catch (const PreconditionError& e) {
        throw PreconditionError(std::string("synthesis: requested sign of S(F̄) is not reachable by exchanging F_1 and F_3: ") + e.what());
      }
    }
  }
  validate(P);
  const int K = P.F[0].order();
  const int k = P.k;
  EvenInterpolators even = even_interpolators(P);
  SynthesisResult R;
  R.k = k;
  R.relabeled = relabeled;
  for (int j = 0; j < 4; ++j) {
    R.H[static_cast<std::size_t>(2 * j + 1)] = even.H[static_cast<std::size_t>(j)];
    R.n[static_cast<std::size_t>(2 * j + 1)] = even.n[static_cast<std::size_t>(j)];
  }
  // F̂ = F̄_8∘F̄_6∘F̄_4∘F̄_2 with F̄_{2j} = G_{2j}∘(H_{2j}∘F_{2j})^{n_{2j}}∘G_{2j-1}.
  Jet<Rational> Fhat = Jet<Rational>::identity(K);
  for (int j = 0; j < 4; ++j) {
    const std::size_t odd = static_cast<std::size_t>(2 * j), even_slot = odd + 1;
    Jet<Rational> block = compose(P.G[even_slot], compose(detail::corrected_power(R.H[even_slot], P.F[even_slot], R.n[even_slot]), P.G[odd]));
    Fhat = compose(block, Fhat);
  }
  const PolyGerm<Rational> id = PolyGerm<Rational>::identity(1);
  if (k == 1 || k == 2) {
    R.H[2] = R.H[4] = R.H[6] = id;
    R.n[4] = R.n[6] = P.N;
    const auto h = invariants_AS(Fhat);
    const auto a5 = invariants_AS(P.F[4]);
    const auto a7 = invariants_AS(P.F[6]);
    R.alpha = h.A + Rational(P.N) * (a5.A + a7.A);
    R.beta = h.S + Rational(P.N) * (a5.S + a7.S);
    TwoFlatSolution s;
    if (k == 1) {
      s = solve_two_flat(P.F[0], P.F[2], R.alpha, R.beta, P.box, P.N, P.search_cap);
    } else {
      R.gamma = -R.beta / 6;
      s = solve_three_flat(P.F[0], P.F[2], R.gamma, P.box, P.N, P.search_cap);
    }
    R.H[0] = s.H;
    R.n[0] = s.m;
    R.n[2] = s.n;
  } else {
    // Coefficient of t^{k+1} in F̂ (= F̂^{(k+1)}(0)/(k+1)!).
    R.alpha = -Fhat.c(k + 1);
    auto s = solve_higher_flat({P.F[0], P.F[2], P.F[4], P.F[6]}, R.alpha, k, P.box, P.N, P.search_cap);
    for (int i = 0; i < 4; ++i) {
      R.H[static_cast<std::size_t>(2 * i)] = s.R[static_cast<std::size_t>(i)];
      R.n[static_cast<std::size_t>(2 * i)] = s.n;
    }
  }
  R.composite = assemble_composite(P, R.H, R.n);
  R.flat_order = flat_order(R.composite);
  if (R.flat_order < k + 1) {
    throw std::logic_error("synthesize: composite is only " + std::to_string(R.flat_order) + "-flat after correction");
  }
  if (k == 1 && sgn(invariants_AS(R.composite).S) * sgn(invariants_AS(P.F[0]).S) <= 0) {
    throw std::logic_error("synthesize: S(F̄)·S(F_1) > 0 fails after correction");
  }
  return R;
}

// One level of an inductive chain: the k-flat germs produced by the previous level.
struct ChainLevel {
  int k = 1;
  std::vector<SynthesisResult> results;
};

// Builds level-k problems from a pool of k-flat germs: problem i uses the pool
// cyclically from index i, with F_1 = pool[i] and (for k = 2) F_3 the next germ
// whose cubic coefficient has the opposite sign.
inline std::vector<SynthesisProblem> problems_from_pool(const std::vector<Jet<Rational>>& pool, int k, std::size_t count,
                                                        const std::array<Jet<Rational>, 8>& G, long N, const Rational& box, long cap) {
  if (pool.empty()) throw ArgumentError("problems_from_pool: empty pool");
  std::vector<SynthesisProblem> out;
  for (std::size_t i = 0; i < count; ++i) {
    SynthesisProblem P;
    P.k = k;
    P.G = G;
    P.N = N;
    P.box = box;
    P.search_cap = cap;
    const std::size_t sz = pool.size();
    std::size_t partner = (i + 1) % sz;
    if (k == 2) {
      const int s1 = sgn(pool[i % sz].c(3));
      bool found = false;
      for (std::size_t d = 1; d < sz; ++d) {
        if (sgn(pool[(i + d) % sz].c(3)) == -s1) {
          partner = (i + d) % sz;
          found = true;
          break;
        }
      }
      if (!found) throw PreconditionError("problems_from_pool: no 2-flat germ with opposite cubic sign available");
    }
    P.F[0] = pool[i % sz];
    P.F[2] = pool[partner];
    for (std::size_t slot : {1u, 3u, 4u, 5u, 6u, 7u}) P.F[slot] = pool[(i + slot) % sz];
    out.push_back(P);
  }
  return out;
}

// Runs level-1 problems, then feeds the outputs upward until target_k-flat
// germs are produced. Level sizes: every level below the last produces eight
// germs (the arity of the next synthesis); the last level produces one.
inline std::vector<ChainLevel> synthesize_chain(const std::vector<SynthesisProblem>& level1, int target_k) {
  if (level1.empty()) throw ArgumentError("synthesize_chain: no level-1 problems");
  std::vector<ChainLevel> levels;
  ChainLevel first;
  first.k = level1.front().k;
  for (const auto& P : level1) first.results.push_back(synthesize(P));
  levels.push_back(first);
  const SynthesisProblem& proto = level1.front();
  while (levels.back().k + 1 < target_k) {
    const int k = levels.back().k + 1;
    std::vector<Jet<Rational>> pool;
    for (const auto& r : levels.back().results) pool.push_back(r.composite);
    const std::size_t count = (k + 1 < target_k) ? 8 : 1;
    ChainLevel lvl;
    lvl.k = k;
    for (const auto& P : problems_from_pool(pool, k, count, proto.G, proto.N, proto.box, proto.search_cap)) lvl.results.push_back(synthesize(P));
    levels.push_back(lvl);
  }
  return levels;
}

}  // namespace phflat
