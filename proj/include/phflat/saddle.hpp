#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/highprec.hpp"
#include "phflat/jet.hpp"
#include "phflat/matrix.hpp"
#include "phflat/mpoly.hpp"

namespace phflat {

// One linear saddle chart: (x, y, z) ↦ (λx, s·y, u·z), 0 < s < 1 < u.
struct SaddleChart {
  Rational lambda;
  Rational s;
  Rational u;
};

// Two saddles joined by a heteroclinic loop. Saddle 1 has an expanding
// center (λ_1 > 1), saddle 2 a contracting one (0 < λ_2 < 1). The transition
// Φ_1 goes from a neighborhood of q_1 = (0, 0, z_a) on the unstable axis of
// chart 1 to a neighborhood of (0, y_b, 0) on the stable axis of chart 2;
// Φ_2 goes from (0, 0, z_c) in chart 2 to (0, y_d, 0) in chart 1. Each Φ is a
// polynomial in the offsets (x, y, z − z_a) (resp. z − z_c) and returns
// absolute coordinates of the next chart.
struct SaddleModel {
  SaddleChart chart1;
  SaddleChart chart2;
  Rational z_a, y_b, z_c, y_d;
  PolyMap<Rational> phi1;  // 3 variables, degree ≤ 3
  PolyMap<Rational> phi2;
  double ball = 0.25;  // half-width of the polyballs around the transition points

  void validate() const {
    if (!(chart1.lambda > 1)) throw PreconditionError("saddle model: λ_1 must exceed 1");
    if (!(chart2.lambda > 0 && chart2.lambda < 1)) throw PreconditionError("saddle model: λ_2 must lie in (0, 1)");
    for (const SaddleChart* c : {&chart1, &chart2}) {
      if (!(c->s > 0 && c->s < 1 && c->u > 1)) throw NonHyperbolicError("saddle model: each chart needs 0 < s < 1 < u");
    }
    check_transition(phi1, y_b, "Φ_1");
    check_transition(phi2, y_d, "Φ_2");
  }

  // The center component of Φ_1 restricted to the unstable axis, t ↦ Φ_1,x(t, 0, 0):
  // the transition map G at the heteroclinic point, as a 3-jet.
  Jet<Rational> transition_jet() const {
    Series<Rational> t = Series<Rational>::variable(Rational(0), 3);
    const Series<Rational> zero(3);
    return Jet<Rational>::from_series(phi1[0].substitute(std::vector<Series<Rational>>{t, zero, zero}));
  }

  // ∂x̃/∂x of the two transitions at their base points.
  Rational mu1() const { return phi1[0].coeff({1, 0, 0}); }
  Rational mu2() const { return phi2[0].coeff({1, 0, 0}); }

  // The model used by the convergence experiment: G(t) = t + t², so
  // A(G) = 2 and S(G) = −6; Jacobian determinants 1/2 and 83/100.
  static SaddleModel bundled(bool affine = false) {
    SaddleModel m;
    m.chart1 = {Rational(3, 2), Rational(1, 4), Rational(5)};
    m.chart2 = {Rational(4, 5), Rational(3, 10), Rational(4)};
    m.z_a = m.y_b = m.z_c = m.y_d = Rational(1, 2);
    auto term = [](MPoly<Rational>& p, Rational c, int ex, int ey, int ez) {
      c.canonicalize();
      p.set({ex, ey, ez}, p.coeff({ex, ey, ez}) + c);
    };
    const int K = 3;
    MPoly<Rational> x1(3, K), y1(3, K), z1(3, K);
    term(x1, 1, 1, 0, 0);
    term(x1, Rational(1, 2), 0, 0, 1);
    term(x1, Rational(1, 5), 0, 1, 0);
    term(y1, m.y_b, 0, 0, 0);
    term(y1, Rational(1, 2), 0, 0, 1);
    term(y1, Rational(4, 5), 0, 1, 0);
    term(z1, Rational(3, 5), 0, 1, 0);
    term(z1, 1, 0, 0, 1);
    MPoly<Rational> x2(3, K), y2(3, K), z2(3, K);
    term(x2, 1, 1, 0, 0);
    term(x2, Rational(1, 5), 0, 1, 0);
    term(y2, m.y_d, 0, 0, 0);
    term(y2, Rational(7, 10), 0, 0, 1);
    term(y2, Rational(1, 2), 0, 1, 0);
    term(z2, Rational(-9, 10), 0, 1, 0);
    term(z2, Rational(2, 5), 0, 0, 1);
    if (!affine) {
      term(x1, 1, 2, 0, 0);
      term(x1, Rational(3, 10), 1, 0, 1);
      term(y1, Rational(1, 5), 2, 0, 0);
      term(z1, Rational(3, 10), 1, 0, 1);
      term(x2, Rational(1, 2), 2, 0, 0);
      term(x2, Rational(3, 10), 1, 0, 1);
      term(x2, Rational(1, 10), 3, 0, 0);
      term(y2, Rational(1, 10), 2, 0, 0);
    }
    m.phi1 = {x1, y1, z1};
    m.phi2 = {x2, y2, z2};
    return m;
  }

 private:
  static void check_transition(const PolyMap<Rational>& phi, const Rational& y_target, const char* name) {
    if (phi.size() != 3) throw ArgumentError(std::string("saddle model: ") + name + " needs three components");
    for (const auto& c : phi)
      if (c.nvars() != 3) throw ArgumentError(std::string("saddle model: ") + name + " must be a polynomial in three offsets");
    if (phi[0][0] != 0 || phi[1][0] != y_target || phi[2][0] != 0) throw PreconditionError(std::string("saddle model: ") + name + " must send its base point to the stable axis point");
    Mat<Rational> J(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        std::vector<int> e(3, 0);
        e[static_cast<std::size_t>(j)] = 1;
        J(i, j) = phi[static_cast<std::size_t>(i)].coeff(e);
      }
    if (J(0, 0) <= 0) throw OrientationError(std::string("saddle model: ") + name + " must preserve the center orientation");
    J.inverse();  // throws when the transition is singular at its base point
  }
};

// Result of one (m_1, m_2) run.
struct LoopReturn {
  long m1 = 0, m2 = 0;
  std::vector<double> periodic_point;  // chart-1 coordinates of p*
  Jet<double> F = Jet<double>::identity(3);  // center return map along the center curve, in the offset t
  double multiplier = 0;           // F'(0)
  double nominal_multiplier = 0;   // λ_1^{m_1} λ_2^{m_2} μ_1 μ_2 with μ_i at the heteroclinic points
  double leg_multiplier = 0;       // λ_1^{m_1} λ_2^{m_2} F_1'(0) F_3'(0) along the curve
  double A = 0, S = 0;             // of F
  double A_ref = 0, S_ref = 0;     // of the transition G at q
  double A_F1 = 0, S_F1 = 0;
  double A_F3 = 0, S_F3 = 0;
  double A_F3_scaled = 0;          // A(F_3) λ_2^{m_2}
  double slope_F1 = 0, slope_F3 = 0;  // F_1'(0), F_3'(0) along the curve
  int newton_iterations = 0;
  // The same data at full precision: p*, the center curve C(t) = p* + (t, σ(t), η(t))
  // and the center return map F.
  std::vector<HighFloat> point_hp;
  Series<HighFloat> sigma, eta, f;
};

namespace detail {

using HP = HighFloat;

inline HP hp(const Rational& q) { return ScalarOps<HP>::from_rational(q); }

inline HP hp_pow(const HP& b, long n) {
  HP r(1), p = b;
  bool neg = n < 0;
  unsigned long k = static_cast<unsigned long>(neg ? -n : n);
  while (k) {
    if (k & 1) r *= p;
    k >>= 1;
    if (k) p *= p;
  }
  return neg ? HP(1) / r : r;
}

// The return map R = L_1^{m_1} ∘ Φ_2 ∘ L_2^{m_2} ∘ Φ_1 evaluated on any ring
// element (scalars or truncated polynomials), in absolute chart-1 coordinates.
// The intermediate chart-2 point is written to `mid` when requested.
template <class S>
std::vector<S> return_map(const SaddleModel& M, const std::vector<PolyMap<HP>>& phis, long m1, long m2, const std::vector<S>& p, std::vector<S>* mid = nullptr) {
  const HP za = hp(M.z_a), zc = hp(M.z_c);
  std::vector<S> a{p[0], p[1], p[2] - za};
  std::vector<S> q(3);
  for (int i = 0; i < 3; ++i) q[static_cast<std::size_t>(i)] = phis[0][static_cast<std::size_t>(i)].template substitute<S>(a);
  const HP l2 = hp_pow(hp(M.chart2.lambda), m2), s2 = hp_pow(hp(M.chart2.s), m2), u2 = hp_pow(hp(M.chart2.u), m2);
  q[0] = q[0] * l2;
  q[1] = q[1] * s2;
  q[2] = q[2] * u2;
  if (mid) *mid = q;
  std::vector<S> b{q[0], q[1], q[2] - zc};
  std::vector<S> r(3);
  for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(i)] = phis[1][static_cast<std::size_t>(i)].template substitute<S>(b);
  r[0] = r[0] * hp_pow(hp(M.chart1.lambda), m1);
  r[1] = r[1] * hp_pow(hp(M.chart1.s), m1);
  r[2] = r[2] * hp_pow(hp(M.chart1.u), m1);
  return r;
}

inline std::vector<MPoly<HP>> lift(const std::vector<HP>& p, int degree) {
  std::vector<MPoly<HP>> v;
  for (int i = 0; i < 3; ++i) v.push_back(MPoly<HP>::variable(3, degree, i, p[static_cast<std::size_t>(i)]));
  return v;
}

inline Mat<HP> jacobian(const std::vector<MPoly<HP>>& F) {
  Mat<HP> J(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::vector<int> e(3, 0);
      e[static_cast<std::size_t>(j)] = 1;
      J(i, j) = F[static_cast<std::size_t>(i)].coeff(e);
    }
  return J;
}

inline double to_d(const HP& v) { return v.convert_to<double>(); }

inline Jet<double> jet_d(const Series<HP>& s) {
  std::vector<double> c;
  for (int k = 1; k <= s.order(); ++k) c.push_back(to_d(s[k]));
  return Jet<double>(std::move(c));
}

template <class T>
ASPair<T> as_of(const Series<T>& s) {
  const T r2 = s[2] / s[1], r3 = s[3] / s[1];
  return {T(2) * r2, T(6) * r3 - T(6) * r2 * r2};
}

}  // namespace detail

// Locates the periodic point p* of the loop near q_1 by Newton's method on
// R(p) = p (in 100-digit arithmetic, since R mixes factors ~u^{m} and ~s^{m}),
// computes the 3-jet of the center curve through p* from the invariance
// equation R(C(t)) = C(F(t)), and transports it through the four legs.
inline LoopReturn loop_return_jet(const SaddleModel& M, long m1, long m2) {
  using detail::HP;
  M.validate();
  if (m1 < 1 || m2 < 1) throw ArgumentError("loop_return_jet: exponents must be positive");
  const std::vector<PolyMap<HP>> phis{{M.phi1[0].convert<HP>(), M.phi1[1].convert<HP>(), M.phi1[2].convert<HP>()},
                                      {M.phi2[0].convert<HP>(), M.phi2[1].convert<HP>(), M.phi2[2].convert<HP>()}};
  LoopReturn out;
  out.m1 = m1;
  out.m2 = m2;

  // Newton from q_1 with the stable coordinate placed on the incoming leg.
  std::vector<HP> p{HP(0), detail::hp(M.y_d) * detail::hp_pow(detail::hp(M.chart1.s), m1), detail::hp(M.z_a)};
  // The residual bottoms out at rounding level amplified by the hyperbolic
  // factors (~1e-79 for the exponents in use): accept once it is small and
  // has stopped decreasing.
  const HP tol = HP("1e-60");
  HP previous(-1);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const auto Fp = detail::return_map<MPoly<HP>>(M, phis, m1, m2, detail::lift(p, 1));
    Mat<HP> J = detail::jacobian(Fp);
    std::vector<HP> g(3);
    HP gn(0), pn(1);
    for (int i = 0; i < 3; ++i) {
      g[static_cast<std::size_t>(i)] = Fp[static_cast<std::size_t>(i)][0] - p[static_cast<std::size_t>(i)];
      J(i, i) -= HP(1);
      gn = std::max(gn, boost::multiprecision::abs(g[static_cast<std::size_t>(i)]));
    }
    out.newton_iterations = it;
    if (gn <= tol && (gn == 0 || (previous >= 0 && gn > previous / 16))) {
      converged = true;
      break;
    }
    previous = gn;
    const Mat<HP> d = J.inverse() * Mat<HP>::column(g);
    for (int i = 0; i < 3; ++i) {
      p[static_cast<std::size_t>(i)] -= d(i, 0);
      pn = std::max(pn, boost::multiprecision::abs(p[static_cast<std::size_t>(i)]));
    }
    if (!boost::multiprecision::isfinite(pn) || pn > 1e6) break;
  }
  if (!converged) throw GeometryError("loop_return_jet: Newton's method found no periodic point for (m1, m2) = (" + std::to_string(m1) + ", " + std::to_string(m2) + ")");

  // The orbit must stay within the polyballs around the transition points.
  std::vector<HP> mid;
  detail::return_map<HP>(M, phis, m1, m2, p, &mid);
  const HP ball(M.ball);
  auto outside = [&](const HP& a, const HP& b, const HP& c) { return boost::multiprecision::abs(a) > ball || boost::multiprecision::abs(b) > ball || boost::multiprecision::abs(c) > ball; };
  if (outside(p[0], p[1], p[2] - detail::hp(M.z_a)) || outside(mid[0], mid[1], mid[2] - detail::hp(M.z_c))) {
    throw GeometryError("loop_return_jet: the periodic orbit leaves the transition polyballs");
  }
  for (const auto& v : p) out.periodic_point.push_back(detail::to_d(v));

  // 3-jet of R at p* in offset coordinates.
  const int K = 3;
  auto Rj = detail::return_map<MPoly<HP>>(M, phis, m1, m2, detail::lift(p, K));
  for (int i = 0; i < 3; ++i) Rj[static_cast<std::size_t>(i)][0] = HP(0);
  const Mat<HP> D = detail::jacobian(Rj);

  // Center eigenvalue: the root of the characteristic polynomial near 1.
  const HP tr = D(0, 0) + D(1, 1) + D(2, 2);
  const HP c2 = D(0, 0) * D(1, 1) - D(0, 1) * D(1, 0) + D(0, 0) * D(2, 2) - D(0, 2) * D(2, 0) + D(1, 1) * D(2, 2) - D(1, 2) * D(2, 1);
  const HP det = D(0, 0) * (D(1, 1) * D(2, 2) - D(1, 2) * D(2, 1)) - D(0, 1) * (D(1, 0) * D(2, 2) - D(1, 2) * D(2, 0)) + D(0, 2) * (D(1, 0) * D(2, 1) - D(1, 1) * D(2, 0));
  HP mu(1);
  for (int it = 0; it < 200; ++it) {
    const HP f = ((mu - tr) * mu + c2) * mu - det;
    const HP df = (HP(3) * mu - HP(2) * tr) * mu + c2;
    const HP step = f / df;
    mu -= step;
    if (boost::multiprecision::abs(step) <= HP("1e-90") * boost::multiprecision::abs(mu)) break;
  }

  // Center curve C(t) = p* + (t, σ(t), η(t)) and F with R(C(t)) = C(F(t)).
  Series<HP> sigma(K), eta(K), f(K);
  f[1] = mu;
  {
    // (D − μI)(1, σ_1, η_1)ᵀ = 0 from the last two rows.
    Mat<HP> A(2, 2, {D(1, 1) - mu, D(1, 2), D(2, 1), D(2, 2) - mu});
    const Mat<HP> rhs = Mat<HP>::column({-D(1, 0), -D(2, 0)});
    const Mat<HP> v = A.inverse() * rhs;
    sigma[1] = v(0, 0);
    eta[1] = v(1, 0);
  }
  for (int k = 2; k <= K; ++k) {
    const Series<HP> t = Series<HP>::variable(HP(0), K);
    const std::vector<Series<HP>> arg{t, sigma, eta};
    std::vector<Series<HP>> lhs(3);
    for (int i = 0; i < 3; ++i) lhs[static_cast<std::size_t>(i)] = Rj[static_cast<std::size_t>(i)].substitute(arg);
    const std::vector<Series<HP>> rhs{f, sigma.compose(f), eta.compose(f)};
    std::vector<HP> E(3);
    for (int i = 0; i < 3; ++i) E[static_cast<std::size_t>(i)] = lhs[static_cast<std::size_t>(i)][k] - rhs[static_cast<std::size_t>(i)][k];
    const HP muk = detail::hp_pow(mu, k);
    // Unknowns (σ_k, η_k, f_k): D(0, σ_k, η_k)ᵀ − (f_k, σ_1 f_k + μ^k σ_k, η_1 f_k + μ^k η_k)ᵀ = −E.
    Mat<HP> A(3, 3, {D(0, 1), D(0, 2), HP(-1), D(1, 1) - muk, D(1, 2), -sigma[1], D(2, 1), D(2, 2) - muk, -eta[1]});
    const Mat<HP> u = A.inverse() * Mat<HP>::column({-E[0], -E[1], -E[2]});
    sigma[k] = u(0, 0);
    eta[k] = u(1, 0);
    f[k] = u(2, 0);
  }

  // Legs along the curve: X_1 = F_1, X_2 = F_2∘F_1 = λ_2^{m_2} X_1,
  // X_3 = F_3∘X_2, F = λ_1^{m_1} X_3; hence F_3 = X_3∘X_2^{-1}.
  const Series<HP> t = Series<HP>::variable(HP(0), K);
  std::vector<Series<HP>> C1{t + p[0], sigma + p[1], eta + (p[2] - detail::hp(M.z_a))};
  // Φ_1 is a polynomial, so substituting series with constant terms is exact.
  std::vector<Series<HP>> Y(3);
  for (int i = 0; i < 3; ++i) Y[static_cast<std::size_t>(i)] = phis[0][static_cast<std::size_t>(i)].substitute(C1);
  Series<HP> X1 = Y[0];
  X1[0] = HP(0);
  const HP l2 = detail::hp_pow(detail::hp(M.chart2.lambda), m2);
  std::vector<Series<HP>> Z{Y[0] * l2, Y[1] * detail::hp_pow(detail::hp(M.chart2.s), m2), Y[2] * detail::hp_pow(detail::hp(M.chart2.u), m2) - detail::hp(M.z_c)};
  std::vector<Series<HP>> W(3);
  for (int i = 0; i < 3; ++i) W[static_cast<std::size_t>(i)] = phis[1][static_cast<std::size_t>(i)].substitute(Z);
  Series<HP> X3 = W[0];
  X3[0] = HP(0);
  const Series<HP> X2 = X1 * l2;
  const Series<HP> X2inv = invert(Jet<HP>::from_series(X2)).series();
  const Series<HP> F3 = X3.compose(X2inv);

  const HP l1 = detail::hp_pow(detail::hp(M.chart1.lambda), m1);
  const auto asF = detail::as_of(f), as1 = detail::as_of(X1), as3 = detail::as_of(F3);
  const auto ref = invariants_AS(M.transition_jet());
  out.point_hp = p;
  out.sigma = sigma;
  out.eta = eta;
  out.f = f;
  out.F = detail::jet_d(f);
  out.multiplier = detail::to_d(f[1]);
  out.nominal_multiplier = detail::to_d(l1 * l2 * detail::hp(M.mu1()) * detail::hp(M.mu2()));
  out.leg_multiplier = detail::to_d(l1 * l2 * X1[1] * F3[1]);
  out.A = detail::to_d(asF.A);
  out.S = detail::to_d(asF.S);
  out.A_ref = ref.A.get_d();
  out.S_ref = ref.S.get_d();
  out.A_F1 = detail::to_d(as1.A);
  out.S_F1 = detail::to_d(as1.S);
  out.A_F3 = detail::to_d(as3.A);
  out.S_F3 = detail::to_d(as3.S);
  out.A_F3_scaled = detail::to_d(as3.A * l2);
  out.slope_F1 = detail::to_d(X1[1]);
  out.slope_F3 = detail::to_d(F3[1]);
  return out;
}

// The return map itself (not a jet) at a chart-1 point, in 100-digit arithmetic.
inline std::vector<HighFloat> saddle_return_point(const SaddleModel& M, long m1, long m2, const std::vector<HighFloat>& p) {
  const std::vector<PolyMap<HighFloat>> phis{{M.phi1[0].convert<HighFloat>(), M.phi1[1].convert<HighFloat>(), M.phi1[2].convert<HighFloat>()},
                                             {M.phi2[0].convert<HighFloat>(), M.phi2[1].convert<HighFloat>(), M.phi2[2].convert<HighFloat>()}};
  return detail::return_map<HighFloat>(M, phis, m1, m2, p);
}

// Exponent pairs with λ_1^{m_1} λ_2^{m_2} μ_1 μ_2 inside (lo, hi), one per m_2
// in [m2_min, m2_max] (the m_1 closest to balance), in increasing m_2.
inline std::vector<std::pair<long, long>> balanced_schedule(const SaddleModel& M, long m2_min, long m2_max, double lo = 0.9, double hi = 1.1) {
  const double L1 = std::log(M.chart1.lambda.get_d()), L2 = std::log(M.chart2.lambda.get_d());
  const double Lmu = std::log(M.mu1().get_d() * M.mu2().get_d());
  std::vector<std::pair<long, long>> out;
  for (long m2 = m2_min; m2 <= m2_max; ++m2) {
    const long m1 = std::lround(-(m2 * L2 + Lmu) / L1);
    if (m1 < 1) continue;
    const double v = std::exp(m1 * L1 + m2 * L2 + Lmu);
    if (v > lo && v < hi) out.push_back({m1, m2});
  }
  return out;
}

// Runs loop_return_jet over a schedule with up to `workers` concurrent runs;
// results are returned in schedule order.
inline std::vector<LoopReturn> sweep_schedule(const SaddleModel& M, const std::vector<std::pair<long, long>>& schedule, int workers = 1) {
  std::vector<LoopReturn> out(schedule.size());
  workers = std::max(1, workers);
  for (std::size_t start = 0; start < schedule.size(); start += static_cast<std::size_t>(workers)) {
    std::vector<std::future<LoopReturn>> batch;
    for (std::size_t i = start; i < schedule.size() && i < start + static_cast<std::size_t>(workers); ++i) {
      batch.push_back(std::async(std::launch::async, [&M, mm = schedule[i]] { return loop_return_jet(M, mm.first, mm.second); }));
    }
    for (std::size_t j = 0; j < batch.size(); ++j) out[start + j] = batch[j].get();
  }
  return out;
}

}  // namespace phflat
