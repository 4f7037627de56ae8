#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/fixed_points.hpp"
#include "phflat/jet.hpp"
#include "phflat/series.hpp"
#include "phflat/smooth_map.hpp"

namespace phflat {

// Jet of the Koenigs function ψ (ψ(0) = 0, ψ'(0) = 1) of a germ F with
// multiplier λ = F'(0) ∉ {0, 1}, solved order by order from ψ∘F = λ·ψ: the
// order-m coefficient enters with factor λ^m − λ, which never vanishes.
template <class T>
Jet<T> koenigs_jet(const Jet<T>& F) {
  const int K = F.order();
  const T lambda = F.c(1);
  if (ScalarOps<T>::sign(lambda) <= 0) throw UnsupportedError("koenigs: multiplier must be positive (orientation-preserving)");
  if (lambda == T(1)) throw NonHyperbolicError("koenigs: multiplier 1 is not hyperbolic");
  std::vector<T> c(static_cast<std::size_t>(K), T(0));
  c[0] = T(1);
  T lambda_m = lambda;
  for (int m = 2; m <= K; ++m) {
    lambda_m *= lambda;
    const T e = compose(Jet<T>(c), F).c(m);  // with c_m = 0
    c[static_cast<std::size_t>(m - 1)] = e / (lambda - lambda_m);
  }
  return Jet<T>(std::move(c));
}

struct KoenigsOptions {
  int internal_order = 24;       // order of the local Koenigs polynomial
  double radius = 0;             // validity radius ρ; 0 = auto (distance to the nearest other fixed point / 8)
  double search_radius = 1.0;    // window for the nearest-fixed-point search when radius is automatic
  int residual_samples = 257;    // samples of the validity neighborhood for the residual bound
  long max_iterations = 2000000;
};

// Koenigs linearizer at a hyperbolic fixed point p: ψ(p) = 0, ψ'(p) = 1 and
// ψ∘f = λ·ψ near p. For λ < 1 the evaluator is the limit λ^{-n}·ψ_K(f^n(x) − p)
// with the local polynomial ψ_K; for λ > 1 it iterates the inverse branch and
// uses λ^{n}·ψ_K(f^{-n}(x) − p). Evaluation on series transports jets along
// the orbit by composition.
class Linearizer {
 public:
  Linearizer() = default;

  double base() const { return p_; }
  double multiplier() const { return lambda_; }
  bool uses_inverse_branch() const { return lambda_ > 1; }
  // Jet of ψ at p to order 3 (c_1 = 1).
  DoubleJet jet() const { return poly_.with_order(3); }
  const DoubleJet& local_polynomial() const { return poly_; }
  double validity_radius() const { return rho_; }
  double local_radius() const { return r_local_; }
  double lo() const { return p_ - rho_; }
  double hi() const { return p_ + rho_; }
  double residual() const { return residual_; }

  double operator()(double x) const {
    double y = x;
    long n = 0;
    while (std::fabs(offset(y)) > r_local_) {
      if (++n > max_iterations_) throw ConvergenceError("linearizer: orbit does not approach the fixed point");
      y = uses_inverse_branch() ? f_->inverse(y) : (*f_)(y);
    }
    return scale(n) * poly_.series().eval(offset(y));
  }

  // ψ applied to a series argument (its jet at the constant term).
  Series<double> apply(const Series<double>& x) const {
    Series<double> y = x;
    long n = 0;
    while (std::fabs(offset(y[0])) > r_local_) {
      if (++n > max_iterations_) throw ConvergenceError("linearizer: orbit does not approach the fixed point");
      y = uses_inverse_branch() ? f_->apply_inverse(y) : f_->apply(y);
    }
    Series<double> s = y;
    s[0] = offset(y[0]);
    Series<double> out = horner(s);
    return out * scale(n);
  }

  // Jet of ψ at x to the given order (entry 0 = ψ(x)).
  Series<double> jet_at(double x, int order) const { return apply(Series<double>::variable(x, order)); }

  // sup |ψ∘f − λψ| over `samples` points of the validity neighborhood; for
  // repellers the pairs are taken as (f^{-1}(x), x) so both stay inside.
  double measure_residual(int samples) const {
    double worst = 0;
    for (int i = 0; i < samples; ++i) {
      const double x = lo() + (hi() - lo()) * i / std::max(1, samples - 1);
      double r;
      if (uses_inverse_branch()) {
        const double xp = f_->inverse(x);
        r = std::fabs((*this)(x) - lambda_ * (*this)(xp));
      } else {
        r = std::fabs((*this)((*f_)(x)) - lambda_ * (*this)(x));
      }
      worst = std::max(worst, r);
    }
    return worst;
  }

 private:
  friend Linearizer koenigs(const SmoothMap1D&, const HyperbolicFixedPoint&, const KoenigsOptions&);

  // y − p for the lift of p nearest to y (circle maps).
  double offset(double y) const {
    double d = y - p_;
    if (f_->is_circle()) d -= std::round(d / f_->period()) * f_->period();
    return d;
  }

  // λ^{-n} after n forward steps, λ^{n} after n inverse steps.
  double scale(long n) const { return std::pow(lambda_, uses_inverse_branch() ? static_cast<double>(n) : -static_cast<double>(n)); }

  Series<double> horner(const Series<double>& s) const {
    const int K = poly_.order();
    Series<double> acc = Series<double>::constant(poly_.c(K), s.order());
    for (int k = K - 1; k >= 1; --k) {
      acc = acc * s;
      acc[0] += poly_.c(k);
    }
    return acc * s;
  }

  std::shared_ptr<const SmoothMap1D> f_;
  double p_ = 0;
  double lambda_ = 1;
  DoubleJet poly_ = DoubleJet::identity(3);
  double rho_ = 0;
  double r_local_ = 0;
  double residual_ = 0;
  long max_iterations_ = 0;
};

// Builds the linearizer at p (see Linearizer). The validity radius defaults to
// one eighth of the distance to the nearest other fixed point.
inline Linearizer koenigs(const SmoothMap1D& f, const HyperbolicFixedPoint& fp, const KoenigsOptions& opt = {}) {
  const double lambda = f.derivative(fp.p);
  if (!(lambda > 0)) throw UnsupportedError("koenigs: orientation-reversing multiplier " + std::to_string(lambda));
  if (std::fabs(lambda - 1) <= 1e-12 || !fp.hyperbolic()) throw NonHyperbolicError("koenigs: fixed point " + std::to_string(fp.p) + " is not hyperbolic");
  if (std::fabs(f.displacement(fp.p) - fp.winding * (f.is_circle() ? f.period() : 0.0)) > 1e-9) {
    throw PreconditionError("koenigs: " + std::to_string(fp.p) + " is not a fixed point");
  }
  Linearizer L;
  L.f_ = std::make_shared<SmoothMap1D>(f);
  L.p_ = fp.p;
  L.lambda_ = lambda;
  L.max_iterations_ = opt.max_iterations;
  DoubleJet germ = f.germ_at(fp.p, opt.internal_order);
  L.poly_ = koenigs_jet(germ);

  double rho = opt.radius;
  if (rho <= 0) {
    double R = opt.search_radius;
    const double a = fp.p - opt.search_radius, b = fp.p + opt.search_radius;
    FixedPointOptions fo;
    fo.cells_per_period = 4096;
    for (const auto& q : find_fixed_points_report(f, a, b, fo).points) {
      const double d = std::fabs(q.p - fp.p);
      if (d > 1e-9) R = std::min(R, d);
    }
    rho = R / 8;
  }
  L.rho_ = rho;
  // Switch to the polynomial once its estimated truncation error is below
  // double resolution: |c_K| r^{K-1} + |c_{K-1}| r^{K-2} < 1e-17.
  const int K = L.poly_.order();
  double r = rho;
  auto tail = [&](double s) { return std::fabs(L.poly_.c(K)) * std::pow(s, K - 1) + std::fabs(L.poly_.c(K - 1)) * std::pow(s, K - 2); };
  while (r > 1e-300 && tail(r) > 1e-17) r *= 0.5;
  L.r_local_ = std::min(r, rho);
  L.residual_ = L.measure_residual(opt.residual_samples);
  return L;
}

// Heteroclinic record: repeller p_u, attractor p_s, a point q on the orbit
// connecting them, the transition jet ψ_q with ψ^s(q') − ψ^s(q) =
// ψ_q(ψ^u(q') − ψ^u(q)) and its signature (sgn A, sgn S), zeroed inside the
// deadband |·| < 10·tol.
struct HeteroclinicRecord {
  double p_u = 0, p_s = 0, q = 0;
  double lambda_u = 0, lambda_s = 0;
  DoubleJet psi_q = DoubleJet::identity(3);
  double A = 0, S = 0;
  SignPair signature;
  long forward_steps = 0, backward_steps = 0;
};

struct TransitionOptions {
  double tol = 1e-9;
  long iterate_cap = 1000000;
  KoenigsOptions koenigs;
};

namespace detail {

inline double circle_distance(const SmoothMap1D& f, double a, double b) {
  double d = a - b;
  if (f.is_circle()) {
    const double L = f.period();
    d -= std::round(d / L) * L;
  }
  return std::fabs(d);
}

inline int deadband_sign(double v, double tol) { return std::fabs(v) < 10 * tol ? 0 : (v > 0 ? 1 : -1); }

}  // namespace detail

inline HeteroclinicRecord transition_map(const SmoothMap1D& f, const HyperbolicFixedPoint& pu, const HyperbolicFixedPoint& ps, double q,
                                         const TransitionOptions& opt = {}) {
  const double lu = f.derivative(pu.p), ls = f.derivative(ps.p);
  if (!(lu > 1)) throw PreconditionError("transition_map: p_u = " + std::to_string(pu.p) + " is not a repeller (multiplier " + std::to_string(lu) + ")");
  if (!(ls > 0 && ls < 1)) throw PreconditionError("transition_map: p_s = " + std::to_string(ps.p) + " is not an attractor (multiplier " + std::to_string(ls) + ")");
  if (detail::circle_distance(f, q, pu.p) < 1e-12 || detail::circle_distance(f, q, ps.p) < 1e-12) {
    throw PreconditionError("transition_map: q coincides with a fixed point");
  }
  Linearizer Ls = koenigs(f, ps, opt.koenigs);
  Linearizer Lu = koenigs(f, pu, opt.koenigs);

  HeteroclinicRecord rec;
  rec.p_u = pu.p;
  rec.p_s = ps.p;
  rec.q = q;
  rec.lambda_u = lu;
  rec.lambda_s = ls;

  // q must flow forward into p_s's neighborhood and backward into p_u's.
  // Orbits of an increasing interval map are monotone, so a growing distance
  // means another basin; on the circle an orbit that stalls away from the
  // target has converged to a different fixed point.
  auto reaches = [&](double start, double target, double radius, bool forward, long& steps) {
    double x = start;
    double best = detail::circle_distance(f, x, target);
    for (steps = 0; steps <= opt.iterate_cap; ++steps) {
      const double d = detail::circle_distance(f, x, target);
      if (d <= radius) return true;
      if (!f.is_circle() && d > best * (1 + 1e-12) + 1e-15) return false;
      best = std::min(best, d);
      const double next = forward ? f(x) : f.inverse(x);
      if (std::fabs(next - x) <= 1e-15 * std::max(1.0, std::fabs(x))) return false;
      x = next;
    }
    throw ConnectivityError("transition_map: orbit of q needs more than " + std::to_string(opt.iterate_cap) + " iterates");
  };
  long fs = 0, bs = 0;
  if (!reaches(q, ps.p, Ls.validity_radius(), true, fs)) throw PreconditionError("transition_map: q is not in the basin of p_s");
  if (!reaches(q, pu.p, Lu.validity_radius(), false, bs)) throw PreconditionError("transition_map: q is not on the unstable side of p_u");
  rec.forward_steps = fs;
  rec.backward_steps = bs;

  // Align q's lift with the fixed points' lifts for circle maps.
  Series<double> xq = Series<double>::variable(q, 3);
  Series<double> js = Ls.apply(xq);
  Series<double> ju = Lu.apply(xq);
  js[0] = 0.0;
  ju[0] = 0.0;
  DoubleJet Js = DoubleJet::from_series(js), Ju = DoubleJet::from_series(ju);
  rec.psi_q = compose(Js, invert(Ju));
  if (!(rec.psi_q.c(1) > 0)) throw OrientationError("transition_map: ψ_q reverses orientation");
  auto as = invariants_AS(rec.psi_q);
  rec.A = as.A;
  rec.S = as.S;
  rec.signature = {detail::deadband_sign(rec.A, opt.tol), detail::deadband_sign(rec.S, opt.tol)};
  return rec;
}

struct StabilityReport {
  bool stable = false;
  std::vector<SignPair> signatures;  // for q → f^j(q), j = −3..3, then with tol halved
};

// Recomputes the signature along the orbit of q and with the tolerance halved.
inline StabilityReport signature_stability(const SmoothMap1D& f, const HyperbolicFixedPoint& pu, const HyperbolicFixedPoint& ps,
                                           const HeteroclinicRecord& rec, const TransitionOptions& opt = {}) {
  StabilityReport out;
  std::vector<double> qs;
  double x = rec.q;
  for (int j = 0; j < 3; ++j) x = f.inverse(x);
  for (int j = -3; j <= 3; ++j) {
    qs.push_back(x);
    x = f(x);
  }
  for (double q : qs) out.signatures.push_back(transition_map(f, pu, ps, q, opt).signature);
  TransitionOptions half = opt;
  half.tol = opt.tol / 2;
  out.signatures.push_back(transition_map(f, pu, ps, rec.q, half).signature);
  out.stable = rec.signature.tau_A != 0 && rec.signature.tau_S != 0;
  for (const auto& s : out.signatures) {
    if (!(s == rec.signature)) out.stable = false;
  }
  return out;
}

}  // namespace phflat
