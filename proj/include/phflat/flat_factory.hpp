#pragma once

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/fixed_points.hpp"
#include "phflat/glue.hpp"
#include "phflat/jet.hpp"
#include "phflat/skew.hpp"
#include "phflat/smooth_map.hpp"

namespace phflat {

// A real number as sign·e^log, for products far outside double range.
struct SignedLog {
  int sign = 0;
  double log = -std::numeric_limits<double>::infinity();

  static SignedLog of(double v) { return v == 0 ? SignedLog{} : SignedLog{v > 0 ? 1 : -1, std::log(std::fabs(v))}; }

  SignedLog operator*(const SignedLog& o) const {
    if (sign == 0 || o.sign == 0) return {};
    return {sign * o.sign, log + o.log};
  }

  SignedLog operator+(const SignedLog& o) const {
    if (sign == 0) return o;
    if (o.sign == 0) return *this;
    const double m = std::max(log, o.log);
    const double r = sign * std::exp(log - m) + o.sign * std::exp(o.log - m);
    if (r == 0) return {};
    return {r > 0 ? 1 : -1, m + std::log(std::fabs(r))};
  }

  LogMagnitude log10() const { return sign == 0 ? LogMagnitude{} : LogMagnitude{sign, log / std::log(10.0)}; }

  // The value when it is representable well above the underflow threshold;
  // otherwise a sign-exact stand-in in (DBL_MIN, 2·DBL_MIN] that still grows
  // with the true magnitude. Fixed-point bracketing only needs the sign.
  double sign_exact_double() const {
    if (sign == 0) return 0.0;
    constexpr double tiny = std::numeric_limits<double>::min();
    static const double floor_log = std::log(4 * tiny);
    if (log > floor_log) return sign * std::exp(log);
    return sign * tiny * (1 + 1 / (1 + (floor_log - log)));
  }
};

// The polynomial ∏_{j=0}^{a} (t − origin − jh), h = δ/a, with its sign and
// log-magnitude available for any a (through log-gamma and digamma sums when
// a is large).
class RootProduct {
 public:
  RootProduct(long a, double delta, double origin = 0, bool special_functions = false)
      : a_(a), delta_(delta), origin_(origin), h_(delta / static_cast<double>(a)), special_(special_functions || a > 64) {
    if (a < 1) throw ArgumentError("RootProduct: a must be >= 1");
    if (!(delta > 0)) throw ArgumentError("RootProduct: delta must be positive");
  }

  long a() const { return a_; }
  double h() const { return h_; }
  double root(long j) const { return origin_ + static_cast<double>(j) * delta_ / static_cast<double>(a_); }

  // The product in binary64 (0 where it underflows). For large a the value
  // and the Taylor coefficients come from log-gamma and polygamma sums in
  // O(order) work instead of a + 1 multiplications.
  double eval(double t) const {
    if (!special_) {
      double p = t - origin_;
      for (long j = 1; j <= a_; ++j) p *= t - root(j);
      return p;
    }
    const SignedLog v = signed_log(t);
    return v.sign == 0 ? 0.0 : v.sign * std::exp(v.log);
  }

  Series<double> eval(const Series<double>& t) const {
    if (!special_) {
      Series<double> p = t - origin_;
      for (long j = 1; j <= a_; ++j) p = p * (t - root(j));
      return p;
    }
    return taylor(t[0], t.order()).compose(t - t[0]);
  }

  // Taylor coefficients of the product at t0 up to `order`: with k the
  // nearest root, ∏(t0 + s) = (t0 − t_k + s)·Q(t0)·exp(Σ_m (−1)^{m+1} p_m s^m / m),
  // p_m = Σ_{i≠k} (t0 − t_i)^{−m}; each coefficient is formed in log space.
  Series<double> taylor(double t0, int order) const {
    using boost::math::polygamma;
    const double u = (t0 - origin_) / h_;
    const long k = std::clamp(static_cast<long>(std::llround(u)), 0L, a_);
    const double th = u - static_cast<double>(k);
    const double A = static_cast<double>(a_), K = static_cast<double>(k);
    // Q(t0) = ∏_{i≠k}(t0 − t_i), sign and log.
    SignedLog q;
    if (std::fabs(th) <= 0.5) {
      q.log = std::lgamma(u + 1) - std::lgamma(th + 1) + std::lgamma(A - u + 1) - std::lgamma(1 - th) + A * std::log(h_);
      q.sign = ((a_ - k) % 2) ? -1 : 1;
    } else {
      // Outside [−h/2, δ + h/2]: the full product divided by the end factor.
      const SignedLog full = signed_log(t0);
      q = full * SignedLog::of(1.0 / (t0 - root(k)));
    }
    Series<double> L(std::vector<double>(static_cast<std::size_t>(order) + 1, 0.0));
    for (int m = 1; m <= order; ++m) {
      // Σ_{j=1}^{n} (x + j)^{−m} = (−1)^m [ψ^{(m−1)}(x + 1) − ψ^{(m−1)}(x + n + 1)] / (m − 1)!
      auto tail = [m](double x, double n) {
        if (n < 1) return 0.0;
        const double sgn = (m % 2) ? -1.0 : 1.0;
        return sgn * (polygamma(m - 1, x + 1) - polygamma(m - 1, x + n + 1)) / std::tgamma(static_cast<double>(m));
      };
      double pm;
      if (std::fabs(th) <= 0.5) {
        const double below = tail(th, K);        // i < k: u − i = th + j
        const double above = tail(-th, A - K);   // i > k: u − i = th − j = −(j − th)
        pm = below + ((m % 2) ? -above : above);
      } else {
        pm = 0;
        for (long i = 0; i <= a_; ++i) {
          if (i != k) pm += std::pow(u - static_cast<double>(i), -m);
        }
      }
      pm /= std::pow(h_, m);
      L[m] = ((m % 2) ? 1.0 : -1.0) * pm / m;
    }
    const Series<double> E = exp(L);
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    const double d = th * h_;
    for (int m = 0; m <= order; ++m) {
      // coefficient of s^m in (d + s)·E(s)
      const double raw = d * E[m] + (m > 0 ? E[m - 1] : 0.0);
      const SignedLog v = q * SignedLog::of(raw);
      c[static_cast<std::size_t>(m)] = v.sign == 0 ? 0.0 : v.sign * std::exp(v.log);
    }
    return Series<double>(std::move(c));
  }

  SignedLog signed_log(double t) const {
    const double u = (t - origin_) / h_;
    SignedLog out;
    if (!special_) {
      int sign = 1;
      double lg = 0;
      for (long j = 0; j <= a_; ++j) {
        const double f = t - root(j);
        if (f == 0) return {};
        if (f < 0) sign = -sign;
        lg += std::log(std::fabs(f));
      }
      return {sign, lg};
    }
    const double A = static_cast<double>(a_);
    double lg;
    int negatives;
    if (u < 0) {
      lg = std::lgamma(A + 1 - u) - std::lgamma(-u);
      negatives = static_cast<int>((a_ + 1) % 2);
    } else if (u > A) {
      lg = std::lgamma(u + 1) - std::lgamma(u - A);
      negatives = 0;
    } else {
      const double k = std::floor(u);
      const double th = u - k;
      if (th == 0) return {};
      lg = std::lgamma(u + 1) - std::lgamma(th) + std::lgamma(A - u + 1) - std::lgamma(1 - th);
      negatives = static_cast<int>((a_ - static_cast<long>(k)) % 2);
    }
    out.sign = negatives ? -1 : 1;
    out.log = lg + static_cast<double>(a_ + 1) * std::log(h_);
    return out;
  }

  // Sign and log-magnitude of the derivative of the product at t, accurate at
  // and near the roots: with k the nearest root, ∏' = ∏_{i≠k}(t − t_i)·
  // (1 + (t − t_k)·Σ_{i≠k} 1/(t − t_i)).
  SignedLog signed_log_derivative(double t) const {
    const double u = (t - origin_) / h_;
    const long k = std::clamp(static_cast<long>(std::llround(u)), 0L, a_);
    const double th = u - static_cast<double>(k);
    // log|∏_{i≠k}(u − i)| and its sign, and Σ_{i≠k} 1/(u − i), in units of h.
    double lg = 0, sum = 0;
    int sign = 1;
    if (!special_ || std::fabs(th) > 0.5) {
      for (long i = 0; i <= a_; ++i) {
        if (i == k) continue;
        const double f = u - static_cast<double>(i);
        if (f < 0) sign = -sign;
        lg += std::log(std::fabs(f));
        sum += 1 / f;
      }
    } else {
      using boost::math::digamma;
      const double A = static_cast<double>(a_);
      // ∏_{i<k}(u − i) = Γ(u+1)/Γ(th+1), ∏_{i>k}(i − u) = Γ(A−u+1)/Γ(1−th).
      lg = std::lgamma(u + 1) - std::lgamma(th + 1) + std::lgamma(A - u + 1) - std::lgamma(1 - th);
      sign = ((a_ - k) % 2) ? -1 : 1;
      sum = (digamma(u + 1) - digamma(th + 1)) - (digamma(A - u + 1) - digamma(1 - th));
    }
    const double factor = 1 + th * sum;
    if (factor == 0) return {};
    SignedLog out{sign * (factor > 0 ? 1 : -1), lg + static_cast<double>(a_) * std::log(h_) + std::log(std::fabs(factor))};
    return out;
  }

 private:
  long a_;
  double delta_;
  double origin_;
  double h_;
  bool special_;
};

// Output of the flat-fiber factory.
struct FlatFiberPerturbation {
  SmoothMap1D map;
  long a = 0;
  double eps = 0, delta = 0;
  double window_lo = 0, window_hi = 0;  // the map is exactly t + ε∏ here
  std::vector<double> roots;            // jδ/a, j = 0..a
  double margin_log10 = 0;              // log10 of ε·δ^a/(2a^a)
  bool degenerate = false;              // ε = 0: the flat map is returned unchanged
};

namespace detail {

inline double apply_map(const SmoothMap1D& f, double y) { return f(y); }
inline Series<double> apply_map(const SmoothMap1D& f, const Series<double>& y) { return f.apply(y); }

inline double log10_margin(long a, double eps, double delta) {
  const double A = static_cast<double>(a);
  return std::log10(std::fabs(eps)) + A * std::log10(delta) - std::log10(2.0) - A * std::log10(A);
}

// Hooks for a map that equals y + ε∏ on [wlo, whi] (∏ centred by `P`).
inline SmoothMap1D::Hooks factory_hooks(const SmoothMap1D& base, const RootProduct& P, double eps, double wlo, double whi, double margin_log10) {
  auto f = std::make_shared<SmoothMap1D>(base);
  const SignedLog le = SignedLog::of(eps);
  SmoothMap1D::Hooks h;
  h.displacement = [f, P, le, wlo, whi](double t) {
    if (t >= wlo && t <= whi) return (le * P.signed_log(t)).sign_exact_double();
    return (*f)(t) - t;
  };
  h.multiplier_deviation = [f, P, le, wlo, whi](double t) {
    if (t >= wlo && t <= whi) return (le * P.signed_log_derivative(t)).log10();
    return LogMagnitude::of(f->derivative(t) - 1.0);
  };
  h.hyperbolicity_log10 = std::min(margin_log10, -9.0);
  h.feature_scale = P.h();
  h.feature_lo = wlo;
  h.feature_hi = whi;
  return h;
}

}  // namespace detail

// Flat-point factory. Given an r-flat germ F (F(t) = t + o(t^r)), returns
//   Φ(t) = t + (1 − χ(t))·(F(t) − t) + χ(t)·ε·∏_{j=0}^{a}(t − jδ/a),
// with χ a C^∞ cutoff equal to 1 on the window [−δ, 2δ] and to 0 outside
// (−2δ, 3δ). On the window Φ is exactly t + ε∏, so its fixed points there are
// t = jδ/a with multipliers 1 + ε∏'(jδ/a) ≠ 1. In the two blend zones the
// displacement is a convex combination of F(t) − t and ε∏; where these share
// a sign (e.g. F = t + t^{r+1} with r odd and ε > 0, a odd or even to match)
// no further fixed points arise.
template <class T>
FlatFiberPerturbation flat_fiber_perturb(const Jet<T>& F, long a, double eps, double delta, int r = 1) {
  if (flat_order(F) < r) throw PreconditionError("flat_fiber_perturb: germ is only " + std::to_string(flat_order(F)) + "-flat, need " + std::to_string(r));
  if (a < 1) throw ArgumentError("flat_fiber_perturb: a must be >= 1");
  if (!(delta > 0)) throw ArgumentError("flat_fiber_perturb: delta must be positive");
  std::vector<double> c;
  for (int k = 0; k <= F.order(); ++k) c.push_back(ScalarOps<T>::to_double(F.c(k)));
  auto ambient = [c](const auto& t) {
    auto acc = t * 0.0 + c.back();
    for (int k = static_cast<int>(c.size()) - 2; k >= 0; --k) acc = acc * t + c[static_cast<std::size_t>(k)];
    return acc;
  };
  FlatFiberPerturbation out;
  out.a = a;
  out.eps = eps;
  out.delta = delta;
  out.window_lo = -delta;
  out.window_hi = 2 * delta;
  out.margin_log10 = eps == 0 ? -std::numeric_limits<double>::infinity() : detail::log10_margin(a, eps, delta);
  if (eps == 0) {
    out.degenerate = true;
    out.map = SmoothMap1D([ambient](double t) { return ambient(t); }, [ambient](const Series<double>& s) { return ambient(s); },
                          SmoothMap1D::Domain::line(), "flat");
    return out;
  }
  const RootProduct P(a, delta);
  for (long j = 0; j <= a; ++j) out.roots.push_back(P.root(j));
  const double d = delta;
  auto phi = [ambient, P, eps, d](const auto& t) {
    const double v = detail::value_of(t);
    if (v <= -2 * d || v >= 3 * d) return ambient(t);
    auto chi = t * 0.0 + 1.0;
    if (v < -d) chi = smooth_step((t + 2 * d) / d);
    if (v > 2 * d) chi = 1.0 - smooth_step((t - 2 * d) / d);
    return t + (1.0 - chi) * (ambient(t) - t) + eps * chi * P.eval(t);
  };
  SmoothMap1D map([phi](double t) { return phi(t); }, [phi](const Series<double>& s) { return phi(s); }, SmoothMap1D::Domain::line(),
                  "flat+" + std::to_string(a));
  // Orientation: Φ' > 0 across the whole modified chart.
  const int samples = static_cast<int>(std::min<long>(200000, std::max<long>(4096, 40 * a)));
  for (int i = 0; i <= samples; ++i) {
    const double t = -5 * delta + 10 * delta * i / samples;
    const double dv = map.derivative(t);
    if (!(dv > 0)) throw MagnitudeError("flat_fiber_perturb: Φ'(" + std::to_string(t) + ") = " + std::to_string(dv) + " is not positive; reduce eps");
  }
  map.set_hooks(detail::factory_hooks(map, P, eps, out.window_lo, out.window_hi, out.margin_log10));
  out.map = std::move(map);
  return out;
}

// Where a flat fiber was injected into a skew product.
struct FlatInjection {
  SkewProduct skew;
  Word root;
  double fixed_point = 0;  // the hyperbolic fixed point of the leaf that was replaced
  double center = 0;       // origin of the product (first root)
  double window_lo = 0, window_hi = 0;
  long a = 0;
  double eps = 0;
};

// Makes the return map of the periodic leaf `word` coincide with
// y ↦ y + ε∏_{j=0}^{a}(y − y0 − jδ/a) on [y0 − δ, y0 + 2δ], glued back to the
// original return map over one δ on each side: the leaf's hyperbolic fixed
// point p (y0 = p − δ/2) is replaced by a + 1 hyperbolic ones. The sign of ε
// follows p's stability so that the glued displacement has no further zeros;
// a must be even. Other leaves are untouched.
inline FlatInjection inject_flat_fiber(const SkewProduct& skew, const Word& word, double p, long a, double eps_abs, double delta) {
  if (a < 2 || a % 2) throw PreconditionError("inject_flat_fiber: a must be even and >= 2");
  if (!(eps_abs > 0) || !(delta > 0)) throw ArgumentError("inject_flat_fiber: eps and delta must be positive");
  const RotationClass rc = rotation_class(word);
  if (rc.period != static_cast<int>(word.size()) || rc.representative != word) throw ArgumentError("inject_flat_fiber: word must be primitive and the least rotation");
  const SmoothMap1D R = fiber_return(word, skew);
  const double lam = R.derivative(p);
  if (std::fabs(R(p) - p) > 1e-9) throw PreconditionError("inject_flat_fiber: " + std::to_string(p) + " is not a fixed point of the leaf");
  if (std::fabs(lam - 1) < 1e-9) throw NonHyperbolicError("inject_flat_fiber: the fixed point is not hyperbolic");
  const double eps = lam > 1 ? eps_abs : -eps_abs;
  const double y0 = p - delta / 2;
  const double wlo = y0 - delta, whi = y0 + 2 * delta;
  const RootProduct P(a, delta, y0);
  // Outside the window the original displacement must keep the product's
  // sign (negative on the left for a repeller, positive on the right).
  for (int i = 0; i <= 400; ++i) {
    const double yl = wlo - delta * i / 400.0, yr = whi + delta * i / 400.0;
    const double dl = R(yl) - yl, dr = R(yr) - yr;
    if (!(dl * eps < 0 && dr * eps > 0)) throw PreconditionError("inject_flat_fiber: the leaf has other fixed points within δ of the window");
  }
  auto Rp = std::make_shared<SmoothMap1D>(R);
  auto glued = [Rp, P, eps, delta, wlo, whi](const auto& y) {
    const double v = detail::value_of(y);
    if (v <= wlo - delta || v >= whi + delta) return detail::apply_map(*Rp, y);
    auto chi = y * 0.0 + 1.0;
    if (v < wlo) chi = smooth_step((y - (wlo - delta)) / delta);
    if (v > whi) chi = 1.0 - smooth_step((y - whi) / delta);
    return (1.0 - chi) * detail::apply_map(*Rp, y) + chi * (y + eps * P.eval(y));
  };
  SmoothMap1D map([glued](double y) { return glued(y); }, [glued](const Series<double>& s) { return glued(s); }, R.domain(),
                  "flat+" + std::to_string(a) + "@" + word_text(word));
  for (int i = 0; i <= 4096; ++i) {
    const double y = wlo - delta + (whi - wlo + 2 * delta) * i / 4096;
    const double dv = map.derivative(y);
    if (!(dv > 0)) throw MagnitudeError("inject_flat_fiber: return map derivative " + std::to_string(dv) + " at " + std::to_string(y) + " is not positive");
  }
  // Displacement: exact product on the window; in the blends the two terms
  // share a sign, so their sum is formed in log space.
  auto base = std::make_shared<SmoothMap1D>(map);
  const SignedLog le = SignedLog::of(eps);
  SmoothMap1D::Hooks h = detail::factory_hooks(map, P, eps, wlo, whi, detail::log10_margin(a, eps_abs, delta));
  h.displacement = [Rp, base, P, le, delta, wlo, whi](double y) {
    if (y >= wlo && y <= whi) return (le * P.signed_log(y)).sign_exact_double();
    if (y <= wlo - delta || y >= whi + delta) return (*Rp)(y) - y;
    const double s = y < wlo ? (y - (wlo - delta)) / delta : (y - whi) / delta;
    auto [lchi, lone] = log_smooth_step(s);
    if (y > whi) std::swap(lchi, lone);  // χ falls from 1 to 0 on the right
    const SignedLog orig = SignedLog{1, lone} * SignedLog::of((*Rp)(y) - y);
    const SignedLog prod = SignedLog{1, lchi} * le * P.signed_log(y);
    return (orig + prod).sign_exact_double();
  };
  map.set_hooks(h);
  FlatInjection out;
  out.skew = skew;
  out.skew.overrides.push_back({word, std::move(map)});
  out.root = word;
  out.fixed_point = p;
  out.center = y0;
  out.window_lo = wlo;
  out.window_hi = whi;
  out.a = a;
  out.eps = eps;
  return out;
}

}  // namespace phflat
