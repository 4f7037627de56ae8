#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "phflat/errors.hpp"
#include "phflat/expr.hpp"
#include "phflat/interval.hpp"
#include "phflat/jet.hpp"
#include "phflat/series.hpp"

namespace phflat {

// A real number stored as sign·10^log10abs, for quantities (such as the
// multiplier deviations of the flat-fiber factory) far below double range.
struct LogMagnitude {
  int sign = 0;
  double log10abs = -std::numeric_limits<double>::infinity();

  static LogMagnitude of(double v) {
    if (v == 0.0) return {};
    return {v > 0 ? 1 : -1, std::log10(std::fabs(v))};
  }
  double value() const { return sign == 0 ? 0.0 : sign * std::pow(10.0, log10abs); }
};

// Orientation-preserving smooth map of an interval or of the circle ℝ/Lℤ.
// Circle maps are given on a fundamental domain [lo, lo+L) and act on ℝ as the
// lift x ↦ f(x − kL) + kL. Besides pointwise evaluation, every map evaluates
// on truncated power series, which yields its Taylor jet at any point and
// transports jets along orbits by plain composition.
class SmoothMap1D {
 public:
  struct Domain {
    bool circle = false;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    static Domain line() { return {}; }
    static Domain interval(double a, double b) { return {false, a, b}; }
    static Domain circle_from(double lo, double length) { return {true, lo, lo + length}; }
    double period() const { return hi - lo; }
  };

  using Eval = std::function<double(double)>;
  using SeriesEval = std::function<Series<double>(const Series<double>&)>;
  using IntervalEval = std::function<Interval(const Interval&)>;

  // Optional accurate evaluations for maps whose displacement f(x) − x is far
  // below the resolution of f(x) itself.
  struct Hooks {
    std::function<double(double)> displacement;              // f(x) − x with the correct sign
    std::function<LogMagnitude(double)> multiplier_deviation;  // f'(x) − 1
    std::optional<double> hyperbolicity_log10;                // |f' − 1| above 10^this counts as hyperbolic
    double feature_scale = 0;                                 // roots may be this close inside [feature_lo, feature_hi]
    double feature_lo = 0;
    double feature_hi = 0;
  };

  SmoothMap1D() = default;

  SmoothMap1D(Eval f, SeriesEval fs, Domain domain, std::string name = "", IntervalEval fi = nullptr)
      : f_(std::move(f)), fs_(std::move(fs)), fi_(std::move(fi)), domain_(domain), name_(std::move(name)) {
    if (domain_.circle && !(domain_.period() > 0 && std::isfinite(domain_.period()))) {
      throw ArgumentError("circle map needs a finite positive period");
    }
  }

  // Wraps a generic callable usable on double and Series<double> (and, when
  // it compiles, on Interval).
  template <class F>
  static SmoothMap1D from_generic(F f, Domain domain, std::string name = "") {
    IntervalEval fi = nullptr;
    if constexpr (std::is_invocable_r_v<Interval, F, const Interval&>) fi = [f](const Interval& x) { return Interval(f(x)); };
    return SmoothMap1D([f](double x) { return static_cast<double>(f(x)); },
                       [f](const Series<double>& s) { return Series<double>(f(s)); }, domain, std::move(name), fi);
  }

  static SmoothMap1D from_expr(const Expr& e, Domain domain, std::string name = "") {
    if (name.empty()) name = e.text();
    return SmoothMap1D([e](double x) { return e.eval<double>(x); }, [e](const Series<double>& s) { return e.eval<Series<double>>(s); },
                       domain, std::move(name), [e](const Interval& x) { return e.eval<Interval>(x); });
  }

  static SmoothMap1D from_string(const std::string& text, Domain domain = Domain::line(), const std::string& variable = "x",
                                 const std::map<std::string, Rational>& constants = {}) {
    return from_expr(Expr::parse(text, variable, constants), domain, text);
  }

  bool valid() const { return static_cast<bool>(f_); }
  const Domain& domain() const { return domain_; }
  bool is_circle() const { return domain_.circle; }
  double period() const { return domain_.period(); }
  const std::string& name() const { return name_; }
  const Hooks& hooks() const { return hooks_; }
  SmoothMap1D& set_hooks(Hooks h) {
    hooks_ = std::move(h);
    return *this;
  }
  SmoothMap1D& set_name(std::string n) {
    name_ = std::move(n);
    return *this;
  }

  double operator()(double x) const {
    if (!domain_.circle) return f_(x);
    const double k = lift_shift(x);
    return f_(x - k) + k;
  }

  // The map applied to a series argument (any constant term).
  Series<double> apply(const Series<double>& s) const {
    if (!domain_.circle) return fs_(s);
    const double k = lift_shift(s[0]);
    Series<double> shifted = s;
    shifted[0] -= k;
    Series<double> out = fs_(shifted);
    out[0] += k;
    return out;
  }

  bool has_interval() const { return static_cast<bool>(fi_); }

  // Interval enclosure of the image (non-circle maps, or circle maps on an
  // interval inside one copy of the fundamental domain).
  Interval apply(const Interval& x) const {
    if (!fi_) throw UnsupportedError("map '" + name_ + "' has no interval extension");
    if (!domain_.circle) return fi_(x);
    const double k = lift_shift(x.lower());
    if (lift_shift(x.upper()) != k) throw ArgumentError("interval crosses the fundamental domain boundary");
    return fi_(x - Interval(k)) + Interval(k);
  }

  // Taylor coefficients of s ↦ f(x + s) up to the given order (entry 0 = f(x)).
  Series<double> jet_at(double x, int order) const { return apply(Series<double>::variable(x, order)); }

  // The local germ s ↦ f(x + s) − f(x) as a jet (requires order >= 1).
  DoubleJet germ_at(double x, int order) const {
    Series<double> s = jet_at(x, order);
    s[0] = 0.0;
    return DoubleJet::from_series(s);
  }

  double derivative(double x) const { return jet_at(x, 1)[1]; }

  double displacement(double x) const {
    if (hooks_.displacement) return hooks_.displacement(x);
    return (*this)(x) - x;
  }

  // f'(x) − 1 (exact log form when the map provides it).
  LogMagnitude multiplier_deviation(double x) const {
    if (hooks_.multiplier_deviation) return hooks_.multiplier_deviation(x);
    return LogMagnitude::of(derivative(x) - 1.0);
  }

  // Solves f(x) = y for the increasing lift by bracketing and safeguarded Newton.
  double inverse(double y) const {
    // Expansion stays inside a finite interval domain, where f is monotone.
    const bool bounded = !domain_.circle && std::isfinite(domain_.lo) && std::isfinite(domain_.hi);
    auto clamp_domain = [&](double x) { return bounded ? std::clamp(x, domain_.lo, domain_.hi) : x; };
    double a = clamp_domain(y - displacement(y));
    double step = std::max(1e-3, std::fabs(a - y));
    double lo = a, hi = a;
    double flo = (*this)(lo) - y, fhi = flo;
    for (int i = 0; i < 200 && flo > 0; ++i) {
      if (bounded && lo <= domain_.lo) break;
      lo = clamp_domain(lo - step);
      step *= 2;
      flo = (*this)(lo) - y;
    }
    step = std::max(1e-3, std::fabs(a - y));
    for (int i = 0; i < 200 && fhi < 0; ++i) {
      if (bounded && hi >= domain_.hi) break;
      hi = clamp_domain(hi + step);
      step *= 2;
      fhi = (*this)(hi) - y;
    }
    if (flo > 0 || fhi < 0) throw ConvergenceError("inverse of '" + name_ + "': no bracket for y = " + std::to_string(y));
    double x = std::clamp(a, lo, hi);
    for (int i = 0; i < 200; ++i) {
      Series<double> j = jet_at(x, 1);
      const double r = j[0] - y;
      if (r == 0.0) return x;
      if (r < 0) lo = x; else hi = x;
      double next = (j[1] > 0) ? x - r / j[1] : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - x) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(x))) return next;
      x = next;
    }
    return x;
  }

  // The inverse map applied to a series argument (jet of the local inverse
  // branch at f^{-1}(y0), by series reversion).
  Series<double> apply_inverse(const Series<double>& y) const {
    const int K = y.order();
    const double x0 = inverse(y[0]);
    if (K == 0) return Series<double>::constant(x0, 0);
    DoubleJet local = germ_at(x0, K);
    DoubleJet inv = invert(local);
    Series<double> dy = y;
    dy[0] = 0.0;
    Series<double> out = inv.series().compose(dy);
    out[0] += x0;
    return out;
  }

  // Composition outer∘inner (apply inner first). Displacements add along the
  // orbit, which keeps small displacements accurate.
  static SmoothMap1D compose(const SmoothMap1D& outer, const SmoothMap1D& inner) {
    if (outer.domain_.circle != inner.domain_.circle ||
        (outer.domain_.circle && std::fabs(outer.period() - inner.period()) > 1e-12)) {
      throw ArgumentError("compose: maps act on different spaces");
    }
    auto o = std::make_shared<SmoothMap1D>(outer);
    auto i = std::make_shared<SmoothMap1D>(inner);
    IntervalEval fi = nullptr;
    if (!outer.domain_.circle && outer.fi_ && inner.fi_) fi = [o, i](const Interval& x) { return o->apply(i->apply(x)); };
    SmoothMap1D out([o, i](double x) { return (*o)((*i)(x)); }, [o, i](const Series<double>& s) { return o->apply(i->apply(s)); },
                    inner.domain_, outer.name_ + "∘" + inner.name_, fi);
    // Both factors already act as lifts on all of ℝ, so the composite does too.
    out.direct_lift_ = inner.domain_.circle;
    if (outer.hooks_.displacement || inner.hooks_.displacement) {
      out.hooks_.displacement = [o, i](double x) {
        const double y = (*i)(x);
        return i->displacement(x) + o->displacement(y);
      };
    }
    return out;
  }

  // Throws GeometryError if f' <= 0 at any of `samples` equally spaced points of [a, b].
  void check_diffeomorphism(double a, double b, int samples = 1024) const {
    for (int s = 0; s <= samples; ++s) {
      const double x = a + (b - a) * s / samples;
      const double d = derivative(x);
      if (!(d > 0)) throw GeometryError("map '" + name_ + "' is not an orientation-preserving diffeomorphism: f'(" + std::to_string(x) + ") = " + std::to_string(d));
    }
  }

 private:
  double lift_shift(double x) const {
    if (direct_lift_) return 0.0;
    const double L = domain_.period();
    return std::floor((x - domain_.lo) / L) * L;
  }

  Eval f_;
  SeriesEval fs_;
  IntervalEval fi_;
  Domain domain_;
  std::string name_;
  Hooks hooks_;
  bool direct_lift_ = false;  // f_ already acts as the lift on all of ℝ
};

}  // namespace phflat
