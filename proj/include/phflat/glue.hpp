#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "phflat/series.hpp"
#include "phflat/smooth_map.hpp"

namespace phflat {

namespace detail {

inline double value_of(double x) { return x; }
inline double value_of(const Series<double>& s) { return s[0]; }

}  // namespace detail

// C^∞ step: 0 for s <= 0, 1 for s >= 1, e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)})
// in between. Works on doubles and on truncated series.
template <class S>
S smooth_step(const S& s) {
  using std::exp;
  const double v = detail::value_of(s);
  if (v <= 0) return s * 0.0;
  if (v >= 1) return s * 0.0 + 1.0;
  const S a = exp(-1.0 / s), b = exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

// Natural logs of χ(s) and 1 − χ(s) for s in (0, 1), free of underflow.
inline std::pair<double, double> log_smooth_step(double s) {
  const double a = -1.0 / s, b = -1.0 / (1.0 - s);
  const double m = std::max(a, b);
  const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
  return {a - lse, b - lse};
}

// Partition of a fundamental domain [lo, lo + L) of the circle used to glue
// an inner displacement (valid near [lo, b0]) to an outer one (on [b1, b2]):
// on [b0, b1] the displacement moves from inner to outer, on [b2, lo + L]
// back to the inner one evaluated at y − L.
struct GlueSpec {
  double lo = 0, L = 1;
  double b0 = 0, b1 = 0, b2 = 0;
};

// The circle map y ↦ y + d(y) with d glued from `inner` and `outer` by C^∞
// steps. Both displacements are generic callables on double and Series<double>.
template <class Inner, class Outer>
SmoothMap1D glued_circle_map(Inner inner, Outer outer, GlueSpec g, std::string name) {
  if (!(g.lo < g.b0 && g.b0 < g.b1 && g.b1 < g.b2 && g.b2 < g.lo + g.L)) throw ArgumentError("glued_circle_map: breakpoints out of order");
  auto eval = [=](const auto& y) {
    const double v = detail::value_of(y);
    if (v <= g.b0) return y + inner(y);
    if (v < g.b1) {
      const auto chi = smooth_step((y - g.b0) / (g.b1 - g.b0));
      return y + (1.0 - chi) * inner(y) + chi * outer(y);
    }
    if (v <= g.b2) return y + outer(y);
    const auto chi = smooth_step((y - g.b2) / (g.lo + g.L - g.b2));
    return y + (1.0 - chi) * outer(y) + chi * inner(y - g.L);
  };
  return SmoothMap1D([eval](double y) { return eval(y); }, [eval](const Series<double>& s) { return eval(s); },
                     SmoothMap1D::Domain::circle_from(g.lo, g.L), std::move(name));
}

}  // namespace phflat
