#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/smooth_map.hpp"

namespace phflat {

enum class Stability { attracting, repelling, non_hyperbolic };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::attracting:
      return "attracting";
    case Stability::repelling:
      return "repelling";
    default:
      return "non-hyperbolic";
  }
}

// A fixed point p (f(p) = p, or f(p) = p + kL for the circle lift) with its
// multiplier. Non-hyperbolic roots are kept and tagged.
struct HyperbolicFixedPoint {
  double p = 0;
  double lambda = 1;
  Stability stability = Stability::non_hyperbolic;
  LogMagnitude deviation;  // λ − 1
  long winding = 0;        // k in f(p) = p + kL

  bool hyperbolic() const { return stability != Stability::non_hyperbolic; }
  bool attracting() const { return stability == Stability::attracting; }
  bool repelling() const { return stability == Stability::repelling; }
};

// Two or more roots closer than the search could separate.
struct ClusterWarning {
  double lo = 0;
  double hi = 0;
  std::string reason;
};

struct FixedPointOptions {
  int cells_per_period = 4096;   // grid density per fundamental domain (or per region for non-circle maps)
  double hyperbolic_tol = 1e-9;  // |λ − 1| at or below this is tagged non-hyperbolic
  double tangent_tol = 1e-13;    // |f − id| at a critical point of the displacement below this is a tangency
  int max_refine = 24;           // local refinement depth for hidden root pairs
};

struct FixedPointReport {
  std::vector<HyperbolicFixedPoint> points;
  std::vector<ClusterWarning> clusters;
  std::size_t cells = 0;
};

namespace detail {

inline int sign_of(double v) { return (v > 0) - (v < 0); }

// Root of g on [a, b] with g(a), g(b) of opposite signs: bisection to machine
// resolution, then a Newton step kept inside the final bracket.
template <class G, class DG>
double bracketed_root(const G& g, const DG& dg, double a, double b, double ga) {
  const int sa = sign_of(ga);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double gm = g(m);
    if (gm == 0.0) return m;
    if (sign_of(gm) == sa) {
      a = m;
    } else {
      b = m;
    }
  }
  double x = 0.5 * (a + b);
  const double slope = dg(x);
  if (slope != 0.0 && std::isfinite(slope)) {
    const double nx = x - g(x) / slope;
    if (nx >= a && nx <= b) x = nx;
  }
  return x;
}

}  // namespace detail

// All fixed points of f in [lo, hi] (for a circle map covering a whole period,
// the half-open [lo, lo+L) so no point is counted twice). Roots are bracketed
// on a uniform grid, refined inside the map's declared feature region, located
// by bisection and polished by Newton. A cell without a sign change whose
// endpoint is a local minimum of |f − id| is searched for a hidden pair via
// the critical point of the displacement; unresolved tangencies are reported.
inline FixedPointReport find_fixed_points_report(const SmoothMap1D& f, double lo, double hi, const FixedPointOptions& opt = {}) {
  if (!(hi > lo)) throw ArgumentError("find_fixed_points: empty region");
  FixedPointReport report;
  const bool full_circle = f.is_circle() && hi - lo >= f.period() * (1 - 1e-15);
  if (full_circle) hi = lo + f.period();
  const double span = hi - lo;
  const double base_cells = f.is_circle() ? opt.cells_per_period * span / f.period() : opt.cells_per_period;
  const double width = span / std::max(1.0, std::ceil(base_cells));

  // Grid, refined where the map declares closely spaced roots.
  std::vector<double> xs;
  const auto& hk = f.hooks();
  for (double x = lo; x < hi;) {
    double w = width;
    if (hk.feature_scale > 0 && x + w > hk.feature_lo && x < hk.feature_hi) w = std::min(w, hk.feature_scale / 4);
    xs.push_back(x);
    x = std::min(hi, x + w);
    if (x >= hi) break;
  }
  xs.push_back(hi);
  report.cells = xs.size() - 1;

  std::vector<double> ds(xs.size());
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ds[i] = f.displacement(xs[i]);
    dmin = std::min(dmin, ds[i]);
    dmax = std::max(dmax, ds[i]);
  }

  std::vector<long> windings{0};
  if (f.is_circle()) {
    windings.clear();
    const double L = f.period();
    for (long k = static_cast<long>(std::ceil((dmin - 1e-9 * L) / L)); k <= static_cast<long>(std::floor((dmax + 1e-9 * L) / L)); ++k) windings.push_back(k);
  }

  auto record = [&](double p, long k) {
    if (full_circle && p >= hi) return;
    for (const auto& q : report.points) {
      if (q.winding == k && std::fabs(q.p - p) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(p))) return;
    }
    HyperbolicFixedPoint fp;
    fp.p = p;
    fp.winding = k;
    fp.lambda = f.derivative(p);
    fp.deviation = f.multiplier_deviation(p);
    const double threshold_log10 = hk.hyperbolicity_log10 ? *hk.hyperbolicity_log10 : std::log10(opt.hyperbolic_tol);
    if (fp.deviation.sign == 0 || fp.deviation.log10abs <= threshold_log10) {
      fp.stability = Stability::non_hyperbolic;
    } else {
      fp.stability = fp.deviation.sign < 0 ? Stability::attracting : Stability::repelling;
    }
    report.points.push_back(fp);
  };

  for (long k : windings) {
    const double shift = static_cast<double>(k) * (f.is_circle() ? f.period() : 0.0);
    auto g = [&](double x) { return f.displacement(x) - shift; };
    auto dg = [&](double x) { return f.derivative(x) - 1.0; };
    std::vector<double> gs(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) gs[i] = ds[i] - shift;

    // Searches a cell without a sign change for a pair of roots around a
    // critical point of g, refining locally where the slope turns twice.
    std::function<void(double, double, double, double, int)> hidden = [&](double a, double b, double ga, double gb, int depth) {
      const double sa = dg(a), sb = dg(b);
      const double m = 0.5 * (a + b);
      const double sm = dg(m);
      const int s = detail::sign_of(ga);
      if (detail::sign_of(sa) == detail::sign_of(sb) && detail::sign_of(sa) == detail::sign_of(sm)) return;  // monotone on samples
      if (detail::sign_of(sa) == detail::sign_of(sb) || (detail::sign_of(sa) != detail::sign_of(sm) && detail::sign_of(sm) != detail::sign_of(sb))) {
        if (depth >= opt.max_refine) {
          report.clusters.push_back({a, b, "slope turns repeatedly below refinement depth"});
          return;
        }
        const double gm = g(m);
        if (detail::sign_of(gm) != s && gm != 0.0) {
          record(detail::bracketed_root(g, dg, a, m, ga), k);
          record(detail::bracketed_root(g, dg, m, b, gm), k);
          return;
        }
        hidden(a, m, ga, gm, depth + 1);
        hidden(m, b, gm, gb, depth + 1);
        return;
      }
      // Exactly one slope sign change on [a, b]: locate the critical point.
      double u = a, v = b;
      const int su = detail::sign_of(sa);
      for (int it = 0; it < 200; ++it) {
        const double c = 0.5 * (u + v);
        if (c <= u || c >= v) break;
        if (detail::sign_of(dg(c)) == su) {
          u = c;
        } else {
          v = c;
        }
      }
      const double c = 0.5 * (u + v);
      const double gc = g(c);
      if (gc == 0.0 || std::fabs(gc) <= opt.tangent_tol) {
        record(c, k);
        report.clusters.push_back({a, b, "tangential fixed point (double root) near " + std::to_string(c)});
      } else if (detail::sign_of(gc) != s) {
        record(detail::bracketed_root(g, dg, a, c, ga), k);
        record(detail::bracketed_root(g, dg, c, b, gc), k);
      }
    };

    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double a = xs[i], b = xs[i + 1];
      const double ga = gs[i], gb = gs[i + 1];
      if (ga == 0.0) {
        record(a, k);
        continue;
      }
      if (gb == 0.0) continue;  // recorded as the next cell's left end
      if (detail::sign_of(ga) != detail::sign_of(gb)) {
        record(detail::bracketed_root(g, dg, a, b, ga), k);
        continue;
      }
      // Local minimum of |g| at an endpoint: possible hidden pair.
      const bool left_min = std::fabs(ga) <= std::fabs(gb) && (i == 0 || std::fabs(ga) <= std::fabs(gs[i - 1]));
      const bool right_min = std::fabs(gb) <= std::fabs(ga) && (i + 2 >= gs.size() || std::fabs(gb) <= std::fabs(gs[i + 2]));
      if (left_min || right_min) hidden(a, b, ga, gb, 0);
    }
    if (!full_circle && gs.back() == 0.0) record(xs.back(), k);
  }

  std::sort(report.points.begin(), report.points.end(), [](const auto& x, const auto& y) { return x.winding != y.winding ? x.winding < y.winding : x.p < y.p; });
  for (std::size_t i = 1; i < report.points.size(); ++i) {
    const auto& a = report.points[i - 1];
    const auto& b = report.points[i];
    if (a.winding == b.winding && b.p - a.p < 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(b.p))) {
      report.clusters.push_back({a.p, b.p, "roots closer than double resolution"});
    }
  }
  return report;
}

inline std::vector<HyperbolicFixedPoint> find_fixed_points(const SmoothMap1D& f, double lo, double hi, double hyperbolic_tol = 1e-9) {
  FixedPointOptions opt;
  opt.hyperbolic_tol = hyperbolic_tol;
  return find_fixed_points_report(f, lo, hi, opt).points;
}

}  // namespace phflat
