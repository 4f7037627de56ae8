#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/glue.hpp"
#include "phflat/skew.hpp"

namespace phflat {

// Result of numerically checking membership of a circle map in one of the
// two classes used by the counting bounds.
struct ClassReport {
  bool ok = true;
  std::vector<std::string> failures;

  void fail(std::string s) {
    ok = false;
    failures.push_back(std::move(s));
  }
};

namespace detail {

// Largest k <= cap such that both endpoints of [a, b] reach (lo, hi) after k
// steps of `step` (an increasing map, so the whole interval does); −1 if never.
template <class Step>
long steps_into(Step step, double a, double b, double lo, double hi, long cap = 100000) {
  for (long k = 0; k <= cap; ++k) {
    if (a > lo && a < hi && b > lo && b < hi) return k;
    a = step(a);
    b = step(b);
  }
  return -1;
}

template <class Pred>
void sample_check(ClassReport& rep, const std::string& what, double lo, double hi, int n, Pred ok) {
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    if (!ok(x)) {
      rep.fail(what + " fails at y = " + std::to_string(x));
      return;
    }
  }
}

}  // namespace detail

// Class of the convexity bound on ℝ/10ℤ: orientation preserving; some
// backward iterate of [−4, −1] lies in (−3, −2); some forward iterate of
// [4, 7] lies in (5, 6); f' > 1 on [−3, −2]; 0 < f' < 1 on [5, 6]; A > 0 on
// [−1, 4]. Sampled at `samples` points per condition. `forward_lo` moves the
// left end of the forward-basin interval: a map fixing y = 4 (as the second
// convex preset does) can only satisfy it on (4, 7].
inline ClassReport check_convex_class(const SmoothMap1D& f, int samples = 2000, double forward_lo = 4) {
  ClassReport rep;
  if (!f.is_circle() || std::fabs(f.period() - 10) > 1e-12) rep.fail("not a map of ℝ/10ℤ");
  try {
    f.check_diffeomorphism(f.domain().lo, f.domain().hi, samples);
  } catch (const GeometryError& e) {
    rep.fail(e.what());
  }
  if (detail::steps_into([&](double y) { return f.inverse(y); }, -4, -1, -3, -2) < 0) rep.fail("no backward iterate of [-4,-1] inside (-3,-2)");
  if (detail::steps_into([&](double y) { return f(y); }, forward_lo, 7, 5, 6) < 0) rep.fail("no forward iterate of [" + std::to_string(forward_lo) + ",7] inside (5,6)");
  detail::sample_check(rep, "f' > 1 on [-3,-2]", -3, -2, samples, [&](double y) { return f.derivative(y) > 1; });
  detail::sample_check(rep, "0 < f' < 1 on [5,6]", 5, 6, samples, [&](double y) {
    const double d = f.derivative(y);
    return d > 0 && d < 1;
  });
  detail::sample_check(rep, "A > 0 on [-1,4]", -1, 4, samples, [&](double y) { return local_invariants(f, y).A > 0; });
  return rep;
}

// Class of the Schwarzian bound on ℝ/6ℤ: orientation preserving; some
// backward iterate of [2, 5] lies in (3, 4), where f' > 1 (so the inverse
// contracts there); f([−1, 2]) ⊂ (−1, 2); S < 0 on (−1, 2).
inline ClassReport check_schwarzian_class(const SmoothMap1D& f, int samples = 2000) {
  ClassReport rep;
  if (!f.is_circle() || std::fabs(f.period() - 6) > 1e-12) rep.fail("not a map of ℝ/6ℤ");
  try {
    f.check_diffeomorphism(f.domain().lo, f.domain().hi, samples);
  } catch (const GeometryError& e) {
    rep.fail(e.what());
  }
  if (detail::steps_into([&](double y) { return f.inverse(y); }, 2, 5, 3, 4) < 0) rep.fail("no backward iterate of [2,5] inside (3,4)");
  detail::sample_check(rep, "f' > 1 on (3,4)", 3, 4, samples, [&](double y) { return f.derivative(y) > 1; });
  if (!(f(-1) > -1 && f(2) < 2)) rep.fail("f([-1,2]) is not inside (-1,2)");
  detail::sample_check(rep, "S < 0 on (-1,2)", -1 + 1e-9, 2 - 1e-9, samples, [&](double y) { return local_invariants(f, y).S < 0; });
  return rep;
}

// A skew product preset together with its counting protocol: the fiber
// region counted (a full fundamental domain), the sign certificate and the
// per-leaf bounds implied by it.
struct SkewFamily {
  std::string name;
  SkewProduct skew;
  double count_lo = 0, count_hi = 0;
  SignCertificate certificate;
  int per_leaf_bound = 0;    // fixed points per leaf on the whole circle
  int in_region_bound = 0;   // fixed points per leaf inside X
  std::map<std::string, double> parameters;
};

// Three convex fiber maps on [−1, 4] (circle ℝ/10ℤ):
//   f1 = (1−3ε)y + εy²,  f2 = (1−3ε)(y−1) + 1 + ε(y−1)²,
//   f3 = (1−3ε²)y + ε(y−1/3)(y−2/3),
// extended by the common displacement c(y − 5.5)(y − 7.5) on [5, 8]
// (attractor 5.5, repeller 7.5) with C^∞ steps on [4, 5] and [8, 9]. Every
// periodic leaf has at most two fixed points in X plus the two outer ones.
inline SkewFamily convex_family(double eps = 0.01, double c = 0.02) {
  if (!(eps > 0 && eps < 0.05)) throw PreconditionError("convex_family: eps must lie in (0, 0.05)");
  const GlueSpec g{-1, 10, 4, 5, 8};
  auto outer = [c](const auto& y) { return c * (y - 5.5) * (y - 7.5); };
  std::vector<SmoothMap1D> fibers;
  fibers.push_back(glued_circle_map([eps](const auto& y) { return -3 * eps * y + eps * y * y; }, outer, g, "f1"));
  fibers.push_back(glued_circle_map([eps](const auto& y) { return -3 * eps * (y - 1.0) + eps * (y - 1.0) * (y - 1.0); }, outer, g, "f2"));
  fibers.push_back(glued_circle_map([eps](const auto& y) { return -3 * eps * eps * y + eps * (y - 1.0 / 3) * (y - 2.0 / 3); }, outer, g, "f3"));
  for (const auto& f : fibers) {
    // f2 fixes the endpoint y = 4 of its formula interval.
    const ClassReport r = check_convex_class(f, 2000, 4 + 1e-6);
    if (!r.ok) throw PreconditionError("convex_family: fiber " + f.name() + " leaves its class: " + r.failures.front());
  }
  SkewFamily fam;
  fam.name = "convex";
  fam.skew.base = SymbolicBase::full_shift(3);
  fam.skew.fibers = std::move(fibers);
  fam.skew.L = 10;
  fam.count_lo = -1;
  fam.count_hi = 9;
  fam.certificate.kind = SignCertificate::Kind::nonlinearity_positive;
  fam.certificate.x_lo = -0.9;
  fam.certificate.x_hi = 3.9;
  fam.certificate.d_lo = -1;
  fam.certificate.d_hi = 4;
  fam.per_leaf_bound = 4;
  fam.in_region_bound = 2;
  fam.parameters = {{"eps", eps}, {"outer_c", c}};
  return fam;
}

// Three fiber maps with negative Schwarzian on [−1, 2] (circle ℝ/6ℤ):
//   f1 = (1−δ)y − εy³,  f2 = (1−δ)(y−1) + 1 − ε(y−1)³,
//   f3 = y − ε(y−1/2)(y−1/2−ε)(y−1/2+ε),
// extended by the common displacement c(y − 3.5) on [3, 4] (repeller 3.5)
// with C^∞ steps on [2, 3] and [4, 5]. Every periodic leaf has at most three
// fixed points in (−1, 2) plus the outer repeller.
inline SkewFamily schwarzian_family(double eps = 0.01, double delta = 0.1, double c = 0.05) {
  if (!(delta > 0 && delta < 0.5 && eps > 0 && eps < delta)) throw PreconditionError("schwarzian_family: need 0 < eps < delta < 0.5");
  const GlueSpec g{-1, 6, 2, 3, 4};
  auto outer = [c](const auto& y) { return c * (y - 3.5); };
  std::vector<SmoothMap1D> fibers;
  fibers.push_back(glued_circle_map([=](const auto& y) { return -delta * y - eps * y * y * y; }, outer, g, "f1"));
  fibers.push_back(glued_circle_map(
      [=](const auto& y) {
        const auto u = y - 1.0;
        return -delta * u - eps * u * u * u;
      },
      outer, g, "f2"));
  fibers.push_back(glued_circle_map(
      [=](const auto& y) {
        const auto u = y - 0.5;
        return -eps * u * (u - eps) * (u + eps);
      },
      outer, g, "f3"));
  for (const auto& f : fibers) {
    const ClassReport r = check_schwarzian_class(f);
    if (!r.ok) throw PreconditionError("schwarzian_family: fiber " + f.name() + " leaves its class: " + r.failures.front());
  }
  SkewFamily fam;
  fam.name = "schwarzian";
  fam.skew.base = SymbolicBase::full_shift(3);
  fam.skew.fibers = std::move(fibers);
  fam.skew.L = 6;
  fam.count_lo = -1;
  fam.count_hi = 5;
  fam.certificate.kind = SignCertificate::Kind::schwarzian_negative;
  fam.certificate.x_lo = -1 + 1e-6;
  fam.certificate.x_hi = 2 - 1e-6;
  fam.certificate.d_lo = -1;
  fam.certificate.d_hi = 2;
  fam.per_leaf_bound = 5;
  fam.in_region_bound = 3;
  fam.parameters = {{"eps", eps}, {"delta", delta}, {"outer_c", c}};
  return fam;
}

}  // namespace phflat
