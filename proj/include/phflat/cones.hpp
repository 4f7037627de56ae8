#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "phflat/errors.hpp"

namespace phflat {

// Multiplier balancing: the pair (m1, m2), m1, m2 >= 1, of smallest sum with
// |m1·log λ1 + m2·log λ2 + log μ| < tol. For a fixed sum s the residual is
// affine in m1 with slope log λ1 − log λ2 > 0, so the best m1 for s is the
// rounded root (clamped to [1, s − 1]); sums are scanned upward, which finds
// the smallest-sum pair exactly (ties broken by the smaller residual, then the
// smaller m1). An exact solution (resonant input) is returned as soon as it
// is met. Nothing with m1 + m2 <= cap → SearchExhaustedError.
struct BalancedPair {
  long m1 = 0, m2 = 0;
  double residual = 0;  // m1·log λ1 + m2·log λ2 + log μ
};

inline BalancedPair balance_multipliers(double lambda1, double lambda2, double mu, double tol, long cap) {
  if (!(lambda1 > 1)) throw ArgumentError("balance_multipliers: lambda1 must exceed 1");
  if (!(lambda2 > 0 && lambda2 < 1)) throw ArgumentError("balance_multipliers: lambda2 must lie in (0, 1)");
  if (!(mu > 0)) throw ArgumentError("balance_multipliers: mu must be positive");
  if (!(tol > 0)) throw ArgumentError("balance_multipliers: tol must be positive");
  const double l1 = std::log(lambda1), l2 = std::log(lambda2), lm = std::log(mu);
  auto residual = [&](long m1, long m2) { return static_cast<double>(m1) * l1 + static_cast<double>(m2) * l2 + lm; };
  for (long s = 2; s <= cap; ++s) {
    // m1·l1 + (s − m1)·l2 + lm = 0  ⟹  m1 = −(s·l2 + lm)/(l1 − l2)
    const double root = -(static_cast<double>(s) * l2 + lm) / (l1 - l2);
    BalancedPair best;
    bool found = false;
    for (long m1 : {static_cast<long>(std::floor(root)), static_cast<long>(std::ceil(root))}) {
      m1 = std::clamp(m1, 1L, s - 1);
      const double r = residual(m1, s - m1);
      if (std::fabs(r) < tol && (!found || std::fabs(r) < std::fabs(best.residual))) {
        best = {m1, s - m1, r};
        found = true;
      }
    }
    if (found) return best;
  }
  throw SearchExhaustedError("balance_multipliers: no pair with m1 + m2 <= " + std::to_string(cap) + " within tolerance " + [&] { std::ostringstream o; o << tol; return o.str(); }());
}

// A linear hyperbolic base B on 𝕋² times a circle fiber: F(x, y) =
// (Bx, f(x, y)). The fiber Jacobian row (∂f/∂x1, ∂f/∂x2, ∂f/∂y) is sampled
// on a grid of base points in [0, 1)² and fiber points in [y_lo, y_hi].
struct ConeModel {
  Eigen::Matrix2d B;
  std::function<std::array<double, 3>(double, double, double)> fiber_jacobian;
  double y_lo = 0, y_hi = 1;
};

struct ConeCheck {
  bool ok = false;
  double min_margin = std::numeric_limits<double>::infinity();
  double lambda_s = 0, lambda_u = 0;
  // Where the smallest margin occurred.
  std::array<double, 3> witness{};
  std::string witness_cone;  // "cu" or "cs"
};

// Checks the transverse pair of cone fields of aperture α around the
// declared splitting E^c ⊕ E^s ⊕ E^u (E^s, E^u the eigenlines of B, E^c the
// fiber direction):
//   C^{cu} = {|v_s| <= α·|(v_c, v_u)|} must satisfy DF(C^{cu}) ⊂ Int C^{cu},
//   C^{cs} = {|v_u| <= α·|(v_c, v_s)|} must satisfy DF^{-1}(C^{cs}) ⊂ Int C^{cs}.
// Boundary vectors (angle samples around each cone) are pushed by the
// differential; the margin of an image v' is α − |v'_s|/|(v'_c, v'_u)| (resp.
// α − |v'_u|/|(v'_c, v'_s)|). Reports the minimal margin over all grid points
// and directions; ok iff it is positive.
inline ConeCheck cone_invariance_check(const ConeModel& model, double alpha, int grid, int directions = 64) {
  if (!(alpha > 0)) throw ArgumentError("cone_invariance_check: alpha must be positive");
  if (grid < 1 || directions < 4) throw ArgumentError("cone_invariance_check: grid too coarse");
  if (!model.fiber_jacobian) throw ArgumentError("cone_invariance_check: missing fiber Jacobian");
  Eigen::EigenSolver<Eigen::Matrix2d> es(model.B);
  if (es.eigenvalues().imag().cwiseAbs().maxCoeff() > 0) throw NonHyperbolicError("cone_invariance_check: base has complex eigenvalues");
  Eigen::Vector2d ev = es.eigenvalues().real();
  Eigen::Matrix2d V = es.eigenvectors().real();
  int iu = std::fabs(ev(0)) > std::fabs(ev(1)) ? 0 : 1, is = 1 - iu;
  if (!(std::fabs(ev(iu)) > 1 && std::fabs(ev(is)) < 1)) throw NonHyperbolicError("cone_invariance_check: base is not hyperbolic");
  ConeCheck out;
  out.lambda_s = ev(is);
  out.lambda_u = ev(iu);
  // Base coordinates → eigen coordinates: x = V·(w_is, w_iu) after ordering.
  Eigen::Matrix2d E;
  E.col(0) = V.col(is);
  E.col(1) = V.col(iu);
  constexpr double two_pi = 6.283185307179586;

  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      for (int k = 0; k <= grid; ++k) {
        const double x1 = static_cast<double>(i) / grid, x2 = static_cast<double>(j) / grid;
        const double y = model.y_lo + (model.y_hi - model.y_lo) * k / grid;
        const auto J = model.fiber_jacobian(x1, x2, y);
        // Fiber row in (s, u) coordinates: ∂f/∂w = (∂f/∂x)·E.
        const Eigen::RowVector2d fx(J[0], J[1]);
        const Eigen::RowVector2d fw = fx * E;
        const double fs = fw(0), fu = fw(1), fy = J[2];
        if (!(fy != 0)) throw GeometryError("cone_invariance_check: fiber derivative vanishes");
        auto consider = [&](double margin, const char* cone) {
          if (margin < out.min_margin) {
            out.min_margin = margin;
            out.witness = {x1, x2, y};
            out.witness_cone = cone;
          }
        };
        for (int d = 0; d < directions; ++d) {
          const double th = two_pi * d / directions;
          for (double sg : {1.0, -1.0}) {
            // cu boundary: (c, u) on the unit circle, s = ±α.
            {
              const double c = std::cos(th), u = std::sin(th), s = sg * alpha;
              const double c2 = fy * c + fs * s + fu * u, s2 = out.lambda_s * s, u2 = out.lambda_u * u;
              const double den = std::hypot(c2, u2);
              consider(den > 0 ? alpha - std::fabs(s2) / den : -std::numeric_limits<double>::infinity(), "cu");
            }
            // cs boundary under the inverse: (c, s) on the unit circle, u = ±α.
            {
              const double c = std::cos(th), s = std::sin(th), u = sg * alpha;
              const double s2 = s / out.lambda_s, u2 = u / out.lambda_u;
              const double c2 = (c - fs * s2 - fu * u2) / fy;
              const double den = std::hypot(c2, s2);
              consider(den > 0 ? alpha - std::fabs(u2) / den : -std::numeric_limits<double>::infinity(), "cs");
            }
          }
        }
      }
    }
  }
  out.ok = out.min_margin > 0;
  return out;
}

}  // namespace phflat
