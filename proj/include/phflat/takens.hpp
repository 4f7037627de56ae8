#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/jet.hpp"
#include "phflat/matrix.hpp"
#include "phflat/mpoly.hpp"
#include "phflat/series.hpp"

namespace phflat {

// ---------------------------------------------------------------------------
// Matrix-valued polynomials in one variable: M(p + t) = Σ_{k≤r} t^k A_k.

template <class T>
class MatPoly {
 public:
  MatPoly() = default;
  MatPoly(int rows, int cols, int degree, T base = T(0)) : base_(std::move(base)), a_(static_cast<std::size_t>(check_degree(degree)) + 1, Mat<T>(rows, cols)) {}
  MatPoly(std::vector<Mat<T>> coeffs, T base = T(0)) : base_(std::move(base)), a_(std::move(coeffs)) {
    if (a_.empty()) throw ArgumentError("matpoly: needs at least one coefficient");
    for (const auto& m : a_)
      if (m.rows() != a_[0].rows() || m.cols() != a_[0].cols()) throw ArgumentError("matpoly: coefficient shapes differ");
  }

  static MatPoly constant(const Mat<T>& m, int degree, T base = T(0)) {
    MatPoly out(m.rows(), m.cols(), degree, std::move(base));
    out.a_[0] = m;
    return out;
  }
  // A 1×1 polynomial from a scalar series.
  static MatPoly scalar(const Series<T>& s, T base = T(0)) {
    MatPoly out(1, 1, s.order(), std::move(base));
    for (int k = 0; k <= s.order(); ++k) out.a_[static_cast<std::size_t>(k)](0, 0) = s[k];
    return out;
  }
  // A column vector of scalar series.
  static MatPoly column(const std::vector<Series<T>>& comps, int degree, T base = T(0)) {
    MatPoly out(static_cast<int>(comps.size()), 1, degree, std::move(base));
    for (std::size_t i = 0; i < comps.size(); ++i)
      for (int k = 0; k <= degree; ++k) out.a_[static_cast<std::size_t>(k)](static_cast<int>(i), 0) = comps[i].coeff(k);
    return out;
  }

  int degree() const { return static_cast<int>(a_.size()) - 1; }
  int rows() const { return a_.empty() ? 0 : a_[0].rows(); }
  int cols() const { return a_.empty() ? 0 : a_[0].cols(); }
  const T& base() const { return base_; }
  const Mat<T>& coeff(int k) const { return a_[static_cast<std::size_t>(k)]; }
  Mat<T>& coeff(int k) { return a_[static_cast<std::size_t>(k)]; }
  Mat<T> coeff_or_zero(int k) const { return k <= degree() ? a_[static_cast<std::size_t>(k)] : Mat<T>(rows(), cols()); }

  // Entry (i, j) as a scalar series in t = x − p.
  Series<T> entry(int i, int j) const {
    Series<T> s(degree());
    for (int k = 0; k <= degree(); ++k) s[k] = a_[static_cast<std::size_t>(k)](i, j);
    return s;
  }

  // Value at the point x (not at the offset).
  Mat<T> eval(const T& x) const {
    const T t = x - base_;
    Mat<T> acc = a_.back();
    for (int k = degree() - 1; k >= 0; --k) acc = acc * t + a_[static_cast<std::size_t>(k)];
    return acc;
  }

  // ‖M‖_{p,r} = Σ_k ‖A_k‖ with spectral operator norms.
  double seminorm() const {
    double s = 0;
    for (const auto& m : a_) s += spectral_norm(m);
    return s;
  }

  MatPoly truncated(int r) const {
    MatPoly out(rows(), cols(), r, base_);
    for (int k = 0; k <= r && k <= degree(); ++k) out.a_[static_cast<std::size_t>(k)] = a_[static_cast<std::size_t>(k)];
    return out;
  }

  bool is_zero() const {
    for (const auto& m : a_)
      if (!m.is_zero()) return false;
    return true;
  }

  friend MatPoly operator+(const MatPoly& a, const MatPoly& b) {
    a.same_frame(b);
    MatPoly out = a;
    for (int k = 0; k <= a.degree(); ++k) out.a_[static_cast<std::size_t>(k)] += b.a_[static_cast<std::size_t>(k)];
    return out;
  }
  friend MatPoly operator-(const MatPoly& a, const MatPoly& b) {
    a.same_frame(b);
    MatPoly out = a;
    for (int k = 0; k <= a.degree(); ++k) out.a_[static_cast<std::size_t>(k)] -= b.a_[static_cast<std::size_t>(k)];
    return out;
  }
  friend MatPoly operator*(const MatPoly& a, const T& v) {
    MatPoly out = a;
    for (auto& m : out.a_) m *= v;
    return out;
  }
  // Pointwise matrix product, truncated at the common degree.
  friend MatPoly operator*(const MatPoly& a, const MatPoly& b) {
    a.same_frame(b);
    if (a.cols() != b.rows()) throw ArgumentError("matpoly product: inner dimensions differ");
    MatPoly out(a.rows(), b.cols(), a.degree(), a.base_);
    for (int i = 0; i <= a.degree(); ++i)
      for (int j = 0; i + j <= a.degree(); ++j) out.a_[static_cast<std::size_t>(i + j)] += a.a_[static_cast<std::size_t>(i)] * b.a_[static_cast<std::size_t>(j)];
    return out;
  }
  bool operator==(const MatPoly& o) const { return base_ == o.base_ && a_ == o.a_; }

  // Pointwise inverse as a truncated series: B_0 = A_0^{-1},
  // B_k = −A_0^{-1} Σ_{j=1..k} A_j B_{k−j}.
  MatPoly inverse() const {
    if (rows() != cols()) throw ArgumentError("matpoly inverse: not square");
    const Mat<T> inv0 = a_[0].inverse();
    MatPoly out(rows(), cols(), degree(), base_);
    out.a_[0] = inv0;
    for (int k = 1; k <= degree(); ++k) {
      Mat<T> acc(rows(), cols());
      for (int j = 1; j <= k; ++j) acc += a_[static_cast<std::size_t>(j)] * out.a_[static_cast<std::size_t>(k - j)];
      out.a_[static_cast<std::size_t>(k)] = -(inv0 * acc);
    }
    return out;
  }

  // this ∘ F for a scalar polynomial F based at p1 with F(p1) = this->base():
  // Σ_k A_k (F − p2)^k truncated at F's degree, based at p1.
  MatPoly compose(const MatPoly& F) const {
    if (F.rows() != 1 || F.cols() != 1) throw ArgumentError("matpoly compose: inner map must be scalar");
    const T f0 = F.a_[0](0, 0);
    if (!base_matches(f0, base_)) throw PreconditionError("matpoly compose: inner map sends its base point to " + describe(f0) + ", not to " + describe(base_));
    Series<T> u = F.entry(0, 0);
    u[0] = T(0);
    return compose_offset(u, F.base_);
  }

  // this(p + u(t)) for a series u with u(0) = 0, based at `new_base`.
  MatPoly compose_offset(const Series<T>& u, const T& new_base = T(0)) const {
    if (!ScalarOps<T>::is_zero(u[0])) throw ArgumentError("matpoly compose: offset series must vanish at 0");
    const int r = u.order();
    MatPoly out(rows(), cols(), r, new_base);
    Series<T> power = Series<T>::constant(T(1), r);
    for (int k = 0; k <= degree(); ++k) {
      if (k > 0) power = power * u;
      const Mat<T>& A = a_[static_cast<std::size_t>(k)];
      if (A.is_zero()) continue;
      for (int m = 0; m <= r; ++m) {
        if (ScalarOps<T>::is_zero(power[m])) continue;
        out.a_[static_cast<std::size_t>(m)] += A * power[m];
      }
    }
    return out;
  }

 private:
  static int check_degree(int d) {
    if (d < 0) throw ArgumentError("matpoly: negative degree");
    return d;
  }
  static bool base_matches(const T& a, const T& b) {
    if constexpr (ScalarOps<T>::exact) {
      return a == b;
    } else {
      return ScalarOps<T>::abs(a - b) <= T(1e-12) * (T(1) + ScalarOps<T>::abs(b));
    }
  }
  static std::string describe(const T& v) {
    std::ostringstream os;
    os << ScalarOps<T>::to_double(v);
    return os.str();
  }
  void same_frame(const MatPoly& o) const {
    if (degree() != o.degree()) throw ArgumentError("matpoly: degree mismatch");
    if (!base_matches(base_, o.base_)) throw PreconditionError("matpoly: base points differ");
  }

  T base_ = T(0);
  std::vector<Mat<T>> a_;
};

// Scalar function times matrix function, g·A (g is 1×1).
template <class T>
MatPoly<T> scalar_product(const MatPoly<T>& g, const MatPoly<T>& A) {
  if (g.rows() != 1 || g.cols() != 1) throw ArgumentError("scalar_product: first factor must be scalar");
  if (g.degree() != A.degree()) throw ArgumentError("scalar_product: degree mismatch");
  MatPoly<T> out(A.rows(), A.cols(), A.degree(), A.base());
  for (int i = 0; i <= A.degree(); ++i)
    for (int j = 0; i + j <= A.degree(); ++j) out.coeff(i + j) += A.coeff(j) * g.coeff(i)(0, 0);
  return out;
}

// Both sides of the composition bound ‖G∘F‖_{p1,r} ≤ ‖G‖_{p2,r}·max{1, ‖F − p2‖_{p1,r}}^r.
struct ComposeBound {
  double lhs = 0;
  double rhs = 0;
  bool holds() const { return lhs <= rhs * (1 + 1e-12) + 1e-300; }
};

template <class T>
ComposeBound seminorm_compose_bound(const MatPoly<T>& G, const MatPoly<T>& F) {
  const MatPoly<T> GF = G.compose(F);  // checks the base point
  MatPoly<T> shifted = F;
  shifted.coeff(0)(0, 0) -= G.base();
  const int r = F.degree();
  ComposeBound b;
  b.lhs = GF.seminorm();
  b.rhs = G.truncated(std::min(G.degree(), r)).seminorm() * std::pow(std::max(1.0, shifted.seminorm()), r);
  return b;
}

// ‖F‖_{0,r} of a scalar series (sum of absolute coefficients through order r).
template <class T>
double series_seminorm(const Series<T>& s, int r) {
  double sum = 0;
  for (int k = 0; k <= r && k <= s.order(); ++k) sum += std::fabs(ScalarOps<T>::to_double(s[k]));
  return sum;
}

// Compositional inverse of a series with s(0) = 0, s'(0) ≠ 0.
template <class T>
Series<T> series_inverse(const Series<T>& s) {
  return invert(Jet<T>::from_series(s)).series();
}

// ---------------------------------------------------------------------------
// Maps in the skew normal form (F_c(x), A^s(x)y, A^u(x)z) on the polyball
// |x| ≤ α_c, ‖y‖ ≤ α_s, ‖z‖ ≤ α_u, with a one-dimensional center.

template <class T>
struct TakensMap {
  Series<T> center;  // F_c, with F_c(0) = 0 and F_c'(0) ≠ 0
  MatPoly<T> As;     // d_s × d_s, based at 0
  MatPoly<T> Au;     // d_u × d_u, based at 0
  double alpha_c = 1, alpha_s = 1, alpha_u = 1;

  int ds() const { return As.rows(); }
  int du() const { return Au.rows(); }
  int order() const { return center.order(); }

  // Checks the shape and the hyperbolicity of A^s(0) and A^u(0).
  void validate() const {
    if (center.order() < 1) throw ArgumentError("takens map: center germ needs order >= 1");
    if (!ScalarOps<T>::is_zero(center[0])) throw PreconditionError("takens map: center germ must fix 0");
    if (ScalarOps<T>::is_zero(center[1])) throw NonInvertibleError("takens map: center germ has zero derivative");
    if (As.rows() != As.cols() || Au.rows() != Au.cols()) throw ArgumentError("takens map: hyperbolic blocks must be square");
    if (!ScalarOps<T>::is_zero(As.base()) || !ScalarOps<T>::is_zero(Au.base())) throw ArgumentError("takens map: blocks must be based at 0");
    if (ds() > 0) {
      Eigen::EigenSolver<Eigen::MatrixXd> es(As.coeff(0).to_eigen());
      for (int i = 0; i < ds(); ++i)
        if (!(std::abs(es.eigenvalues()(i)) < 1)) throw NonHyperbolicError("takens map: A^s(0) has an eigenvalue of modulus >= 1");
    }
    if (du() > 0) {
      Eigen::EigenSolver<Eigen::MatrixXd> es(Au.coeff(0).to_eigen());
      for (int i = 0; i < du(); ++i)
        if (!(std::abs(es.eigenvalues()(i)) > 1)) throw NonHyperbolicError("takens map: A^u(0) has an eigenvalue of modulus <= 1");
    }
  }

  // The map on a point (x, y, z).
  void apply(T& x, std::vector<T>& y, std::vector<T>& z) const {
    const Mat<T> S = As.eval(x), U = Au.eval(x);
    const Mat<T> ny = S * Mat<T>::column(y), nz = U * Mat<T>::column(z);
    x = center.eval(x);
    for (int i = 0; i < ds(); ++i) y[static_cast<std::size_t>(i)] = ny(i, 0);
    for (int i = 0; i < du(); ++i) z[static_cast<std::size_t>(i)] = nz(i, 0);
  }

  // A linear map (λ_c x, A^s y, A^u z) with constant blocks.
  static TakensMap linear(const T& lambda_c, const Mat<T>& As, const Mat<T>& Au, int order) {
    TakensMap m;
    m.center = Series<T>(order);
    m.center[1] = lambda_c;
    m.As = MatPoly<T>::constant(As, order);
    m.Au = MatPoly<T>::constant(Au, order);
    return m;
  }
};

template <class T>
double euclidean(const std::vector<T>& v) {
  double s = 0;
  for (const auto& a : v) {
    const double d = ScalarOps<T>::to_double(a);
    s += d * d;
  }
  return std::sqrt(s);
}

// The two pinching quantities of order r and their verdict.
struct PinchingReport {
  double stable = 0;    // ‖A^s‖_{0,r}·max{1, ‖F_c^{-1}‖_{0,r}}^r
  double unstable = 0;  // ‖(A^u)^{-1}‖_{0,r}·max{1, ‖F_c‖_{0,r}}^r
  bool pinched() const { return stable < 1 && unstable < 1; }
};

template <class T>
PinchingReport pinching_report(const TakensMap<T>& T_, int r) {
  if (r < 0 || r > T_.order()) throw ArgumentError("pinching_check: order outside the map's truncation");
  const Series<T> Fc = T_.center.truncated(std::max(r, 1));
  const double n_inv = series_seminorm(series_inverse(Fc), r);
  const double n_fwd = series_seminorm(Fc, r);
  // A^u must stay invertible on the whole center interval, not only at 0.
  if (T_.du() > 0) {
    const int samples = 64;
    for (int i = 0; i <= samples; ++i) {
      const double x = -T_.alpha_c + 2 * T_.alpha_c * i / samples;
      Mat<double> U(T_.du(), T_.du());
      const Mat<T> M = T_.Au.eval(ScalarOps<T>::from_rational(Rational(x)));
      for (int a = 0; a < T_.du(); ++a)
        for (int b = 0; b < T_.du(); ++b) U(a, b) = ScalarOps<T>::to_double(M(a, b));
      const double det = U.to_eigen().determinant();
      if (std::fabs(det) <= 1e-14 * std::pow(std::max(1.0, spectral_norm(U)), T_.du())) {
        throw NonInvertibleError("pinching_check: A^u(x) is singular near x = " + std::to_string(x));
      }
    }
  }
  PinchingReport rep;
  rep.stable = T_.ds() > 0 ? T_.As.truncated(r).seminorm() * std::pow(std::max(1.0, n_inv), r) : 0.0;
  rep.unstable = T_.du() > 0 ? T_.Au.truncated(r).inverse().seminorm() * std::pow(std::max(1.0, n_fwd), r) : 0.0;
  return rep;
}

template <class T>
bool pinching_check(const TakensMap<T>& T_, int r) {
  return pinching_report(T_, r).pinched();
}

// Conjugacy by ψ_α(x, y, z) = (αx, y, z): returns (α^{-1}F_c(αx), A^s(αx)y, A^u(αx)z)
// on the center interval |x| ≤ α_c/α.
template <class T>
TakensMap<T> rescale_conjugacy(const TakensMap<T>& T_, const T& alpha) {
  if (!(ScalarOps<T>::sign(alpha) > 0)) throw ArgumentError("rescale_conjugacy: alpha must be positive");
  TakensMap<T> out = T_;
  T pw(1);
  for (int k = 1; k <= out.center.order(); ++k) {
    out.center[k] = T_.center[k] * pw;  // c_k α^{k−1}
    pw *= alpha;
  }
  auto scale_block = [&](MatPoly<T>& M) {
    T p(1);
    for (int k = 0; k <= M.degree(); ++k) {
      M.coeff(k) *= p;
      p *= alpha;
    }
  };
  scale_block(out.As);
  scale_block(out.Au);
  out.alpha_c = T_.alpha_c / ScalarOps<T>::to_double(alpha);
  return out;
}

// ---------------------------------------------------------------------------
// Connecting correctors.

// A connecting configuration: curves l_-(t) = (t, ŷ(t), 0) through q_- and
// l_+(t) = (t, 0, ẑ(t)) through q_+, both as columns of degree-r polynomials.
template <class T>
struct ConnectingProblem {
  TakensMap<T> map;
  MatPoly<T> yhat;  // d_s × 1
  MatPoly<T> zhat;  // d_u × 1

  int order() const { return yhat.degree(); }

  void validate() const {
    map.validate();
    if (yhat.rows() != map.ds() || yhat.cols() != 1 || zhat.rows() != map.du() || zhat.cols() != 1) throw ArgumentError("connecting problem: curve dimensions do not match the map");
    if (yhat.degree() != zhat.degree()) throw ArgumentError("connecting problem: curves must share one order");
    if (yhat.degree() > map.order()) throw ArgumentError("connecting problem: curve order exceeds the map's truncation");
    const double ny = spectral_norm(yhat.coeff(0)), nz = spectral_norm(zhat.coeff(0));
    if (ny == 0 || ny > map.alpha_s) throw GeometryError("connecting problem: q_- must lie in the stable slice minus the origin");
    if (nz == 0 || nz > map.alpha_u) throw GeometryError("connecting problem: q_+ must lie in the unstable slice minus the origin");
  }
};

template <class T>
struct Correctors {
  MatPoly<T> P;  // P_n, d_s × 1
  MatPoly<T> Q;  // Q_{−n}, d_u × 1
};

// P_n = Taylor_r[(A^{s,n}·ŷ)∘F_c^{-n}] and Q_{−n} = Taylor_r[(A^{u,−n}·ẑ)∘F_c^n],
// built by the recurrences P_{k+1} = (A^s·P_k)∘F_c^{-1}, Q_{k+1} = (A^u)^{-1}·(Q_k∘F_c).
template <class T>
Correctors<T> connecting_correctors(const ConnectingProblem<T>& P, long n) {
  P.validate();
  if (n < 0) throw ArgumentError("connecting_correctors: n must be non-negative");
  const int r = P.order();
  if (!pinching_check(P.map, r)) throw PreconditionError("connecting_correctors: the map is not pinched at order " + std::to_string(r));
  const Series<T> Fc = P.map.center.truncated(std::max(r, 1));
  const Series<T> Finv = series_inverse(Fc);
  auto at_order = [&](const Series<T>& s) { return r == s.order() ? s : s.truncated(r); };
  const Series<T> fwd = at_order(Fc), bwd = at_order(Finv);
  const MatPoly<T> As = P.map.As.truncated(r), AuInv = P.map.Au.truncated(r).inverse();
  Correctors<T> c{P.yhat, P.zhat};
  for (long k = 0; k < n; ++k) {
    c.P = (As * c.P).compose_offset(bwd);
    c.Q = AuInv * c.Q.compose_offset(fwd);
  }
  return c;
}

// Jet difference between the corrected orbit of l_- and l_+∘F_c^n, per
// coordinate (x, then y components, then z components).
template <class T>
struct ConnectingResidual {
  MatPoly<T> x;  // 1×1
  MatPoly<T> y;  // d_s × 1
  MatPoly<T> z;  // d_u × 1
  bool is_zero() const { return x.is_zero() && y.is_zero() && z.is_zero(); }
  double max_abs() const {
    double m = 0;
    for (const MatPoly<T>* p : {&x, &y, &z})
      for (int k = 0; k <= p->degree(); ++k)
        for (const auto& v : p->coeff(k).entries()) m = std::max(m, std::fabs(ScalarOps<T>::to_double(v)));
    return m;
  }
  // Lowest order with a nonzero coefficient in the y-components, or -1.
  int first_nonzero_y_order() const {
    for (int k = 0; k <= y.degree(); ++k)
      if (!y.coeff(k).is_zero()) return k;
    return -1;
  }
};

struct ConnectingOptions {
  bool apply_minus = true;  // h_{n,-}: z += Q_{−n}(x) before the first step
  bool apply_plus = true;   // h_{n,+}: y −= P_n(x) after the last step
};

// Pushes l_- through h_{n,+} ∘ f̂^n ∘ h_{n,-} as jets in t and subtracts
// l_+(F_c^n(t)). The bump-function gluing of the corrected map is modeled by
// applying the two corrections exactly once, where the orbit enters and
// leaves. The orbit of q_- (t = 0) is checked against the polyball.
template <class T>
ConnectingResidual<T> verify_connecting(const ConnectingProblem<T>& P, long n, const ConnectingOptions& opt = {}) {
  const int r = P.order();
  const Correctors<T> c = connecting_correctors(P, n);
  const Series<T> Fc = P.map.center.truncated(std::max(r, 1));
  auto at_order = [&](const Series<T>& s) { return r == s.order() ? s : s.truncated(r); };
  const Series<T> fwd = at_order(Fc);
  const MatPoly<T> As = P.map.As.truncated(r), Au = P.map.Au.truncated(r);

  Series<T> x = Series<T>::variable(T(0), r);  // l_-(t) = (t, ŷ(t), 0)
  MatPoly<T> y = P.yhat;
  MatPoly<T> z(P.map.du(), 1, r);
  if (opt.apply_minus) z = z + c.Q;  // Q_{−n}(x) with x = t

  auto check_ball = [&](long step) {
    const double xc = std::fabs(ScalarOps<T>::to_double(x[0]));
    std::vector<T> y0, z0;
    for (int i = 0; i < y.rows(); ++i) y0.push_back(y.coeff(0)(i, 0));
    for (int i = 0; i < z.rows(); ++i) z0.push_back(z.coeff(0)(i, 0));
    const double tol = 1e-12;
    if (xc > P.map.alpha_c * (1 + tol) || euclidean(y0) > P.map.alpha_s * (1 + tol) || euclidean(z0) > P.map.alpha_u * (1 + tol)) {
      throw GeometryError("verify_connecting: orbit of q_- leaves the polyball at step " + std::to_string(step));
    }
  };
  check_ball(0);
  for (long j = 1; j <= n; ++j) {
    const MatPoly<T> S = As.compose_offset(x), U = Au.compose_offset(x);
    y = S * y;
    z = U * z;
    x = fwd.compose(x);
    check_ball(j);
  }
  if (opt.apply_plus) y = y - c.P.compose_offset(x);

  ConnectingResidual<T> res;
  const Series<T> target_x = x;  // F_c^n(t) computed along the orbit
  Series<T> Fn = Series<T>::variable(T(0), r);
  for (long j = 0; j < n; ++j) Fn = fwd.compose(Fn);
  res.x = MatPoly<T>::scalar(target_x) - MatPoly<T>::scalar(Fn);
  res.y = y;
  res.z = z - P.zhat.compose_offset(Fn);
  return res;
}

// ---------------------------------------------------------------------------
// Linear maps T = (λ_c x, A^s y, A^u z): closed-form correctors and
// coordinate changes for curves through q_- = (x*, y*, 0), q_+ = (0, 0, z*).

// P_n(t) = (A^s)^n (y* + ŷ'(0) t)
template <class T>
MatPoly<T> linear_corrector_P(const Mat<T>& As, const std::vector<T>& ystar, const std::vector<T>& yprime, long n, int degree = 1) {
  const Mat<T> An = As.pow(n);
  MatPoly<T> out(As.rows(), 1, degree);
  out.coeff(0) = An * Mat<T>::column(ystar);
  if (degree >= 1) out.coeff(1) = An * Mat<T>::column(yprime);
  return out;
}

// Q_{−n}(t) = (A^u)^{−n} (z* + ẑ'(0) λ_c^n t)
template <class T>
MatPoly<T> linear_corrector_Q(const Mat<T>& Au, const T& lambda_c, const std::vector<T>& zstar, const std::vector<T>& zprime, long n, int degree = 1) {
  const Mat<T> Ainv = Au.pow(-n);
  T ln(1);
  for (long k = 0; k < n; ++k) ln *= lambda_c;
  MatPoly<T> out(Au.rows(), 1, degree);
  out.coeff(0) = Ainv * Mat<T>::column(zstar);
  if (degree >= 1) out.coeff(1) = Ainv * Mat<T>::column(zprime) * ln;
  return out;
}

// Residual of h_{n,+}∘T^n∘h_{n,-}∘l_- − l_+∘(λ_c^n ·) for the linear closed
// forms, with h_{n,-}(x,y,z) = (x, y, z + Q(x − x*)) and
// h_{n,+}(x,y,z) = (x − λ_c^n x*, y − P_n(λ_c^{−n}x − x*), z); the curves are
// l_-(t) = (x* + t, y* + ŷ'(0)t, 0) and l_+(s) = (s, 0, z* + ẑ'(0)s).
template <class T>
ConnectingResidual<T> verify_linear_connecting(const T& lambda_c, const Mat<T>& As, const Mat<T>& Au, const T& xstar, const std::vector<T>& ystar, const std::vector<T>& yprime, const std::vector<T>& zstar, const std::vector<T>& zprime, long n) {
  const int r = 1;
  const MatPoly<T> P = linear_corrector_P(As, ystar, yprime, n, r);
  const MatPoly<T> Q = linear_corrector_Q(Au, lambda_c, zstar, zprime, n, r);
  T ln(1);
  for (long k = 0; k < n; ++k) ln *= lambda_c;

  Series<T> x = Series<T>::variable(xstar, r);
  MatPoly<T> y(As.rows(), 1, r);
  y.coeff(0) = Mat<T>::column(ystar);
  y.coeff(1) = Mat<T>::column(yprime);
  Series<T> shifted = x;
  shifted[0] -= xstar;
  MatPoly<T> z = Q.compose_offset(shifted);
  const Mat<T> Asn = As.pow(n), Aun = Au.pow(n);
  for (int k = 0; k <= r; ++k) {
    y.coeff(k) = Asn * y.coeff(k);
    z.coeff(k) = Aun * z.coeff(k);
  }
  x = x * ln;
  Series<T> arg = x * (T(1) / ln);
  arg[0] -= xstar;
  y = y - P.compose_offset(arg);
  x[0] -= ln * xstar;

  ConnectingResidual<T> res;
  Series<T> s = Series<T>::variable(T(0), r) * ln;
  res.x = MatPoly<T>::scalar(x) - MatPoly<T>::scalar(s);
  res.y = y;
  MatPoly<T> lz(Au.rows(), 1, r);
  lz.coeff(0) = Mat<T>::column(zstar);
  lz.coeff(1) = Mat<T>::column(zprime);
  res.z = z - lz.compose_offset(s);
  return res;
}

// ---------------------------------------------------------------------------
// Formal reduction to the skew normal form.

template <class T>
struct NormalForm {
  PolyMap<T> change;   // H, tangent to the identity
  PolyMap<T> reduced;  // the Takens-form map T with f∘H = H∘T through degree K
  TakensMap<T> takens;
};

namespace detail {

// Whether monomial e may appear in output component j of a Takens-form map
// with variables ordered (x, y_1..y_s, z_1..z_u).
inline bool takens_allowed(const std::vector<int>& e, int j, int ds, int du) {
  int ys = 0, zs = 0;
  for (int i = 0; i < ds; ++i) ys += e[static_cast<std::size_t>(1 + i)];
  for (int i = 0; i < du; ++i) zs += e[static_cast<std::size_t>(1 + ds + i)];
  if (j == 0) return ys == 0 && zs == 0;
  if (j <= ds) return ys == 1 && zs == 0;
  return ys == 0 && zs == 1;
}

inline std::string monomial_name(const std::vector<int>& e, int ds) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    const int idx = static_cast<int>(i);
    std::string v = idx == 0 ? "x" : idx <= ds ? "y" + std::to_string(idx) : "z" + std::to_string(idx - ds);
    if (!s.empty()) s += "*";
    s += v + (e[i] > 1 ? "^" + std::to_string(e[i]) : "");
  }
  return s.empty() ? "1" : s;
}

}  // namespace detail

// Solves the homological equations degree by degree. The input is the
// K-jet of a map fixing 0 in coordinates (x, y, z) whose linear part is
// diagonal, diag(1, s_1..s_{d_s}, u_1..u_{d_u}) with |s_i| < 1 < |u_i|. At
// degree k the defect E = [f∘H − H∘T]_k is split monomial-wise: terms allowed
// by the skew form go into T, the others into H with coefficient
// E/(λ^m − μ_j). A divisor closer to 0 than `gap` is a resonance.
template <class T>
NormalForm<T> normal_form_reduce(const PolyMap<T>& f, int ds, int du, double gap = 1e-6) {
  const int n = 1 + ds + du;
  if (static_cast<int>(f.size()) != n) throw ArgumentError("normal_form_reduce: map has " + std::to_string(f.size()) + " components, expected " + std::to_string(n));
  const int K = f[0].degree();
  for (const auto& c : f)
    if (c.nvars() != n || c.degree() != K) throw ArgumentError("normal_form_reduce: components must share variables and degree");
  std::vector<T> mu(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    if (!ScalarOps<T>::is_zero(f[static_cast<std::size_t>(j)][0])) throw PreconditionError("normal_form_reduce: 0 is not a fixed point");
    for (int i = 0; i < n; ++i) {
      std::vector<int> e(static_cast<std::size_t>(n), 0);
      e[static_cast<std::size_t>(i)] = 1;
      const T a = f[static_cast<std::size_t>(j)].coeff(e);
      if (i == j) {
        mu[static_cast<std::size_t>(j)] = a;
      } else if (!ScalarOps<T>::is_zero(a)) {
        throw UnsupportedError("normal_form_reduce: linear part must be diagonal");
      }
    }
  }
  if (mu[0] != T(1)) throw PreconditionError("normal_form_reduce: center eigenvalue must be 1");
  for (int i = 1; i <= ds; ++i)
    if (!(ScalarOps<T>::abs(mu[static_cast<std::size_t>(i)]) < T(1))) throw NonHyperbolicError("normal_form_reduce: stable eigenvalue of modulus >= 1");
  for (int i = ds + 1; i < n; ++i)
    if (!(ScalarOps<T>::abs(mu[static_cast<std::size_t>(i)]) > T(1))) throw NonHyperbolicError("normal_form_reduce: unstable eigenvalue of modulus <= 1");

  const MPoly<T> shape(n, K);
  auto lambda_power = [&](const std::vector<int>& e) {
    T p(1);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < e[static_cast<std::size_t>(i)]; ++k) p *= mu[static_cast<std::size_t>(i)];
    return p;
  };
  // Non-resonance for every monomial the reduction has to remove.
  for (std::size_t m = 0; m < shape.size(); ++m) {
    if (shape.total_degree(m) < 2) continue;
    const auto& e = shape.exponent(m);
    for (int j = 0; j < n; ++j) {
      if (detail::takens_allowed(e, j, ds, du)) continue;
      const T d = lambda_power(e) - mu[static_cast<std::size_t>(j)];
      if (ScalarOps<T>::to_double(ScalarOps<T>::abs(d)) < gap) {
        const std::string target = j == 0 ? "x" : j <= ds ? "y" + std::to_string(j) : "z" + std::to_string(j - ds);
        throw ResonanceError("normal_form_reduce: resonance λ^m = μ for monomial " + detail::monomial_name(e, ds) + " in component " + target + " (|λ^m − μ| = " + std::to_string(ScalarOps<T>::to_double(ScalarOps<T>::abs(d))) + ")");
      }
    }
  }

  PolyMap<T> H = identity_map<T>(n, K);
  PolyMap<T> Tm;
  for (int j = 0; j < n; ++j) Tm.push_back(f[static_cast<std::size_t>(j)].part(1));
  for (int k = 2; k <= K; ++k) {
    const PolyMap<T> lhs = compose(f, H), rhs = compose(H, Tm);
    for (int j = 0; j < n; ++j) {
      const MPoly<T> E = (lhs[static_cast<std::size_t>(j)] - rhs[static_cast<std::size_t>(j)]).part(k);
      for (std::size_t m = 0; m < E.size(); ++m) {
        if (E.total_degree(m) != k || ScalarOps<T>::is_zero(E[m])) continue;
        const auto& e = E.exponent(m);
        if (detail::takens_allowed(e, j, ds, du)) {
          Tm[static_cast<std::size_t>(j)][m] += E[m];
        } else {
          H[static_cast<std::size_t>(j)][m] += E[m] / (lambda_power(e) - mu[static_cast<std::size_t>(j)]);
        }
      }
    }
  }

  NormalForm<T> out;
  out.change = H;
  out.reduced = Tm;
  // Read off F_c, A^s(x), A^u(x) from the reduced map.
  TakensMap<T>& tk = out.takens;
  tk.center = Series<T>(K);
  tk.As = MatPoly<T>(ds, ds, std::max(K - 1, 0));
  tk.Au = MatPoly<T>(du, du, std::max(K - 1, 0));
  for (std::size_t m = 0; m < shape.size(); ++m) {
    const auto& e = shape.exponent(m);
    const int a = e[0];
    if (detail::takens_allowed(e, 0, ds, du)) tk.center[a] = Tm[0][m];
    for (int i = 0; i < ds; ++i)
      for (int j = 0; j < ds; ++j)
        if (detail::takens_allowed(e, 1 + i, ds, du) && e[static_cast<std::size_t>(1 + j)] == 1 && a <= K - 1) tk.As.coeff(a)(i, j) = Tm[static_cast<std::size_t>(1 + i)][m];
    for (int i = 0; i < du; ++i)
      for (int j = 0; j < du; ++j)
        if (detail::takens_allowed(e, 1 + ds + i, ds, du) && e[static_cast<std::size_t>(1 + ds + j)] == 1 && a <= K - 1) tk.Au.coeff(a)(i, j) = Tm[static_cast<std::size_t>(1 + ds + i)][m];
  }
  return out;
}

// f∘H − H∘T through degree K (zero for an exact reduction).
template <class T>
PolyMap<T> normal_form_defect(const PolyMap<T>& f, const NormalForm<T>& nf) {
  const PolyMap<T> a = compose(f, nf.change), b = compose(nf.change, nf.reduced);
  PolyMap<T> out;
  for (std::size_t j = 0; j < a.size(); ++j) out.push_back(a[j] - b[j]);
  return out;
}

}  // namespace phflat
