#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/scalar.hpp"
#include "phflat/series.hpp"

namespace phflat {

// Truncated Taylor jet c_1 t + ... + c_K t^K of a local diffeomorphism of
// (R, 0). Immutable value type; all operations truncate at the common order K.
template <class T>
class Jet {
 public:
  // Builds a jet from c_1..c_K; c_1 must be nonzero.
  explicit Jet(std::vector<T> coeffs) : s_(0) {
    if (coeffs.empty()) throw ArgumentError("jet order must be at least 1");
    if (ScalarOps<T>::is_zero(coeffs[0])) throw NonInvertibleError("jet linear coefficient must be nonzero");
    std::vector<T> full;
    full.reserve(coeffs.size() + 1);
    full.push_back(T(0));
    for (auto& c : coeffs) full.push_back(std::move(c));
    s_ = Series<T>(std::move(full));
  }

  // Wraps a series whose constant term is zero and linear term nonzero.
  static Jet from_series(const Series<T>& s) {
    if (s.order() < 1) throw ArgumentError("jet order must be at least 1");
    if (!ScalarOps<T>::is_zero(s[0])) throw ArgumentError("jet series must vanish at 0");
    std::vector<T> c(s.coefficients().begin() + 1, s.coefficients().end());
    return Jet(std::move(c));
  }

  static Jet identity(int order) { return linear(T(1), order); }

  static Jet linear(const T& lambda, int order) {
    if (order < 1) throw ArgumentError("jet order must be at least 1");
    std::vector<T> c(static_cast<std::size_t>(order), T(0));
    c[0] = lambda;
    return Jet(std::move(c));
  }

  int order() const { return s_.order(); }

  // Coefficient of t^k (k = 0..K; c_0 is always 0).
  const T& c(int k) const {
    if (k < 0 || k > order()) throw ArgumentError("jet coefficient index out of range");
    return s_[k];
  }

  // c_1..c_K as a vector.
  std::vector<T> coefficients() const { return std::vector<T>(s_.coefficients().begin() + 1, s_.coefficients().end()); }

  const Series<T>& series() const { return s_; }

  // Same germ at a different truncation order (padding with zeros when raising).
  Jet with_order(int order) const {
    if (order < 1) throw ArgumentError("jet order must be at least 1");
    return from_series(s_.truncated(order));
  }

  T eval(const T& t) const { return s_.eval(t); }

  bool operator==(const Jet& o) const { return s_ == o.s_; }
  bool operator!=(const Jet& o) const { return !(*this == o); }

 private:
  Series<T> s_;
};

using RationalJet = Jet<Rational>;
using DoubleJet = Jet<double>;

// Pair of signs of the nonlinearity and Schwarzian.
struct SignPair {
  int tau_A = 0;
  int tau_S = 0;
  bool operator==(const SignPair&) const = default;
};

template <class T>
struct ASPair {
  T A;
  T S;
};

// outer ∘ inner truncated at the common order.
template <class T>
Jet<T> compose(const Jet<T>& outer, const Jet<T>& inner) {
  if (outer.order() != inner.order()) {
    throw ArgumentError("compose: order mismatch " + std::to_string(outer.order()) + " vs " + std::to_string(inner.order()));
  }
  return Jet<T>::from_series(outer.series().compose(inner.series()));
}

// Compositional inverse, solved coefficient by coefficient.
template <class T>
Jet<T> invert(const Jet<T>& F) {
  const int K = F.order();
  const T c1 = F.c(1);
  if (ScalarOps<T>::is_zero(c1)) throw NonInvertibleError("invert: linear coefficient is zero");
  Series<T> g(K);
  g[1] = T(1) / c1;
  for (int k = 2; k <= K; ++k) {
    Series<T> h = F.series().compose(g);
    g[k] = -h[k] / c1;
  }
  return Jet<T>::from_series(g);
}

// F^n under composition (n may be negative).
template <class T>
Jet<T> power(const Jet<T>& F, long n) {
  if (n < 0) return power(invert(F), -n);
  Jet<T> result = Jet<T>::identity(F.order());
  Jet<T> base = F;
  while (n > 0) {
    if (n & 1) result = compose(base, result);
    n >>= 1;
    if (n > 0) base = compose(base, base);
  }
  return result;
}

// Nonlinearity A = F''/F' and Schwarzian S = F'''/F' - (3/2)(F''/F')^2 at 0.
template <class T>
ASPair<T> invariants_AS(const Jet<T>& F) {
  if (F.order() < 3) throw InsufficientOrderError("invariants_AS needs a jet of order >= 3");
  const T c1 = F.c(1);
  const T r2 = F.c(2) / c1;
  const T r3 = F.c(3) / c1;
  T A = T(2) * r2;
  T S = T(6) * r3 - T(6) * r2 * r2;
  return {A, S};
}

// H^{-1} ∘ F ∘ H.
template <class T>
Jet<T> conjugate(const Jet<T>& F, const Jet<T>& H) {
  if (F.order() != H.order()) throw ArgumentError("conjugate: order mismatch");
  return compose(invert(H), compose(F, H));
}

// 0 if c_1 != 1; otherwise the largest k <= K with c_2 = ... = c_k = 0.
template <class T>
int flat_order(const Jet<T>& F) {
  if (F.c(1) != T(1)) return 0;
  int k = 1;
  while (k < F.order() && ScalarOps<T>::is_zero(F.c(k + 1))) ++k;
  return k;
}

// Binary64 flatness with an absolute coefficient tolerance.
inline int flat_order(const Jet<double>& F, double tol) {
  if (std::fabs(F.c(1) - 1.0) > tol) return 0;
  int k = 1;
  while (k < F.order() && std::fabs(F.c(k + 1)) <= tol) ++k;
  return k;
}

template <class T>
int sign_of(const T& v) {
  return ScalarOps<T>::sign(v);
}

// Signs of (A, S) for a 1-flat germ.
template <class T>
SignPair signature(const Jet<T>& F) {
  if (flat_order(F) < 1) throw PreconditionError("signature: germ is not 1-flat, so the signs of A and S are not conjugacy invariants");
  auto as = invariants_AS(F);
  return {sign_of(as.A), sign_of(as.S)};
}

namespace detail {

// Time-mu flow of the vector field X(t) d/dt (X without constant or linear
// term) applied to t, via the Lie series sum_j mu^j/j! (X d/dt)^j t.
template <class T>
Series<T> lie_flow(const Series<T>& X, const T& mu) {
  const int K = X.order();
  Series<T> term = Series<T>::variable(T(0), K);
  Series<T> sum = term;
  for (int j = 1; j <= K; ++j) {
    term = X * term.derivative();
    term *= mu;
    term /= T(j);
    sum += term;
  }
  return sum;
}

template <class T>
T scalar_power(const T& base, const T& exponent) {
  if constexpr (ScalarOps<T>::exact) {
    auto r = exact_rational_power(base, exponent);
    if (!r) {
      throw ArgumentError("flow_embed: multiplier " + base.get_str() + " raised to " + exponent.get_str() + " is irrational");
    }
    return *r;
  } else {
    return std::pow(base, exponent);
  }
}

}  // namespace detail

// Formal vector field X (X(t) = x_2 t^2 + ...) whose time-1 flow is the 1-flat
// germ F, solved order by order.
template <class T>
Series<T> formal_logarithm(const Jet<T>& F) {
  if (F.c(1) != T(1)) throw PreconditionError("formal_logarithm needs a 1-flat germ");
  const int K = F.order();
  Series<T> X(K);
  for (int k = 2; k <= K; ++k) {
    Series<T> phi = detail::lie_flow(X, T(1));
    X[k] = F.c(k) - phi[k];
  }
  return X;
}

// Embeds F in a formal flow and returns its time-mu map. For c_1 = 1 the flow
// comes from the formal logarithm; for c_1 != 1 the germ is first formally
// linearised, Φ^mu = h ∘ (c_1^mu t) ∘ h^{-1}, which is the same flow.
template <class T>
Jet<T> flow_embed(const Jet<T>& F, const T& mu) {
  const T lambda = F.c(1);
  if (ScalarOps<T>::sign(lambda) <= 0) throw OrientationError("flow_embed needs an orientation-preserving germ (c_1 > 0)");
  const int K = F.order();
  if (lambda == T(1)) {
    return Jet<T>::from_series(detail::lie_flow(formal_logarithm(F), mu));
  }
  Series<T> h = Series<T>::variable(T(0), K);
  Series<T> lin(K);
  for (int k = 2; k <= K; ++k) {
    // Residual of F∘h = h∘(lambda t) at order k with h_k = 0.
    for (int j = 1; j <= K; ++j) {
      T pw = lambda;
      for (int i = 1; i < j; ++i) pw *= lambda;
      lin[j] = h[j] * pw;
    }
    Series<T> lhs = F.series().compose(h);
    const T residual = lhs[k] - lin[k];
    T lk = lambda;
    for (int i = 1; i < k; ++i) lk *= lambda;
    h[k] = residual / (lk - lambda);
  }
  Jet<T> hj = Jet<T>::from_series(h);
  Jet<T> scaled = Jet<T>::linear(detail::scalar_power(lambda, mu), K);
  return compose(hj, compose(scaled, invert(hj)));
}

// Polynomial P(t) = a_1 t + ... + a_r t^r with P(0) = 0 (a_1 may vanish).
template <class T>
class PolyGerm {
 public:
  PolyGerm() = default;
  explicit PolyGerm(std::vector<T> a) : a_(std::move(a)) {}

  static PolyGerm identity(int degree) {
    std::vector<T> a(static_cast<std::size_t>(std::max(degree, 1)), T(0));
    a[0] = T(1);
    return PolyGerm(std::move(a));
  }

  // Degree-r Taylor polynomial of a jet.
  static PolyGerm taylor(const Jet<T>& F, int degree) {
    std::vector<T> a(static_cast<std::size_t>(degree), T(0));
    for (int k = 1; k <= degree && k <= F.order(); ++k) a[static_cast<std::size_t>(k - 1)] = F.c(k);
    return PolyGerm(std::move(a));
  }

  int degree() const { return static_cast<int>(a_.size()); }
  T a(int k) const { return (k >= 1 && k <= degree()) ? a_[static_cast<std::size_t>(k - 1)] : T(0); }
  const std::vector<T>& coefficients() const { return a_; }

  // The germ as a jet of order K (needs a_1 != 0).
  Jet<T> to_jet(int order) const {
    std::vector<T> c(static_cast<std::size_t>(order), T(0));
    for (int k = 1; k <= order && k <= degree(); ++k) c[static_cast<std::size_t>(k - 1)] = a_[static_cast<std::size_t>(k - 1)];
    return Jet<T>(std::move(c));
  }

  friend PolyGerm operator+(const PolyGerm& p, const PolyGerm& q) {
    std::vector<T> a(static_cast<std::size_t>(std::max(p.degree(), q.degree())), T(0));
    for (int k = 1; k <= static_cast<int>(a.size()); ++k) a[static_cast<std::size_t>(k - 1)] = p.a(k) + q.a(k);
    return PolyGerm(std::move(a));
  }
  friend PolyGerm operator-(const PolyGerm& p, const PolyGerm& q) {
    std::vector<T> a(static_cast<std::size_t>(std::max(p.degree(), q.degree())), T(0));
    for (int k = 1; k <= static_cast<int>(a.size()); ++k) a[static_cast<std::size_t>(k - 1)] = p.a(k) - q.a(k);
    return PolyGerm(std::move(a));
  }

  bool is_identity() const {
    for (int k = 1; k <= degree(); ++k) {
      if (a(k) != (k == 1 ? T(1) : T(0))) return false;
    }
    return degree() >= 1;
  }

 private:
  std::vector<T> a_;
};

// ‖P‖_r = |a_1| + ... + |a_r|.
template <class T>
T poly_norm(const PolyGerm<T>& P) {
  T sum(0);
  for (const auto& a : P.coefficients()) sum += ScalarOps<T>::abs(a);
  return sum;
}

// ‖H − id‖_r, the distance used for corrector boxes.
template <class T>
T distance_to_identity(const PolyGerm<T>& H) {
  return poly_norm(H - PolyGerm<T>::identity(std::max(H.degree(), 1)));
}

// ---------------------------------------------------------------------------
// Text form: jet(K)[c1, c2, ...] with exact rationals p/q.

inline std::string format_scalar(const Rational& v) { return v.get_str(); }

inline std::string format_scalar(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string to_text(const Jet<T>& F) {
  std::ostringstream os;
  os << "jet(" << F.order() << ")[";
  for (int k = 1; k <= F.order(); ++k) {
    if (k > 1) os << ", ";
    os << format_scalar(F.c(k));
  }
  os << "]";
  return os.str();
}

template <class T>
std::string to_text(const PolyGerm<T>& P) {
  std::ostringstream os;
  os << "poly(" << P.degree() << ")[";
  for (int k = 1; k <= P.degree(); ++k) {
    if (k > 1) os << ", ";
    os << format_scalar(P.a(k));
  }
  os << "]";
  return os.str();
}

namespace detail {

// Splits "name(K)[a, b, c]" into K and the list of entries.
inline std::pair<int, std::vector<std::string>> parse_bracketed(const std::string& text, const std::string& name) {
  std::string s;
  for (char ch : text) {
    if (ch != ' ' && ch != '\t' && ch != '\n' && ch != '\r') s.push_back(ch);
  }
  const std::string head = name + "(";
  if (s.rfind(head, 0) != 0) throw ParseError("expected '" + name + "(K)[...]', got '" + text + "'");
  auto close = s.find(')');
  if (close == std::string::npos || close + 1 >= s.size() || s[close + 1] != '[' || s.back() != ']') {
    throw ParseError("malformed " + name + " text '" + text + "'");
  }
  int K = 0;
  try {
    std::size_t used = 0;
    K = std::stoi(s.substr(head.size(), close - head.size()), &used);
    if (used != close - head.size()) throw ParseError("bad order");
  } catch (const std::exception&) {
    throw ParseError("malformed order in '" + text + "'");
  }
  std::string body = s.substr(close + 2, s.size() - close - 3);
  std::vector<std::string> entries;
  if (!body.empty()) {
    std::size_t start = 0;
    while (true) {
      auto comma = body.find(',', start);
      entries.push_back(body.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (K < 1) throw ParseError("order must be at least 1 in '" + text + "'");
  if (static_cast<int>(entries.size()) > K) throw ParseError("more coefficients than the declared order in '" + text + "'");
  return {K, entries};
}

}  // namespace detail

// Parses jet(K)[c1, ..., cj] with j <= K (missing trailing coefficients are 0).
inline Jet<Rational> parse_jet(const std::string& text) {
  auto [K, entries] = detail::parse_bracketed(text, "jet");
  std::vector<Rational> c(static_cast<std::size_t>(K), Rational(0));
  for (std::size_t i = 0; i < entries.size(); ++i) c[i] = parse_rational(entries[i]);
  return Jet<Rational>(std::move(c));
}

inline PolyGerm<Rational> parse_polygerm(const std::string& text) {
  auto [K, entries] = detail::parse_bracketed(text, "poly");
  std::vector<Rational> a(static_cast<std::size_t>(K), Rational(0));
  for (std::size_t i = 0; i < entries.size(); ++i) a[i] = parse_rational(entries[i]);
  return PolyGerm<Rational>(std::move(a));
}

// Exact-to-binary64 conversion of a jet.
inline Jet<double> to_double(const Jet<Rational>& F) {
  std::vector<double> c;
  for (int k = 1; k <= F.order(); ++k) c.push_back(F.c(k).get_d());
  return Jet<double>(std::move(c));
}

}  // namespace phflat
