#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/scalar.hpp"

namespace phflat {

namespace detail {

template <class T>
concept HasScalarOps = requires(const T& v) { ScalarOps<T>::is_zero(v); };

// True only when v is known to be exactly zero (false for e.g. interval types,
// where the check is skipped).
template <class T>
bool known_zero(const T& v) {
  if constexpr (HasScalarOps<T>) {
    return ScalarOps<T>::is_zero(v);
  } else {
    return false;
  }
}

}  // namespace detail

// Truncated power series c_0 + c_1 s + ... + c_K s^K in one variable. This is
// the workhorse behind jets (c_0 = 0) and behind Taylor-mode differentiation
// of maps (evaluating a map on the series x + s yields its jet at x).
template <class T>
class Series {
 public:
  explicit Series(int order = 0) : c_(static_cast<std::size_t>(check_order(order)) + 1, T(0)) {}

  explicit Series(std::vector<T> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw ArgumentError("series needs at least one coefficient");
  }

  Series(std::initializer_list<T> coeffs) : Series(std::vector<T>(coeffs)) {}

  static Series constant(const T& value, int order) {
    Series out(order);
    out.c_[0] = value;
    return out;
  }

  // The series x0 + s (the independent variable shifted to x0).
  static Series variable(const T& x0, int order) {
    Series out(order);
    out.c_[0] = x0;
    if (order >= 1) out.c_[1] = T(1);
    return out;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const T& operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
  T& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }
  const std::vector<T>& coefficients() const { return c_; }

  // Coefficient k, or zero beyond the truncation order.
  T coeff(int k) const { return k <= order() ? c_[static_cast<std::size_t>(k)] : T(0); }

  Series truncated(int order) const {
    Series out(order);
    for (int k = 0; k <= std::min(order, this->order()); ++k) out.c_[static_cast<std::size_t>(k)] = c_[static_cast<std::size_t>(k)];
    return out;
  }

  Series& operator+=(const Series& o) {
    require_same_order(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Series& operator-=(const Series& o) {
    require_same_order(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Series& operator*=(const Series& o) {
    *this = *this * o;
    return *this;
  }
  Series& operator+=(const T& v) {
    c_[0] += v;
    return *this;
  }
  Series& operator-=(const T& v) {
    c_[0] -= v;
    return *this;
  }
  Series& operator*=(const T& v) {
    for (auto& x : c_) x *= v;
    return *this;
  }
  Series& operator/=(const T& v) {
    for (auto& x : c_) x /= v;
    return *this;
  }

  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator+(Series a, const T& v) { return a += v; }
  friend Series operator+(const T& v, Series a) { return a += v; }
  friend Series operator-(Series a, const T& v) { return a -= v; }
  friend Series operator-(const T& v, const Series& a) { return (-a) += v; }
  friend Series operator*(Series a, const T& v) { return a *= v; }
  friend Series operator*(const T& v, Series a) { return a *= v; }
  friend Series operator/(Series a, const T& v) { return a /= v; }
  friend Series operator/(const T& v, const Series& a) { return a.reciprocal() *= v; }
  friend Series operator-(Series a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }

  friend Series operator*(const Series& a, const Series& b) {
    a.require_same_order(b);
    const int K = a.order();
    Series out(K);
    for (int i = 0; i <= K; ++i) {
      if (detail::known_zero(a.c_[static_cast<std::size_t>(i)])) continue;
      for (int j = 0; i + j <= K; ++j) {
        out.c_[static_cast<std::size_t>(i + j)] += a.c_[static_cast<std::size_t>(i)] * b.c_[static_cast<std::size_t>(j)];
      }
    }
    return out;
  }

  friend Series operator/(const Series& a, const Series& b) { return a * b.reciprocal(); }

  // Multiplicative inverse; requires a nonzero constant term.
  Series reciprocal() const {
    if constexpr (detail::HasScalarOps<T>) {
      if (ScalarOps<T>::is_zero(c_[0])) throw NonInvertibleError("series reciprocal needs a nonzero constant term");
    }
    const int K = order();
    Series out(K);
    out.c_[0] = T(1) / c_[0];
    for (int k = 1; k <= K; ++k) {
      T acc(0);
      for (int j = 1; j <= k; ++j) acc += c_[static_cast<std::size_t>(j)] * out.c_[static_cast<std::size_t>(k - j)];
      out.c_[static_cast<std::size_t>(k)] = -acc / c_[0];
    }
    return out;
  }

  // this(inner(s)) truncated at this->order(); inner must vanish at 0.
  Series compose(const Series& inner) const {
    if constexpr (detail::HasScalarOps<T>) {
      if (!ScalarOps<T>::is_zero(inner.c_[0])) throw ArgumentError("series composition needs an inner series without constant term");
    }
    require_same_order(inner);
    const int K = order();
    Series out = Series::constant(c_[static_cast<std::size_t>(K)], K);
    for (int k = K - 1; k >= 0; --k) {
      out = out * inner;
      out.c_[0] += c_[static_cast<std::size_t>(k)];
    }
    return out;
  }

  Series derivative() const {
    const int K = order();
    Series out(K);
    for (int k = 1; k <= K; ++k) out.c_[static_cast<std::size_t>(k - 1)] = c_[static_cast<std::size_t>(k)] * T(k);
    return out;
  }

  // Horner evaluation of the polynomial at s.
  T eval(const T& s) const {
    T acc = c_.back();
    for (int k = order() - 1; k >= 0; --k) acc = acc * s + c_[static_cast<std::size_t>(k)];
    return acc;
  }

  bool operator==(const Series& o) const { return c_ == o.c_; }

 private:
  static int check_order(int order) {
    if (order < 0) throw ArgumentError("series order must be non-negative");
    return order;
  }
  void require_same_order(const Series& o) const {
    if (o.order() != order()) {
      throw ArgumentError("series order mismatch: " + std::to_string(order()) + " vs " + std::to_string(o.order()));
    }
  }

  std::vector<T> c_;
};

// Non-negative integer power by repeated squaring (works with zero constant term).
template <class T>
Series<T> pow(const Series<T>& a, long n) {
  if (n < 0) return pow(a.reciprocal(), -n);
  Series<T> result = Series<T>::constant(T(1), a.order());
  Series<T> base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

// Elementary functions via the standard Taylor-mode recurrences. They require
// exp/sin/cos/log to be available for T through argument-dependent lookup or std.
template <class T>
Series<T> exp(const Series<T>& a) {
  using std::exp;
  const int K = a.order();
  Series<T> b(K);
  b[0] = exp(a[0]);
  for (int k = 1; k <= K; ++k) {
    T acc(0);
    for (int j = 1; j <= k; ++j) acc += T(j) * a[j] * b[k - j];
    b[k] = acc / T(k);
  }
  return b;
}

template <class T>
std::pair<Series<T>, Series<T>> sincos(const Series<T>& a) {
  using std::cos;
  using std::sin;
  const int K = a.order();
  Series<T> s(K), c(K);
  s[0] = sin(a[0]);
  c[0] = cos(a[0]);
  for (int k = 1; k <= K; ++k) {
    T as(0), ac(0);
    for (int j = 1; j <= k; ++j) {
      as += T(j) * a[j] * c[k - j];
      ac += T(j) * a[j] * s[k - j];
    }
    s[k] = as / T(k);
    c[k] = -ac / T(k);
  }
  return {s, c};
}

template <class T>
Series<T> sin(const Series<T>& a) {
  return sincos(a).first;
}

template <class T>
Series<T> cos(const Series<T>& a) {
  return sincos(a).second;
}

template <class T>
Series<T> log(const Series<T>& a) {
  using std::log;
  const int K = a.order();
  Series<T> b(K);
  b[0] = log(a[0]);
  for (int k = 1; k <= K; ++k) {
    T acc(0);
    for (int j = 1; j < k; ++j) acc += T(j) * b[j] * a[k - j];
    b[k] = (a[k] - acc / T(k)) / a[0];
  }
  return b;
}

// Real power a^p for a series with positive constant term.
template <class T>
Series<T> pow(const Series<T>& a, const T& p) {
  return exp(log(a) * p);
}

}  // namespace phflat
