#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/scalar.hpp"

namespace phflat {

// Small dense row-major matrix over an exact or floating scalar. Only what the
// seminorm calculus needs: arithmetic, powers and an exact (Gauss-Jordan)
// inverse. Spectral norms go through Eigen in binary64.
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows * cols), T(0)) {
    if (rows < 0 || cols < 0) throw ArgumentError("matrix: negative dimension");
  }
  Mat(int rows, int cols, std::vector<T> entries) : r_(rows), c_(cols), a_(std::move(entries)) {
    if (static_cast<int>(a_.size()) != rows * cols) throw ArgumentError("matrix: entry count does not match the shape");
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static Mat scalar(const T& v) { return Mat(1, 1, {v}); }
  static Mat column(const std::vector<T>& v) { return Mat(static_cast<int>(v.size()), 1, v); }
  static Mat diagonal(const std::vector<T>& d) {
    Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  T& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * c_ + j)]; }
  const T& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * c_ + j)]; }
  const std::vector<T>& entries() const { return a_; }

  bool is_zero() const {
    for (const auto& v : a_) {
      if (!ScalarOps<T>::is_zero(v)) return false;
    }
    return true;
  }

  Mat& operator+=(const Mat& o) {
    same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Mat& operator*=(const T& v) {
    for (auto& x : a_) x *= v;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, const T& v) { return a *= v; }
  friend Mat operator*(const T& v, Mat a) { return a *= v; }
  friend Mat operator-(Mat a) {
    for (auto& x : a.a_) x = -x;
    return a;
  }
  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.c_ != b.r_) throw ArgumentError("matrix product: inner dimensions differ");
    Mat out(a.r_, b.c_);
    for (int i = 0; i < a.r_; ++i)
      for (int k = 0; k < a.c_; ++k) {
        const T& aik = a(i, k);
        if (ScalarOps<T>::is_zero(aik)) continue;
        for (int j = 0; j < b.c_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }
  bool operator==(const Mat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }

  // Gauss-Jordan with the largest-magnitude pivot; throws when singular.
  Mat inverse() const {
    if (r_ != c_) throw ArgumentError("matrix inverse: not square");
    const int n = r_;
    Mat a = *this, inv = identity(n);
    for (int col = 0; col < n; ++col) {
      int piv = -1;
      double best = 0;
      for (int i = col; i < n; ++i) {
        const double m = std::fabs(ScalarOps<T>::to_double(a(i, col)));
        if (!ScalarOps<T>::is_zero(a(i, col)) && (piv < 0 || m > best)) {
          piv = i;
          best = m;
        }
      }
      if (piv < 0) throw NonInvertibleError("matrix inverse: singular matrix");
      if (piv != col) {
        for (int j = 0; j < n; ++j) {
          std::swap(a(col, j), a(piv, j));
          std::swap(inv(col, j), inv(piv, j));
        }
      }
      const T p = a(col, col);
      for (int j = 0; j < n; ++j) {
        a(col, j) /= p;
        inv(col, j) /= p;
      }
      for (int i = 0; i < n; ++i) {
        if (i == col || ScalarOps<T>::is_zero(a(i, col))) continue;
        const T f = a(i, col);
        for (int j = 0; j < n; ++j) {
          a(i, j) -= f * a(col, j);
          inv(i, j) -= f * inv(col, j);
        }
      }
    }
    return inv;
  }

  Mat pow(long n) const {
    if (n < 0) return inverse().pow(-n);
    Mat result = identity(r_), base = *this;
    while (n > 0) {
      if (n & 1) result = result * base;
      n >>= 1;
      if (n > 0) base = base * base;
    }
    return result;
  }

  Eigen::MatrixXd to_eigen() const {
    Eigen::MatrixXd m(r_, c_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(i, j) = ScalarOps<T>::to_double((*this)(i, j));
    return m;
  }

 private:
  void same_shape(const Mat& o) const {
    if (r_ != o.r_ || c_ != o.c_) throw ArgumentError("matrix: shape mismatch");
  }

  int r_ = 0, c_ = 0;
  std::vector<T> a_;
};

// Operator norm for the Euclidean norms (largest singular value); exact
// absolute value for 1×1 matrices.
template <class T>
double spectral_norm(const Mat<T>& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::fabs(ScalarOps<T>::to_double(m(0, 0)));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.to_eigen());
  return svd.singularValues()(0);
}

template <class U, class T>
Mat<U> convert(const Mat<T>& m) {
  std::vector<U> e;
  e.reserve(m.entries().size());
  for (const auto& v : m.entries()) {
    if constexpr (std::is_same_v<T, Rational>) {
      e.push_back(ScalarOps<U>::from_rational(v));
    } else {
      e.push_back(static_cast<U>(v));
    }
  }
  return Mat<U>(m.rows(), m.cols(), std::move(e));
}

}  // namespace phflat
