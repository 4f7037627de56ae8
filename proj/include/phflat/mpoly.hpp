#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/scalar.hpp"

namespace phflat {

namespace detail {

// Enumeration of the monomials in n variables of total degree <= K, graded
// then lexicographic, with a product-index table.
struct MonomialTable {
  int nvars = 0;
  int degree = 0;
  std::vector<std::vector<int>> exps;
  std::vector<int> total;
  std::map<std::vector<int>, int> index;
  std::vector<std::vector<int>> product;  // product[i][j] = index of exps[i]+exps[j], or -1

  static std::shared_ptr<const MonomialTable> get(int n, int K) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n, K}];
    if (!slot) slot = build(n, K);
    return slot;
  }

 private:
  static std::shared_ptr<const MonomialTable> build(int n, int K) {
    auto t = std::make_shared<MonomialTable>();
    t->nvars = n;
    t->degree = K;
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    for (int d = 0; d <= K; ++d) {
      // all exponent vectors of total degree d, lexicographically descending
      std::vector<std::vector<int>> level;
      std::vector<int> cur(static_cast<std::size_t>(n), 0);
      auto rec = [&](auto&& self, int var, int left) -> void {
        if (var == n - 1 || n == 0) {
          if (n > 0) cur[static_cast<std::size_t>(var)] = left;
          if (n > 0 || left == 0) level.push_back(cur);
          return;
        }
        for (int k = left; k >= 0; --k) {
          cur[static_cast<std::size_t>(var)] = k;
          self(self, var + 1, left - k);
        }
        cur[static_cast<std::size_t>(var)] = 0;
      };
      rec(rec, 0, d);
      for (auto& x : level) {
        t->index[x] = static_cast<int>(t->exps.size());
        t->exps.push_back(x);
        t->total.push_back(d);
      }
    }
    const std::size_t N = t->exps.size();
    t->product.assign(N, std::vector<int>(N, -1));
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        if (t->total[i] + t->total[j] > K) continue;
        std::vector<int> s(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) s[static_cast<std::size_t>(v)] = t->exps[i][static_cast<std::size_t>(v)] + t->exps[j][static_cast<std::size_t>(v)];
        t->product[i][j] = t->index.at(s);
      }
    return t;
  }
};

}  // namespace detail

// Polynomial in n variables truncated at total degree K (coefficients beyond
// K are dropped by every product). Used for multivariate jets of maps at a
// point and for exact polynomial maps of small degree.
template <class T>
class MPoly {
 public:
  MPoly() = default;
  MPoly(int nvars, int degree) : t_(detail::MonomialTable::get(nvars, degree)), c_(t_->exps.size(), T(0)) {}

  static MPoly constant(int nvars, int degree, const T& v) {
    MPoly p(nvars, degree);
    p.c_[0] = v;
    return p;
  }
  // c0 + x_i
  static MPoly variable(int nvars, int degree, int i, const T& c0 = T(0)) {
    if (i < 0 || i >= nvars) throw ArgumentError("mpoly: variable index out of range");
    MPoly p(nvars, degree);
    p.c_[0] = c0;
    if (degree >= 1) {
      std::vector<int> e(static_cast<std::size_t>(nvars), 0);
      e[static_cast<std::size_t>(i)] = 1;
      p.c_[static_cast<std::size_t>(p.t_->index.at(e))] = T(1);
    }
    return p;
  }

  int nvars() const { return t_ ? t_->nvars : 0; }
  int degree() const { return t_ ? t_->degree : 0; }
  std::size_t size() const { return c_.size(); }
  const std::vector<int>& exponent(std::size_t i) const { return t_->exps[i]; }
  int total_degree(std::size_t i) const { return t_->total[i]; }
  const T& operator[](std::size_t i) const { return c_[i]; }
  T& operator[](std::size_t i) { return c_[i]; }

  T coeff(const std::vector<int>& e) const {
    auto it = t_->index.find(e);
    return it == t_->index.end() ? T(0) : c_[static_cast<std::size_t>(it->second)];
  }
  void set(const std::vector<int>& e, const T& v) {
    auto it = t_->index.find(e);
    if (it == t_->index.end()) throw ArgumentError("mpoly: monomial outside the truncation");
    c_[static_cast<std::size_t>(it->second)] = v;
  }
  std::size_t index_of(const std::vector<int>& e) const { return static_cast<std::size_t>(t_->index.at(e)); }

  // Homogeneous part of degree k.
  MPoly part(int k) const {
    MPoly out(nvars(), degree());
    for (std::size_t i = 0; i < c_.size(); ++i)
      if (t_->total[i] == k) out.c_[i] = c_[i];
    return out;
  }
  MPoly truncated(int k) const {
    MPoly out(nvars(), degree());
    for (std::size_t i = 0; i < c_.size(); ++i)
      if (t_->total[i] <= k) out.c_[i] = c_[i];
    return out;
  }

  bool is_zero() const {
    for (const auto& v : c_)
      if (!ScalarOps<T>::is_zero(v)) return false;
    return true;
  }

  MPoly& operator+=(const MPoly& o) {
    same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  MPoly& operator-=(const MPoly& o) {
    same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  MPoly& operator*=(const T& v) {
    for (auto& x : c_) x *= v;
    return *this;
  }
  MPoly& operator+=(const T& v) {
    c_[0] += v;
    return *this;
  }
  friend MPoly operator+(MPoly a, const MPoly& b) { return a += b; }
  friend MPoly operator-(MPoly a, const MPoly& b) { return a -= b; }
  friend MPoly operator*(MPoly a, const T& v) { return a *= v; }
  friend MPoly operator*(const T& v, MPoly a) { return a *= v; }
  friend MPoly operator+(MPoly a, const T& v) { return a += v; }
  friend MPoly operator+(const T& v, MPoly a) { return a += v; }
  friend MPoly operator-(MPoly a, const T& v) { return a += T(-v); }
  friend MPoly operator-(const T& v, MPoly a) { return (-a) += v; }
  friend MPoly operator-(MPoly a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  friend MPoly operator*(const MPoly& a, const MPoly& b) {
    a.same(b);
    MPoly out(a.nvars(), a.degree());
    const auto& P = a.t_->product;
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      if (ScalarOps<T>::is_zero(a.c_[i])) continue;
      for (std::size_t j = 0; j < b.c_.size(); ++j) {
        const int k = P[i][j];
        if (k < 0 || ScalarOps<T>::is_zero(b.c_[j])) continue;
        out.c_[static_cast<std::size_t>(k)] += a.c_[i] * b.c_[j];
      }
    }
    return out;
  }
  bool operator==(const MPoly& o) const { return nvars() == o.nvars() && degree() == o.degree() && c_ == o.c_; }

  // Evaluates with the variables replaced by elements of any ring S closed
  // under +, * and scalar multiplication by T (scalars, series, polynomials).
  // Exact when this polynomial is the whole map; as a truncated jet it is
  // exact only for arguments without constant terms.
  template <class S>
  S substitute(const std::vector<S>& args) const {
    if (static_cast<int>(args.size()) != nvars()) throw ArgumentError("mpoly: wrong number of arguments");
    if (args.empty()) throw ArgumentError("mpoly: substitution needs at least one variable");
    S zero = args[0] * T(0);
    S one = zero;
    one += T(1);
    // powers[v][k] = args[v]^k
    std::vector<std::vector<S>> powers(args.size());
    for (std::size_t v = 0; v < args.size(); ++v) {
      powers[v].push_back(one);
      for (int k = 1; k <= degree(); ++k) powers[v].push_back(powers[v].back() * args[v]);
    }
    S out = zero;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (ScalarOps<T>::is_zero(c_[i])) continue;
      S term = one * c_[i];
      for (std::size_t v = 0; v < args.size(); ++v) {
        const int e = t_->exps[i][v];
        if (e > 0) term = term * powers[v][static_cast<std::size_t>(e)];
      }
      out += term;
    }
    return out;
  }

  T eval(const std::vector<T>& x) const { return substitute<T>(x); }

  template <class U>
  MPoly<U> convert() const {
    MPoly<U> out(nvars(), degree());
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if constexpr (std::is_same_v<T, Rational>) {
        out[i] = ScalarOps<U>::from_rational(c_[i]);
      } else {
        out[i] = static_cast<U>(c_[i]);
      }
    }
    return out;
  }

  // Same polynomial viewed with a different truncation degree.
  MPoly with_degree(int K) const {
    MPoly out(nvars(), K);
    for (std::size_t i = 0; i < c_.size(); ++i)
      if (t_->total[i] <= K) out.c_[out.index_of(t_->exps[i])] = c_[i];
    return out;
  }

  std::string to_text(const std::vector<std::string>& names) const {
    std::string s;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (ScalarOps<T>::is_zero(c_[i])) continue;
      if (!s.empty()) s += " + ";
      if constexpr (std::is_same_v<T, Rational>) {
        s += c_[i].get_str();
      } else {
        s += std::to_string(ScalarOps<T>::to_double(c_[i]));
      }
      for (int v = 0; v < nvars(); ++v) {
        const int e = t_->exps[i][static_cast<std::size_t>(v)];
        if (e == 0) continue;
        s += "*" + names[static_cast<std::size_t>(v)];
        if (e > 1) s += "^" + std::to_string(e);
      }
    }
    return s.empty() ? "0" : s;
  }

 private:
  void same(const MPoly& o) const {
    if (nvars() != o.nvars() || degree() != o.degree()) throw ArgumentError("mpoly: shape mismatch");
  }

  std::shared_ptr<const detail::MonomialTable> t_;
  std::vector<T> c_;
};

// A polynomial map ℝ^n → ℝ^m (one MPoly per output component).
template <class T>
using PolyMap = std::vector<MPoly<T>>;

// out = outer ∘ inner, component-wise substitution.
template <class T>
PolyMap<T> compose(const PolyMap<T>& outer, const PolyMap<T>& inner) {
  PolyMap<T> out;
  out.reserve(outer.size());
  for (const auto& p : outer) out.push_back(p.substitute(inner));
  return out;
}

// The identity map of ℝ^n with truncation degree K.
template <class T>
PolyMap<T> identity_map(int n, int K) {
  PolyMap<T> out;
  for (int i = 0; i < n; ++i) out.push_back(MPoly<T>::variable(n, K, i));
  return out;
}

}  // namespace phflat
