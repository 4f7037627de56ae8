#pragma once

// Independent jet arithmetic for tests: plain coefficient vectors and nested
// loops, sharing no code with the library's Series/Jet machinery.

#include <gmpxx.h>

#include <cstddef>
#include <vector>

namespace oracle {

using Q = mpq_class;
using Coeffs = std::vector<Q>;  // c_1..c_K

// Coefficients c_1..c_K of outer(inner(t)), by expanding inner^j term by term.
inline Coeffs compose(const Coeffs& outer, const Coeffs& inner) {
  const std::size_t K = outer.size();
  Coeffs result(K + 1, Q(0));
  Coeffs power(K + 1, Q(0));
  power[0] = 1;
  for (std::size_t j = 1; j <= K; ++j) {
    Coeffs next(K + 1, Q(0));
    for (std::size_t a = 0; a <= K; ++a) {
      if (power[a] == 0) continue;
      for (std::size_t b = 1; a + b <= K && b <= inner.size(); ++b) next[a + b] += power[a] * inner[b - 1];
    }
    power = next;
    for (std::size_t k = 0; k <= K; ++k) result[k] += outer[j - 1] * power[k];
  }
  return Coeffs(result.begin() + 1, result.end());
}

inline Coeffs identity(std::size_t K) {
  Coeffs c(K, Q(0));
  c[0] = 1;
  return c;
}

// Polynomial a_1 t + ... + a_r t^r padded or truncated to order K.
inline Coeffs pad(Coeffs a, std::size_t K) {
  a.resize(K, Q(0));
  return a;
}

// n-fold self-composition (n >= 0) by repeated squaring.
inline Coeffs power(const Coeffs& F, long n) {
  Coeffs result = identity(F.size());
  Coeffs base = F;
  while (n > 0) {
    if (n & 1) result = compose(base, result);
    n >>= 1;
    if (n > 0) base = compose(base, base);
  }
  return result;
}

// Index of the first nonzero coefficient after c_1 (minus one), i.e. the
// flatness order, for a germ with c_1 = 1; K if flat to the truncation.
inline int flat_order(const Coeffs& F) {
  if (F[0] != 1) return 0;
  for (std::size_t j = 1; j < F.size(); ++j) {
    if (F[j] != 0) return static_cast<int>(j);
  }
  return static_cast<int>(F.size());
}

// Nonlinearity 2c_2/c_1 and Schwarzian 6c_3/c_1 − 6(c_2/c_1)^2.
inline Q A(const Coeffs& F) { return 2 * F[1] / F[0]; }
inline Q S(const Coeffs& F) {
  Q r = F[1] / F[0];
  return 6 * F[2] / F[0] - 6 * r * r;
}

}  // namespace oracle
