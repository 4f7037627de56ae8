#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "phflat/errors.hpp"

namespace phflat {

using Rational = mpq_class;

// Uniform access to the handful of scalar operations the templated algebra
// needs, for exact rationals and for binary64.
template <class T>
struct ScalarOps;

template <>
struct ScalarOps<double> {
  static double from_rational(const Rational& q) { return q.get_d(); }
  static double from_int(long v) { return static_cast<double>(v); }
  static double to_double(double v) { return v; }
  static double abs(double v) { return std::fabs(v); }
  static int sign(double v) { return (v > 0) - (v < 0); }
  static bool is_zero(double v) { return v == 0.0; }
  static constexpr bool exact = false;
};

template <>
struct ScalarOps<Rational> {
  static Rational from_rational(const Rational& q) { return q; }
  static Rational from_int(long v) { return Rational(v); }
  static double to_double(const Rational& v) { return v.get_d(); }
  static Rational abs(const Rational& v) { return Rational(::abs(v)); }
  static int sign(const Rational& v) { return sgn(v); }
  static bool is_zero(const Rational& v) { return sgn(v) == 0; }
  static constexpr bool exact = true;
};

// Parses an exact rational from "p/q", an integer, or a finite decimal with an
// optional exponent ("1.25", "-3e-2"). Decimals are converted exactly.
inline Rational parse_rational(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (ch != ' ' && ch != '\t' && ch != '\n' && ch != '\r') s.push_back(ch);
  }
  if (s.empty()) throw ParseError("empty rational literal");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (sgn(den) == 0) throw ParseError("zero denominator in '" + text + "'");
    Rational out = num / den;
    out.canonicalize();
    return out;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; pos < s.size(); ++pos) {
    char ch = s[pos];
    if (ch >= '0' && ch <= '9') {
      digits.push_back(ch);
      any_digit = true;
      if (seen_point) ++frac_digits;
    } else if (ch == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw ParseError("malformed rational literal '" + text + "'");
  long exponent = 0;
  if (pos < s.size()) {
    if (s[pos] != 'e' && s[pos] != 'E') throw ParseError("malformed rational literal '" + text + "'");
    ++pos;
    std::string exp_text = s.substr(pos);
    if (exp_text.empty()) throw ParseError("malformed exponent in '" + text + "'");
    std::size_t used = 0;
    try {
      exponent = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      throw ParseError("malformed exponent in '" + text + "'");
    }
    if (used != exp_text.size()) throw ParseError("malformed exponent in '" + text + "'");
  }
  mpz_class mantissa(digits, 10);
  long shift = exponent - frac_digits;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  Rational out = shift >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
  out.canonicalize();
  return negative ? Rational(-out) : out;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

}  // namespace phflat

namespace phflat {

// Exact value of base^exponent when it is rational (base > 0), else nullopt.
inline std::optional<Rational> exact_rational_power(const Rational& base, const Rational& exponent) {
  if (sgn(base) <= 0) return std::nullopt;
  Rational e = exponent;
  e.canonicalize();
  mpz_class p = e.get_num();
  mpz_class q = e.get_den();
  if (!q.fits_ulong_p() || !p.fits_slong_p()) return std::nullopt;
  const unsigned long qi = q.get_ui();
  mpz_class num_root, den_root;
  const mpz_class num = base.get_num();
  const mpz_class den = base.get_den();
  if (mpz_root(num_root.get_mpz_t(), num.get_mpz_t(), qi) == 0) return std::nullopt;
  if (mpz_root(den_root.get_mpz_t(), den.get_mpz_t(), qi) == 0) return std::nullopt;
  long pi = p.get_si();
  const bool invert = pi < 0;
  const unsigned long pu = static_cast<unsigned long>(invert ? -pi : pi);
  mpz_class a, b;
  mpz_pow_ui(a.get_mpz_t(), num_root.get_mpz_t(), pu);
  mpz_pow_ui(b.get_mpz_t(), den_root.get_mpz_t(), pu);
  Rational out = invert ? Rational(b, a) : Rational(a, b);
  out.canonicalize();
  return out;
}

}  // namespace phflat
