#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "phflat/scalar.hpp"

namespace phflat {

// 100-digit binary floating point (expression templates off so generic code
// can use `auto`). Used where products of many hyperbolic factors make
// binary64 lose every significant digit.
using HighFloat = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>, boost::multiprecision::et_off>;

template <>
struct ScalarOps<HighFloat> {
  static HighFloat from_rational(const Rational& q) {
    return HighFloat(q.get_num().get_str()) / HighFloat(q.get_den().get_str());
  }
  static HighFloat from_int(long v) { return HighFloat(v); }
  static double to_double(const HighFloat& v) { return v.convert_to<double>(); }
  static HighFloat abs(const HighFloat& v) { return boost::multiprecision::abs(v); }
  static int sign(const HighFloat& v) { return v.sign(); }
  static bool is_zero(const HighFloat& v) { return v.is_zero(); }
  static constexpr bool exact = false;
};

}  // namespace phflat
