#pragma once

#include <boost/numeric/interval.hpp>

#include <cmath>
#include <limits>

#include "phflat/scalar.hpp"

namespace phflat {

// Outward-rounded double intervals (transcendental functions through the
// standard library with rounding-mode protection).
using Interval = boost::numeric::interval<
    double, boost::numeric::interval_lib::policies<
                boost::numeric::interval_lib::save_state<boost::numeric::interval_lib::rounded_transc_std<double>>,
                boost::numeric::interval_lib::checking_base<double>>>;

// Smallest interval guaranteed to contain the exact rational q: the nearest
// double widened by one ulp on each side.
inline Interval enclose(const Rational& q) {
  const double d = q.get_d();
  if (Rational(d) == q) return Interval(d);
  return Interval(std::nextafter(d, -std::numeric_limits<double>::infinity()), std::nextafter(d, std::numeric_limits<double>::infinity()));
}

// Interval containing the real number nearest to d in both directions.
inline Interval enclose(double d) { return Interval(d); }

}  // namespace phflat
