#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

#include "wagerlab/error.hpp"

namespace wagerlab {

// All game quantities (masses, measures, capitals, thresholds) are exact
// rationals; there is no floating-point mode anywhere in the library.
using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Integer pow2(unsigned e) {
  Integer one = 1;
  return one << e;
}

// 2^-e as a rational.
inline Rational pow2_neg(unsigned e) { return Rational(1, pow2(e)); }

// Canonical text form: "p/q", base 10, lowest terms, q >= 1. Integers render
// as "p/1".
inline std::string format_rational(const Rational& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

// Accepts "p/q" or a bare integer "p".
inline Rational parse_rational(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return Rational(Integer(text));
    }
    Integer num(text.substr(0, slash));
    Integer den(text.substr(slash + 1));
    require(den > 0, Code::parse, "rational denominator must be positive: " + text);
    return Rational(num, den);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(Code::parse, "bad rational: " + text);
  }
}

}  // namespace wagerlab
