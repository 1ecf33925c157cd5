#pragma once

// Scalar types: doubles for fast evaluation, GMP rationals for exact
// evaluation, GMP integers for procedure counts.

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

#include "pooltest/errors.hpp"

namespace pooltest {

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

enum class EvalMode { kFloat, kExact };

inline std::string_view to_string(EvalMode m) { return m == EvalMode::kExact ? "exact" : "float"; }

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Parses "0.17", "1e-3", "17/100" or "1" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) throw ParseError("empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_rational(text.substr(0, slash));
    const Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    return num / den;
  }
  std::string_view mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = text.substr(0, e);
    auto exp_text = text.substr(e + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    auto [p, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc{} || p != exp_text.data() + exp_text.size() || exp_text.empty()) {
      throw ParseError("bad exponent in '" + std::string(text) + "'");
    }
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa.front() == '-' || mantissa.front() == '+')) {
    negative = mantissa.front() == '-';
    mantissa.remove_prefix(1);
  }
  std::string digits;
  bool seen_dot = false;
  bool any_digit = false;
  for (char c : mantissa) {
    if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      digits += c;
      any_digit = true;
      if (seen_dot) --exponent;
    } else {
      throw ParseError("not a number: '" + std::string(text) + "'");
    }
  }
  if (!any_digit) throw ParseError("not a number: '" + std::string(text) + "'");
  if (exponent > 4000 || exponent < -4000) throw ParseError("exponent out of range");
  // A leading zero would make GMP read the digits as octal.
  const auto nz = digits.find_first_not_of('0');
  digits = nz == std::string::npos ? "0" : digits.substr(nz);
  BigInt value(digits);
  Rational r(value);
  BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::labs(exponent)));
  if (exponent >= 0) {
    r *= Rational(scale);
  } else {
    r /= Rational(scale);
  }
  return negative ? Rational(-r) : r;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double d) { return d; }

/// Exact rational value of a double (every finite double is a dyadic rational).
inline Rational exact_rational(double d) {
  if (!std::isfinite(d)) throw ArgumentError("non-finite value");
  return Rational(d);
}

inline std::string to_string(const Rational& r) { return r.str(); }

inline std::vector<double> to_doubles(const std::vector<Rational>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& r : v) out.push_back(to_double(r));
  return out;
}

inline std::vector<Rational> to_rationals(const std::vector<double>& v) {
  std::vector<Rational> out;
  out.reserve(v.size());
  for (double d : v) out.push_back(exact_rational(d));
  return out;
}

}  // namespace pooltest
