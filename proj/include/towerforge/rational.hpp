#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

#include "towerforge/errors.hpp"

namespace towerforge {

using BigInt = boost::multiprecision::cpp_int;
// Always stored canonically: gcd(num, den) == 1, den > 0.
using Rational = boost::multiprecision::cpp_rational;

inline BigInt num(const Rational& q) { return boost::multiprecision::numerator(q); }
inline BigInt den(const Rational& q) { return boost::multiprecision::denominator(q); }

inline Rational make_rational(const BigInt& n, const BigInt& d) {
  require(d != 0, ErrorKind::kPrecondition, "rational with zero denominator");
  return Rational(n, d);
}

// Accepts "p", "p/q", and optional leading '-'. Whitespace is not tolerated:
// these strings come from JSON fields and CLI flags we control.
inline Rational parse_rational(const std::string& text) {
  require(!text.empty(), ErrorKind::kPrecondition, "empty rational literal");
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(text));
    BigInt n(text.substr(0, slash));
    BigInt d(text.substr(slash + 1));
    return make_rational(n, d);
  } catch (const std::runtime_error& e) {
    fail(ErrorKind::kPrecondition, "bad rational literal '" + text + "'");
  }
}

inline std::string to_string(const Rational& q) {
  std::string s = num(q).convert_to<std::string>();
  if (den(q) != 1) s += "/" + den(q).convert_to<std::string>();
  return s;
}

// Fixed-point decimal expansion with `digits` fractional digits, round half
// away from zero. Used only at serialization boundaries; the library itself
// never leaves exact arithmetic.
inline std::string decimal_string(const Rational& q, unsigned digits) {
  BigInt n = num(q), d = den(q);
  bool neg = n < 0;
  if (neg) n = -n;
  BigInt scale = 1;
  for (unsigned i = 0; i < digits; ++i) scale *= 10;
  BigInt scaled = n * scale;
  BigInt quot = scaled / d, rem = scaled % d;
  if (rem * 2 >= d) quot += 1;
  BigInt ip = quot / scale, fp = quot % scale;
  std::string out = (neg && (ip != 0 || fp != 0)) ? "-" : "";
  out += ip.convert_to<std::string>();
  if (digits > 0) {
    std::string frac = fp.convert_to<std::string>();
    out += "." + std::string(digits - frac.size(), '0') + frac;
  }
  return out;
}

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

// FNV-1a 64. Deterministic across runs and platforms, which is all the
// config-hash embedding needs.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace towerforge
