#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>

#include "ptl/errors.hpp"

namespace ptl {

// Arbitrary-precision rational. Team weights and all team-algebra results
// stay exact; doubles appear only at the entropy/solver boundary.
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rat& r) { return static_cast<double>(r); }

inline std::string rat_to_string(const Rat& r) { return r.str(); }

namespace detail {

inline bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace detail

// Accepts "p/q", integers, and decimal strings like "0.25". Negative values
// are rejected when allow_negative is false (team weights must be >= 0).
inline Rat parse_rat(const std::string& text, bool allow_negative = false) {
  std::string s = text;
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s = s.substr(1);
  }
  if (negative && !allow_negative)
    fail(ErrorKind::BadInput, "negative weight not allowed: " + text);

  Rat value;
  auto slash = s.find('/');
  auto dot = s.find('.');
  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash);
    std::string den = s.substr(slash + 1);
    if (!detail::all_digits(num) || !detail::all_digits(den))
      fail(ErrorKind::BadInput, "malformed rational: " + text);
    BigInt p(num), q(den);
    if (q == 0) fail(ErrorKind::BadInput, "zero denominator: " + text);
    value = Rat(p, q);
  } else if (dot != std::string::npos) {
    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (frac.empty()) frac = "0";
    if (!detail::all_digits(whole) || !detail::all_digits(frac))
      fail(ErrorKind::BadInput, "malformed decimal: " + text);
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    value = Rat(BigInt(whole) * scale + BigInt(frac), scale);
  } else {
    if (!detail::all_digits(s))
      fail(ErrorKind::BadInput, "malformed number: " + text);
    value = Rat(BigInt(s));
  }
  if (negative) value = -value;
  return value;
}

// Best rational approximation of x with denominator <= max_den, by
// truncating the continued-fraction expansion. Used to round solver
// iterates back onto exactly checkable values.
inline Rat rationalize(double x, std::int64_t max_den = 1000000) {
  if (x != x) fail(ErrorKind::BadInput, "cannot rationalize NaN");
  bool neg = x < 0;
  double v = neg ? -x : x;
  // p/q track the current convergent, pp/qq the previous one. When the cap
  // stops the expansion, the semiconvergent with the largest feasible last
  // term may still be closer than the last full convergent.
  std::int64_t pp = 0, qq = 1, p = 1, q = 0;
  std::int64_t sp = 0, sq = 0;
  double frac = v;
  for (int iter = 0; iter < 64; ++iter) {
    double fl = std::floor(frac);
    if (fl > 9e18) break;
    std::int64_t a = static_cast<std::int64_t>(fl);
    std::int64_t np = a * p + pp;
    std::int64_t nq = a * q + qq;
    if (nq > max_den || np < 0 || nq < 0) {
      if (q > 0) {
        std::int64_t cut = (max_den - qq) / q;
        if (cut >= 1) {
          sp = cut * p + pp;
          sq = cut * q + qq;
        }
      }
      break;
    }
    pp = p; qq = q; p = np; q = nq;
    double rem = frac - fl;
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
  }
  if (q == 0) return Rat(0);
  Rat r(p, q);
  if (sq > 0) {
    Rat s(sp, sq);
    if (std::abs(to_double(s) - v) < std::abs(to_double(r) - v)) r = s;
  }
  return neg ? -r : r;
}

}  // namespace ptl
