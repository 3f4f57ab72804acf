#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "simkit/errors.hpp"

namespace simkit {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string double_to_string(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double string_to_double(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not a number: \"" + std::string(s) + "\"");
  return v;
}

/// Scalar rendering for model dir-name suffixes: integral doubles drop the
/// decimal point ("k_10", not "k_10.0").
inline std::string scalar_suffix_string(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  return double_to_string(v);
}

/// Fixed-point rendering used by tables and plots: round to `digits`
/// significant digits first (skipped when digits <= 0), then print with
/// exactly `nsmall` decimals.
inline std::string format_number(double v, int nsmall, int digits) {
  if (!std::isfinite(v)) return double_to_string(v);
  double x = v;
  if (digits > 0 && x != 0.0) {
    double mag = std::ceil(std::log10(std::fabs(x)));
    double scale = std::pow(10.0, digits - mag);
    x = std::round(x * scale) / scale;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", nsmall < 0 ? 0 : nsmall, x);
  std::string s(buf);
  if (s == "-0" || s.rfind("-0.", 0) == 0) {
    // avoid "-0.00" cells for tiny negative values
    bool all_zero = true;
    for (char c : s)
      if (c >= '1' && c <= '9') all_zero = false;
    if (all_zero) s = s.substr(1);
  }
  return s;
}

}  // namespace simkit
