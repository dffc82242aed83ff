#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace spn {

/// Prints a double with 17 significant digits so it re-parses bit-exactly.
/// Integral values keep a trailing ".0" so they still read as reals.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

/// Fixed-point output with the given number of decimals (CLI default is 6).
inline std::string format_fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// C99 literal for a double constant; infinities become INFINITY from <math.h>.
inline std::string format_c_literal(double v) {
  if (std::isnan(v)) return "NAN";
  if (std::isinf(v)) return v > 0 ? "INFINITY" : "(-INFINITY)";
  std::string s = format_real(v);
  return v < 0 ? "(" + s + ")" : s;
}

}  // namespace spn
