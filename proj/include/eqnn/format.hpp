#pragma once

#include <cstdio>
#include <span>
#include <string>

namespace eqnn {

// 17 significant digits round-trips every double; the short form is for
// people.
inline std::string format_real(double x, bool exact = true) {
  char buf[40];
  if (x == 0.0) x = 0.0;  // no "-0"
  std::snprintf(buf, sizeof buf, exact ? "%.17g" : "%.6g", x);
  return buf;
}

inline std::string format_vector(std::span<const double> v, bool exact = false) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i], exact);
  return s + ")";
}

}  // namespace eqnn
