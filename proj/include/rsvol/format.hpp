#pragma once

#include <cstdio>
#include <string>

namespace rsvol {

/// Round-trip representation with 17 significant digits.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace rsvol
