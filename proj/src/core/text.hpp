#pragma once

#include <cstdio>
#include <string>

namespace mopinn {

// Shortest round-trippable decimal form; keeps repeated runs byte-identical.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace mopinn
