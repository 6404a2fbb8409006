#pragma once

#include <charconv>
#include <string>

#include "core/error.hpp"

namespace htlab {

// Shortest round-trip decimal rendering, the same on every rerun.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) fail(Errc::Internal, "fmt_double: to_chars failed");
  return std::string(buf, res.ptr);
}

}  // namespace htlab
