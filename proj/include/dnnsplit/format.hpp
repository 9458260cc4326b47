#pragma once

#include <charconv>
#include <string>

namespace dnnsplit {

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace dnnsplit
