#pragma once

#include <cstdio>
#include <optional>
#include <string>

namespace mcdal {

/// Numeric CSV fields: 9 significant digits.
inline std::string format_g9(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

inline std::string format_g9(const std::optional<double>& value) {
  return value ? format_g9(*value) : std::string();
}

/// Shortest-safe round-trip rendering (17 significant digits).
inline std::string format_g17(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

inline std::string format_g17(const std::optional<double>& value) {
  return value ? format_g17(*value) : std::string();
}

}  // namespace mcdal
