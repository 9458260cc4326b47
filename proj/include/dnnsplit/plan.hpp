#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dnnsplit/topology.hpp"

namespace dnnsplit {

struct RouteEntry {
  std::uint32_t job = 0;
  std::uint32_t priority = 0;  // 0 is the highest priority
  LayeredPath path;
  double c_fict_s = 0.0;
  std::optional<double> c_actual_s;
  bool simple = true;  // physically simple path
};

// Routes in priority order (entries[p].priority == p).
struct RoutePlan {
  std::vector<RouteEntry> entries;
  std::vector<std::string> diagnostics;

  double c_max_fict() const {
    double c = 0.0;
    for (const auto& e : entries) c = std::max(c, e.c_fict_s);
    return c;
  }
  std::optional<double> c_max_actual() const {
    double c = 0.0;
    for (const auto& e : entries) {
      if (!e.c_actual_s) return std::nullopt;
      c = std::max(c, *e.c_actual_s);
    }
    return c;
  }
  const RouteEntry& for_job(std::uint32_t job) const {
    for (const auto& e : entries)
      if (e.job == job) return e;
    throw MalformedPath("job not in plan");
  }
  bool all_simple() const {
    return std::all_of(entries.begin(), entries.end(), [](const RouteEntry& e) { return e.simple; });
  }
};

}  // namespace dnnsplit
