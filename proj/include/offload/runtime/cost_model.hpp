#pragma once

#include <cmath>
#include <cstdint>

#include "offload/runtime/fabric.hpp"
#include "offload/workloads/run.hpp"

namespace offload {

/**
 * Virtual compute time.  A workload reports how much it did (WorkUnits);
 * each unit has a fixed reference cost, and a container's speed_factor
 * multiplies it.  Base costs are rounded to whole microseconds before
 * scaling, so a factor of 2.0 gives exactly twice the reference time.
 */
struct CostModel {
  double parse_ns_per_byte = 20.0;
  double analyze_ns_per_value = 10.0;

  Micros base_parse_us(const WorkUnits& u) const {
    return std::llround(static_cast<double>(u.parse) * parse_ns_per_byte / 1000.0);
  }
  Micros base_analyze_us(const WorkUnits& u) const {
    return std::llround(static_cast<double>(u.analyze) * analyze_ns_per_value / 1000.0);
  }
  static Micros scaled(Micros base, double speed_factor) {
    return std::llround(static_cast<double>(base) * speed_factor);
  }
};

}  // namespace offload
