#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

#include "offload/model.hpp"

namespace offload {

/// Deterministic measure of the work a job performed.  The simulator turns
/// these into virtual time, so they must not depend on wall clock.
struct WorkUnits {
  std::uint64_t parse = 0;    // input bytes decoded
  std::uint64_t analyze = 0;  // values binned / elements summarised
};

struct WorkloadOutput {
  ResultData data;
  WorkUnits units;
};

class WorkloadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the analysis named by `spec` over the raw input file contents.
WorkloadOutput run_workload(const JobSpec& spec, std::span<const std::uint8_t> input);

}  // namespace offload
