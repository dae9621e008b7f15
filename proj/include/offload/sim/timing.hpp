#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "offload/model.hpp"
#include "offload/runtime/cost_model.hpp"
#include "offload/sim/simulation.hpp"

namespace offload {

/// Parameters of the with/without-agents comparison.
struct TimingModel {
  double client_speed = 2.0;
  double server_speed = 1.0;
  LinkParams client_link{500'000.0, 50'000};
  LinkParams server_link{10'000'000.0, 5'000};
  CostModel cost;
  Micros display = 50'000;
  std::uint64_t file_size = 5'000'000;
  std::uint64_t snapshot_bytes = 2'048;
  std::uint64_t result_bytes = 20'480;

  /// Client-to-server path: slower bandwidth, larger latency.
  LinkParams path() const;
};

struct PhaseTiming {
  std::string phase;
  Micros duration = 0;
  friend bool operator==(const PhaseTiming&, const PhaseTiming&) = default;
};

struct TimingReport {
  std::string scenario;  // "without_agents" or "with_agents", optionally ":<job>"
  std::vector<PhaseTiming> phases;

  Micros total() const;
  /// Duration of `phase`, 0 when absent.
  Micros phase(std::string_view name) const;
  friend bool operator==(const TimingReport&, const TimingReport&) = default;
};

/// download, parse, analyze, display; all compute on the client.
TimingReport run_without_agents(const JobSpec& spec, const TimingModel& model, std::span<const std::uint8_t> input);
/// migrate, parse, analyze, result_transfer, display; compute on the server.
TimingReport run_with_agents(const JobSpec& spec, const TimingModel& model, std::span<const std::uint8_t> input);

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV with header scenario,phase,duration_ms; milliseconds with three
/// decimals, so whole microseconds survive a round trip.
std::string emit_report(const std::vector<TimingReport>& reports);
std::vector<TimingReport> parse_report(std::string_view csv);

}  // namespace offload
