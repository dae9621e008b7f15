#include "offload/sim/timing.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <numeric>

#include "offload/workloads/run.hpp"

namespace offload {

LinkParams TimingModel::path() const {
  return {std::min(client_link.bandwidth, server_link.bandwidth), std::max(client_link.latency, server_link.latency)};
}

Micros TimingReport::total() const {
  return std::accumulate(phases.begin(), phases.end(), Micros{0},
                         [](Micros acc, const PhaseTiming& p) { return acc + p.duration; });
}

Micros TimingReport::phase(std::string_view name) const {
  for (const auto& p : phases) {
    if (p.phase == name) return p.duration;
  }
  return 0;
}

TimingReport run_without_agents(const JobSpec& spec, const TimingModel& model, std::span<const std::uint8_t> input) {
  const WorkUnits units = run_workload(spec, input).units;
  TimingReport r{"without_agents", {}};
  r.phases.push_back({"download", transfer_time(model.file_size, model.client_link)});
  r.phases.push_back({"parse", CostModel::scaled(model.cost.base_parse_us(units), model.client_speed)});
  r.phases.push_back({"analyze", CostModel::scaled(model.cost.base_analyze_us(units), model.client_speed)});
  r.phases.push_back({"display", model.display});
  return r;
}

TimingReport run_with_agents(const JobSpec& spec, const TimingModel& model, std::span<const std::uint8_t> input) {
  const WorkUnits units = run_workload(spec, input).units;
  TimingReport r{"with_agents", {}};
  r.phases.push_back({"migrate", transfer_time(model.snapshot_bytes, model.path())});
  r.phases.push_back({"parse", CostModel::scaled(model.cost.base_parse_us(units), model.server_speed)});
  r.phases.push_back({"analyze", CostModel::scaled(model.cost.base_analyze_us(units), model.server_speed)});
  r.phases.push_back({"result_transfer", transfer_time(model.result_bytes, model.path())});
  r.phases.push_back({"display", model.display});
  return r;
}

std::string emit_report(const std::vector<TimingReport>& reports) {
  std::string out = "scenario,phase,duration_ms\n";
  for (const auto& r : reports) {
    for (const auto& p : r.phases) {
      char ms[48];
      const Micros d = p.duration;
      std::snprintf(ms, sizeof ms, "%s%" PRId64 ".%03" PRId64, d < 0 ? "-" : "", (d < 0 ? -d : d) / 1000,
                    (d < 0 ? -d : d) % 1000);
      out += r.scenario + ',' + p.phase + ',' + ms + '\n';
    }
  }
  return out;
}

namespace {

Micros parse_ms(std::string_view text, std::size_t line) {
  auto bad = [&] { return ReportError("line " + std::to_string(line) + ": bad duration '" + std::string(text) + "'"); };
  bool negative = !text.empty() && text.front() == '-';
  if (negative) text.remove_prefix(1);
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 3) throw bad();
  Micros w = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  if (ec != std::errc() || p != whole.data() + whole.size()) throw bad();
  Micros f = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    f *= 10;
    if (i < frac.size()) {
      if (frac[i] < '0' || frac[i] > '9') throw bad();
      f += frac[i] - '0';
    }
  }
  const Micros us = w * 1000 + f;
  return negative ? -us : us;
}

}  // namespace

std::vector<TimingReport> parse_report(std::string_view csv) {
  std::vector<TimingReport> out;
  std::size_t line_no = 0;
  bool header = false;
  while (!csv.empty()) {
    const auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header) {
      if (line != "scenario,phase,duration_ms") throw ReportError("line 1: unexpected header");
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
      throw ReportError("line " + std::to_string(line_no) + ": expected three fields");
    }
    const std::string scenario(line.substr(0, c1));
    const std::string phase(line.substr(c1 + 1, c2 - c1 - 1));
    const Micros d = parse_ms(line.substr(c2 + 1), line_no);
    if (out.empty() || out.back().scenario != scenario) out.push_back({scenario, {}});
    out.back().phases.push_back({phase, d});
  }
  if (!header) throw ReportError("empty report");
  return out;
}

}  // namespace offload
