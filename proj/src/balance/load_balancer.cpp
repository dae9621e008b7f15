#include "offload/load_balancer.hpp"

#include <algorithm>
#include <tuple>

namespace offload {

double load_index(const LoadReport& report) {
  const double queue =
      std::min(1.0, static_cast<double>(report.queue_depth) / static_cast<double>(report.capacity));
  return std::max({report.cpu_util, queue, report.mem_util});
}

LoadStatus classify_index(double index, const LoadThresholds& thresholds) {
  if (index >= thresholds.theta_hi) return LoadStatus::Over;
  if (index <= thresholds.theta_lo) return LoadStatus::Under;
  return LoadStatus::Normal;
}

LoadStatus classify_load(const LoadReport& report, const LoadThresholds& thresholds) {
  return classify_index(load_index(report), thresholds);
}

FarmView make_farm_view(const NodeId& server, const std::vector<LoadReport>& reports,
                        const LoadThresholds& thresholds, std::int64_t as_of_ms) {
  FarmView view{server, {}, as_of_ms};
  view.members.reserve(reports.size());
  for (const auto& r : reports) view.members.push_back({r.node, r, classify_load(r, thresholds)});
  return view;
}

std::optional<NodeId> find_target(const FarmView& farm, const std::set<NodeId>& exclude,
                                  const LoadThresholds& thresholds) {
  // Rank: Under before Normal, then index, then id.
  std::optional<std::tuple<int, double, NodeId>> best;
  for (const auto& m : farm.members) {
    if (exclude.contains(m.node)) continue;
    const double index = load_index(m.report);
    const LoadStatus status = classify_index(index, thresholds);
    if (status == LoadStatus::Over) continue;
    auto key = std::make_tuple(status == LoadStatus::Under ? 0 : 1, index, m.node);
    if (!best || key < *best) best = std::move(key);
  }
  if (!best) return std::nullopt;
  return std::get<2>(*best);
}

NodeId select_target(const FarmView& farm, const std::set<NodeId>& exclude,
                     const LoadThresholds& thresholds) {
  auto target = find_target(farm, exclude, thresholds);
  if (!target) throw NoTargetAvailable();
  return *target;
}

}  // namespace offload
