#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "offload/model.hpp"

namespace offload {

/// max(cpu_util, min(queue_depth / capacity, 1), mem_util), in [0, 1].
double load_index(const LoadReport& report);

/// Over iff index >= theta_hi, Under iff index <= theta_lo, Normal otherwise.
LoadStatus classify_index(double index, const LoadThresholds& thresholds);
LoadStatus classify_load(const LoadReport& report, const LoadThresholds& thresholds);

struct FarmMember {
  NodeId node;
  LoadReport report;
  LoadStatus status = LoadStatus::Under;
};

/// A server's snapshot of its farm at one instant.
struct FarmView {
  NodeId server;
  std::vector<FarmMember> members;
  std::int64_t as_of_ms = 0;
};

FarmView make_farm_view(const NodeId& server, const std::vector<LoadReport>& reports,
                        const LoadThresholds& thresholds, std::int64_t as_of_ms);

class NoTargetAvailable : public std::runtime_error {
 public:
  NoTargetAvailable() : std::runtime_error("no placement target available") {}
};

/**
 * Placement rule.  Among members not in `exclude`, pick the Under node with
 * the smallest load index; failing that, the smallest-index Normal node.
 * Equal indices go to the lexicographically smallest NodeId.  Over nodes are
 * never chosen.  Members are re-classified against `thresholds`, so the
 * cached status in the view does not matter.
 */
std::optional<NodeId> find_target(const FarmView& farm, const std::set<NodeId>& exclude,
                                  const LoadThresholds& thresholds);

/// As find_target, throwing NoTargetAvailable instead of returning nullopt.
NodeId select_target(const FarmView& farm, const std::set<NodeId>& exclude,
                     const LoadThresholds& thresholds);

}  // namespace offload
