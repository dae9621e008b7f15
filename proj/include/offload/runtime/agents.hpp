#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "offload/load_balancer.hpp"
#include "offload/runtime/fabric.hpp"

namespace offload {

inline constexpr std::int64_t kDefaultMaxHops = 5;

/// The migrating half of a job pair.  The snapshot is authoritative.
struct MobileAgent {
  AgentSnapshot snapshot;
  std::int64_t max_hops = kDefaultMaxHops;
};

struct LastKnown {
  std::optional<NodeId> node;
  JobStatus status = status::Pending{};
  Micros at = 0;
};

/// The stationary half, living on the client.
struct ReceiverAgent {
  AgentId agent_id;
  AgentId twin_id;
  JobId job_id;
  LastKnown last_known;
  std::vector<NodeId> servers;
  std::vector<ResultPayload> inbox;

  /// Applies a location/status update.  A terminal last_known is final.
  void observe(std::optional<NodeId> node, const JobStatus& status, Micros at);
  /// Adds the payload unless one for this job is already held.
  bool accept_result(const ResultPayload& payload);
};

/// Hands out fresh agent ids for one client.
class AgentIdSource {
 public:
  explicit AgentIdSource(ClientId client) : client_(std::move(client)) {}
  std::pair<AgentId, AgentId> next(const JobId& job);

 private:
  ClientId client_;
  std::uint64_t counter_ = 0;
};

/// Mobile and receiver agents with mutually linked ids; status Pending,
/// no hops yet.
std::pair<MobileAgent, ReceiverAgent> spawn_pair(const ClientId& client, const JobSpec& spec,
                                                 const std::string& home_endpoint, AgentIdSource& ids,
                                                 std::int64_t max_hops = kDefaultMaxHops);

/// Hops kept back for getting the result home: parking at a server and
/// the final hop to the client.  Direct delivery needs none.
std::int64_t hop_reserve(DeliveryMode mode);

/// Whether one more relocation still leaves room for delivery.
bool may_relocate(const AgentSnapshot& snapshot, std::int64_t max_hops);

struct RelocationDecision {
  enum class Kind { Stay, Move };
  Kind kind = Kind::Stay;
  std::optional<NodeId> target;
  std::string reason;  // "not_over", "hop_limit", "no_target" or "over"
};

/**
 * Arrival check on `current`.  Over with a hop to spare moves the agent to
 * the farm's best node other than `current`; every other case stays.
 */
RelocationDecision decide_relocation(const AgentSnapshot& snapshot, const NodeId& current,
                                     const LoadReport& current_load, const FarmView& peers,
                                     const LoadThresholds& thresholds, std::int64_t max_hops);

}  // namespace offload
