#pragma once

#include <string>
#include <vector>

#include "offload/runtime/agents.hpp"
#include "offload/runtime/cost_model.hpp"

namespace offload {

/// Failure-detection and request timing shared by all containers.
struct Timing {
  Micros heartbeat_interval = 1'000'000;
  std::int64_t heartbeat_miss_limit = 3;

  /// How long any request waits for its reply.
  Micros request_timeout() const { return heartbeat_interval * heartbeat_miss_limit; }
  /// How long a placement or relocation waits for LoadReply messages.
  Micros load_query_timeout() const { return heartbeat_interval; }
};

struct FarmEntry {
  NodeId id;
  std::string endpoint;
  std::int64_t capacity = 4;
  double speed_factor = 1.0;
};

struct ServerConfig {
  NodeId id;
  std::string listen;
  LoadThresholds thresholds;
  Timing timing;
  std::int64_t max_hops = kDefaultMaxHops;
  std::vector<FarmEntry> farm;
};

struct NodeConfig {
  NodeId id;
  std::string listen;
  std::int64_t capacity = 4;
  double speed_factor = 1.0;
  NodeId server;
  std::string server_endpoint;
  std::vector<FarmEntry> peers;  // whole farm, self included
  LoadThresholds thresholds;
  Timing timing;
  std::int64_t max_hops = kDefaultMaxHops;
  CostModel cost;
  /// Off in live mode: results are released as soon as they are computed.
  bool charge_compute_time = true;
  /// Window for the busy-time CPU estimate.
  Micros load_window = 1'000'000;
};

struct ServerRef {
  NodeId id;
  std::string endpoint;
};

struct ClientConfig {
  ClientId id;
  std::string endpoint;  // where results can reach this client
  std::vector<ServerRef> servers;  // registration order
  Timing timing;
  std::int64_t max_hops = kDefaultMaxHops;
  Micros display_time = 50'000;
  /// Kill/status retry spacing when the agent is between containers.
  Micros retry_delay = 20'000;
};

/// Derives one node's config from its server's farm list.
NodeConfig node_config_from(const ServerConfig& server, const NodeId& node);

}  // namespace offload
