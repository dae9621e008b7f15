#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "offload/runtime/config.hpp"
#include "offload/runtime/container.hpp"

namespace offload {

struct ClientEntry {
  std::string endpoint;
  Micros registered_at = 0;
};

struct NodeEntry {
  FarmEntry farm;
  std::optional<LoadReport> last_report;
  Micros last_heartbeat = 0;
  bool lost = false;
};

struct JobRecord {
  JobStatus status = status::Submitted{};
  ClientId client;
  AgentId agent;
  AgentId twin;
  std::optional<NodeId> node;
  bool parked = false;
};

/// Registration hub, placement authority and job registry for one farm.
class ServerContainer : public Container {
 public:
  ServerContainer(ServerConfig config, Fabric& fabric);

  /// Starts the heartbeat watchdog.
  void start();

  void on_message(const Envelope& env) override;
  void on_send_failed(const std::string& to, const Envelope& env, SendFailure why) override;

  const ServerConfig& config() const { return config_; }
  const std::map<ClientId, ClientEntry>& clients() const { return clients_; }
  const std::map<NodeId, NodeEntry>& nodes() const { return nodes_; }
  const std::map<JobId, JobRecord>& jobs() const { return jobs_; }
  std::size_t parked_count() const { return parked_.size(); }

 private:
  struct Placement {
    AgentSnapshot snapshot;
    std::string client_container;
    std::set<NodeId> awaiting;
    std::vector<LoadReport> replies;
    TimerId timer = 0;
    bool forwarding = false;
    NodeId target;
    std::vector<Envelope> deferred;
  };
  struct Parked {
    AgentSnapshot snapshot;
    ResultPayload payload;
    bool in_flight = false;
    TimerId timer = 0;
  };

  void route(const Envelope& env);
  void on_register(const Envelope& env, const msg::RegisterClient& m);
  void on_submit(const Envelope& env, const msg::SubmitJob& m);
  void on_migrate(const Envelope& env, const msg::MigrateAgent& m);
  void on_migrate_ack(const Envelope& env, const msg::MigrateAck& m);
  void on_load_reply(const msg::LoadReply& m);
  void on_status_query(const Envelope& env, const msg::StatusQuery& m);
  void on_kill(const Envelope& env, const msg::Kill& m);
  void on_location(const msg::LocationUpdate& m);
  void on_heartbeat(const Envelope& env, const msg::Heartbeat& m);

  void start_placement(const std::string& client_container, AgentSnapshot snapshot);
  void finish_query(const AgentId& agent);
  void placement_failed(const AgentId& agent, const std::string& reason);
  void refuse(const std::string& to, const AgentId& agent, const std::string& reason);

  void park(const Envelope& env, const msg::MigrateAgent& m);
  void bring_back(const JobId& job);

  void watchdog();
  void node_lost(const NodeId& node);
  void set_status(JobRecord& rec, const JobId& job, JobStatus next, bool record);

  ServerConfig config_;
  std::map<ClientId, ClientEntry> clients_;
  std::map<NodeId, NodeEntry> nodes_;
  std::map<JobId, JobRecord> jobs_;
  std::map<AgentId, JobId> agents_;
  std::map<AgentId, Placement> placements_;
  std::map<JobId, Parked> parked_;
};

}  // namespace offload
