#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>

#include "offload/runtime/config.hpp"
#include "offload/runtime/container.hpp"
#include "offload/runtime/input_store.hpp"

namespace offload {

/// A scripted load sample; holds from its start time until the next one.
/// An empty sample hands control back to the measured load.
struct ScriptedLoad {
  double cpu_util = 0.0;
  std::int64_t queue_depth = 0;
  double mem_util = 0.0;
};

/// Resource node: hosts mobile agents, runs their workloads up to
/// `capacity` at a time, and sends results home.
class NodeContainer : public Container {
 public:
  NodeContainer(NodeConfig config, std::shared_ptr<const InputStore> inputs, Fabric& fabric);

  /// Starts heartbeats towards the server.
  void start();

  void on_message(const Envelope& env) override;
  void on_send_failed(const std::string& to, const Envelope& env, SendFailure why) override;

  LoadReport sample_load() const;
  void script_load(Micros at, std::optional<ScriptedLoad> load);

  const NodeConfig& config() const { return config_; }
  std::size_t hosted_count() const { return hosted_.size(); }
  std::int64_t running() const { return running_; }
  /// Final status of jobs that ended here (parked jobs keep their last status).
  std::optional<JobStatus> finished_status(const JobId& job) const;

 private:
  enum class Phase { Checking, Queued, Executing, Relocating, Delivering };
  enum class Attempt { None, Direct, Home, Park };

  struct Hosted {
    AgentSnapshot snap;
    Phase phase = Phase::Queued;
    TimerId timer = 0;
    std::set<NodeId> awaiting;
    std::vector<LoadReport> replies;
    NodeId target;
    std::vector<Envelope> deferred;
    std::optional<ResultPayload> result;
    Attempt attempt = Attempt::None;
  };
  struct Finished {
    JobStatus status;
    bool parked = false;
  };

  Hosted* by_job(const JobId& job);

  void arrive(const Envelope& env, const msg::MigrateAgent& m);
  void notify(const Hosted& h);
  void check_load(const AgentId& agent);
  void finish_check(const AgentId& agent);
  void relocation_failed(const AgentId& agent);
  void enqueue(const AgentId& agent);
  void pump();
  void start_execution(const AgentId& agent);
  void deliver(const AgentId& agent);
  void delivery_failed(const AgentId& agent);
  void park(const AgentId& agent);
  void finish(const AgentId& agent, JobStatus status, bool notify_twin, bool parked = false);
  void fail(const AgentId& agent, const std::string& reason);
  void on_migrate_ack(const Envelope& env, const msg::MigrateAck& m);
  void on_kill(const Envelope& env, const msg::Kill& m);
  void on_status_query(const Envelope& env, const msg::StatusQuery& m);
  void on_load_reply(const msg::LoadReply& m);
  void on_result_ack(const msg::ResultAck& m);
  void set_running(std::int64_t delta);
  bool server_alive() const;
  void heartbeat();

  NodeConfig config_;
  std::shared_ptr<const InputStore> inputs_;
  std::map<AgentId, Hosted> hosted_;
  std::map<JobId, NodeId> moved_;
  std::map<JobId, Finished> finished_;
  std::deque<AgentId> queue_;
  std::int64_t running_ = 0;
  std::vector<std::pair<Micros, std::int64_t>> busy_;  // (time, running) change points
  std::map<Micros, std::optional<ScriptedLoad>> script_;
  Micros last_server_ack_ = 0;
};

}  // namespace offload
