#pragma once

#include <functional>
#include <map>
#include <optional>

#include "offload/runtime/config.hpp"
#include "offload/runtime/container.hpp"

namespace offload {

struct RegisterOutcome {
  std::vector<std::pair<NodeId, bool>> servers;  // configured order
  bool any() const;
};

struct DispatchOutcome {
  /// Running(node), Failed(...), Killed, or Submitted when the agent was
  /// handed over but no acknowledgement came back.
  JobStatus status;
  std::optional<NodeId> node;
  std::optional<NodeId> server;
};

struct StatusOutcome {
  bool known = false;  // false: StatusUnknown
  JobStatus status = status::Pending{};
  std::optional<NodeId> node;
};

struct KillOutcome {
  enum class Result { Killed, AlreadyTerminal, Unknown };
  Result result = Result::Unknown;
  bool was_running = false;
};

struct JobTimes {
  Micros submitted = -1;
  Micros result = -1;     // payload arrived (first copy)
  Micros displayed = -1;  // display finished
};

/// Thin client: holds receiver agents and the local copies of mobile agents
/// until they are dispatched.
class ClientContainer : public Container {
 public:
  ClientContainer(ClientConfig config, Fabric& fabric);

  void register_with_all(std::function<void(const RegisterOutcome&)> done = {});
  /// spawn_pair + dispatch, resubmitting across registered servers in order.
  JobId submit(const JobSpec& spec, std::function<void(const DispatchOutcome&)> done = {});
  void query_status(const JobId& job, std::function<void(const StatusOutcome&)> done);
  void kill(const JobId& job, std::function<void(const KillOutcome&)> done);
  /// Re-registers everywhere, then resolves the job's location.
  void reconnect(const JobId& job, std::function<void(const StatusOutcome&)> done);

  /// Restores a receiver for a job dispatched by an earlier process.
  void adopt(ReceiverAgent receiver, const AgentSnapshot& mobile, std::optional<NodeId> server,
             std::optional<NodeId> node);

  void on_result(std::function<void(const ResultPayload&)> hook) { result_hook_ = std::move(hook); }

  void on_message(const Envelope& env) override;
  void on_send_failed(const std::string& to, const Envelope& env, SendFailure why) override;

  const ClientConfig& config() const { return config_; }
  const std::vector<NodeId>& registered() const { return registered_; }
  const ReceiverAgent* receiver(const JobId& job) const;
  const AgentSnapshot* local_mobile(const JobId& job) const;
  /// The snapshot as it last left this client, dispatched or not.
  const AgentSnapshot* last_snapshot(const JobId& job) const;
  JobTimes times(const JobId& job) const;
  std::vector<JobId> job_ids() const;

 private:
  enum class Stage { Local, AwaitSubmitAck, AwaitMigrateAck, Dispatched, Done };

  template <typename Outcome>
  struct Pending {
    std::vector<std::function<void(const Outcome&)>> waiters;
    std::vector<std::string> targets;
    std::size_t index = 0;
    TimerId timer = 0;
    bool active() const { return !waiters.empty(); }
  };

  struct ClientJob {
    ReceiverAgent receiver;
    MobileAgent mobile;
    Stage stage = Stage::Local;
    std::vector<NodeId> candidates;
    std::size_t candidate = 0;
    std::optional<NodeId> dispatch_server;
    std::optional<NodeId> placed_node;
    std::optional<NodeId> unconfirmed;  // took the agent, never acknowledged
    TimerId timer = 0;
    std::function<void(const DispatchOutcome&)> on_dispatch;
    Pending<KillOutcome> kill;
    Pending<StatusOutcome> status;
    JobTimes times;
  };

  ClientJob* find(const JobId& job);
  ClientJob* find_by_agent(const std::string& agent);

  void try_server(const JobId& job);
  void next_server(const JobId& job);
  void dispatch_done(ClientJob& j, DispatchOutcome outcome);

  void kill_step(const JobId& job);
  void kill_done(ClientJob& j, KillOutcome outcome);
  void status_step(const JobId& job);
  void status_done(ClientJob& j, StatusOutcome outcome);
  std::vector<std::string> routes(const ClientJob& j, bool all_servers) const;
  void route_failed(const JobId& job);

  void on_register_ack(const Envelope& env, const msg::RegisterAck& m);
  void on_submit_ack(const Envelope& env, const msg::SubmitAck& m);
  void on_migrate_ack(const Envelope& env, const msg::MigrateAck& m);
  void on_home(const Envelope& env, const msg::MigrateAgent& m);
  void on_result_transfer(const Envelope& env, const msg::ResultTransfer& m);
  void take_result(ClientJob& j, const ResultPayload& payload);
  void registration_answer(const NodeId& server, bool accepted);

  ClientConfig config_;
  AgentIdSource ids_;
  std::map<JobId, ClientJob> jobs_;
  std::vector<NodeId> registered_;
  std::map<NodeId, std::optional<bool>> registration_;
  std::vector<std::function<void(const RegisterOutcome&)>> register_waiters_;
  TimerId register_timer_ = 0;
  std::function<void(const ResultPayload&)> result_hook_;
};

}  // namespace offload
