#include "offload/runtime/client.hpp"

#include <algorithm>

#include "offload/detail/overloaded.hpp"

namespace offload {

using detail::Overloaded;

bool RegisterOutcome::any() const {
  return std::any_of(servers.begin(), servers.end(), [](const auto& s) { return s.second; });
}

ClientContainer::ClientContainer(ClientConfig config, Fabric& fabric)
    : Container(config.id.str(), fabric), config_(std::move(config)), ids_(config_.id) {
  for (const auto& s : config_.servers) fabric.learn_endpoint(s.id.str(), s.endpoint);
}

ClientContainer::ClientJob* ClientContainer::find(const JobId& job) {
  const auto it = jobs_.find(job);
  return it == jobs_.end() ? nullptr : &it->second;
}

ClientContainer::ClientJob* ClientContainer::find_by_agent(const std::string& agent) {
  for (auto& [id, j] : jobs_) {
    if (j.receiver.agent_id.str() == agent || j.receiver.twin_id.str() == agent) return &j;
  }
  return nullptr;
}

const ReceiverAgent* ClientContainer::receiver(const JobId& job) const {
  const auto it = jobs_.find(job);
  return it == jobs_.end() ? nullptr : &it->second.receiver;
}

const AgentSnapshot* ClientContainer::local_mobile(const JobId& job) const {
  const auto it = jobs_.find(job);
  if (it == jobs_.end() || it->second.stage == Stage::Dispatched) return nullptr;
  return &it->second.mobile.snapshot;
}

const AgentSnapshot* ClientContainer::last_snapshot(const JobId& job) const {
  const auto it = jobs_.find(job);
  return it == jobs_.end() ? nullptr : &it->second.mobile.snapshot;
}

JobTimes ClientContainer::times(const JobId& job) const {
  const auto it = jobs_.find(job);
  return it == jobs_.end() ? JobTimes{} : it->second.times;
}

std::vector<JobId> ClientContainer::job_ids() const {
  std::vector<JobId> out;
  for (const auto& [id, j] : jobs_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Registration

void ClientContainer::register_with_all(std::function<void(const RegisterOutcome&)> done) {
  if (done) register_waiters_.push_back(std::move(done));
  if (register_timer_ != 0) return;  // round already running
  registration_.clear();
  for (const auto& s : config_.servers) registration_[s.id] = std::nullopt;
  for (const auto& s : config_.servers) send(s.id.str(), msg::RegisterClient{config_.id, config_.endpoint});
  register_timer_ = after(config_.timing.request_timeout(), [this] {
    register_timer_ = 0;
    for (auto& [server, answer] : registration_) {
      if (!answer) answer = false;
    }
    registration_answer(NodeId(), false);
  });
  if (config_.servers.empty()) registration_answer(NodeId(), false);
}

void ClientContainer::registration_answer(const NodeId& server, bool accepted) {
  if (!server.empty()) {
    const auto it = registration_.find(server);
    if (it == registration_.end() || it->second) return;
    it->second = accepted;
  }
  const bool complete =
      std::all_of(registration_.begin(), registration_.end(), [](const auto& r) { return r.second.has_value(); });
  if (!complete) return;
  cancel(register_timer_);

  RegisterOutcome outcome;
  registered_.clear();
  for (const auto& s : config_.servers) {
    const bool ok = registration_[s.id].value_or(false);
    outcome.servers.emplace_back(s.id, ok);
    if (ok) registered_.push_back(s.id);
  }
  note("registered", {}, std::to_string(registered_.size()) + "/" + std::to_string(config_.servers.size()));
  auto waiters = std::move(register_waiters_);
  register_waiters_.clear();
  for (auto& w : waiters) w(outcome);
}

void ClientContainer::on_register_ack(const Envelope&, const msg::RegisterAck& m) {
  registration_answer(m.server, m.accepted);
}

// ---------------------------------------------------------------------------
// Dispatch

JobId ClientContainer::submit(const JobSpec& spec, std::function<void(const DispatchOutcome&)> done) {
  if (const auto v = validate_job_spec(spec); !v.empty()) throw std::invalid_argument("invalid job spec: " + v.front());
  if (jobs_.contains(spec.job_id)) throw std::invalid_argument("job " + spec.job_id.str() + " already submitted");
  auto [mobile, receiver] = spawn_pair(config_.id, spec, config_.endpoint, ids_, config_.max_hops);
  receiver.servers = registered_;

  ClientJob j;
  j.mobile = std::move(mobile);
  j.receiver = std::move(receiver);
  j.on_dispatch = std::move(done);
  j.times.submitted = now();
  const JobStatus next = advance_status(j.mobile.snapshot.status, lifecycle::Submit{});
  record_status(spec.job_id, j.mobile.snapshot.status, next);
  j.mobile.snapshot.status = next;
  j.receiver.observe(std::nullopt, next, now());
  j.candidates = registered_;
  jobs_[spec.job_id] = std::move(j);
  try_server(spec.job_id);
  return spec.job_id;
}

void ClientContainer::try_server(const JobId& job) {
  auto& j = jobs_.at(job);
  if (j.candidate >= j.candidates.size()) {
    if (j.unconfirmed) {
      // The agent may be running somewhere; location updates or a
      // reconnect will tell.
      note("dispatch_unconfirmed", job.str(), j.unconfirmed->str());
      j.dispatch_server = j.unconfirmed;
      return dispatch_done(j, DispatchOutcome{j.mobile.snapshot.status, std::nullopt, j.unconfirmed});
    }
    const JobStatus failed = advance_status(j.mobile.snapshot.status, lifecycle::Fail{"all_servers_failed"});
    record_status(job, j.mobile.snapshot.status, failed);
    j.mobile.snapshot.status = failed;
    j.receiver.observe(std::nullopt, failed, now());
    return dispatch_done(j, DispatchOutcome{failed, std::nullopt, std::nullopt});
  }
  const NodeId& server = j.candidates[j.candidate];
  j.stage = Stage::AwaitSubmitAck;
  send(server.str(), msg::SubmitJob{j.mobile.snapshot.job});
  j.timer = after(config_.timing.request_timeout(), [this, job] {
    auto& jj = jobs_.at(job);
    jj.timer = 0;
    note("dispatch_timeout", job.str(), jj.candidates[jj.candidate].str());
    next_server(job);
  });
}

void ClientContainer::next_server(const JobId& job) {
  auto& j = jobs_.at(job);
  cancel(j.timer);
  if (j.stage == Stage::Done) return;
  ++j.candidate;
  if (j.candidate < j.candidates.size()) note("resubmit", job.str(), j.candidates[j.candidate].str());
  try_server(job);
}

void ClientContainer::dispatch_done(ClientJob& j, DispatchOutcome outcome) {
  cancel(j.timer);
  j.stage = is_terminal(outcome.status) ? Stage::Done : Stage::Dispatched;
  if (j.on_dispatch) {
    auto cb = std::move(j.on_dispatch);
    j.on_dispatch = nullptr;
    cb(outcome);
  }
}

void ClientContainer::on_submit_ack(const Envelope& env, const msg::SubmitAck& m) {
  ClientJob* j = find(m.job_id);
  if (!j || j->stage != Stage::AwaitSubmitAck || j->candidates[j->candidate].str() != env.sender) return;
  cancel(j->timer);
  if (!m.accepted) return next_server(m.job_id);
  j->stage = Stage::AwaitMigrateAck;
  send(env.sender, msg::MigrateAgent{j->mobile.snapshot, std::nullopt});
  const JobId job = m.job_id;
  j->timer = after(config_.timing.request_timeout(), [this, job] {
    auto& jj = jobs_.at(job);
    jj.timer = 0;
    note("dispatch_timeout", job.str(), jj.candidates[jj.candidate].str());
    if (!jj.unconfirmed) jj.unconfirmed = jj.candidates[jj.candidate];
    next_server(job);
  });
}

void ClientContainer::on_migrate_ack(const Envelope& env, const msg::MigrateAck& m) {
  ClientJob* j = find_by_agent(m.agent_id.str());
  if (!j || j->stage != Stage::AwaitMigrateAck || j->candidates[j->candidate].str() != env.sender) return;
  cancel(j->timer);
  const JobId job = j->receiver.job_id;
  if (m.accepted) {
    j->dispatch_server = j->candidates[j->candidate];
    j->placed_node = m.node;
    return dispatch_done(*j, DispatchOutcome{status::Running{m.node.value_or(NodeId())}, m.node, j->dispatch_server});
  }
  note("migrate_refused", job.str(), env.sender + " " + m.reason);
  if (m.reason == "killed") {
    j->dispatch_server = j->candidates[j->candidate];
    j->receiver.observe(std::nullopt, status::Killed{}, now());
    return dispatch_done(*j, DispatchOutcome{status::Killed{}, std::nullopt, j->dispatch_server});
  }
  next_server(job);
}

// ---------------------------------------------------------------------------
// Kill and status

std::vector<std::string> ClientContainer::routes(const ClientJob& j, bool all_servers) const {
  std::vector<std::string> out;
  if (j.receiver.last_known.node) {
    out.push_back(j.receiver.last_known.node->str());
  } else if (j.placed_node) {
    out.push_back(j.placed_node->str());
  }
  if (j.dispatch_server) out.push_back(j.dispatch_server->str());
  if (all_servers) {
    for (const auto& s : registered_) out.push_back(s.str());
  }
  std::vector<std::string> unique;
  for (auto& r : out) {
    if (std::find(unique.begin(), unique.end(), r) == unique.end()) unique.push_back(std::move(r));
  }
  return unique;
}

void ClientContainer::kill(const JobId& job, std::function<void(const KillOutcome&)> done) {
  ClientJob* j = find(job);
  if (!j) return done({KillOutcome::Result::Unknown, false});
  if (is_terminal(j->receiver.last_known.status) || !j->receiver.inbox.empty()) {
    return done({KillOutcome::Result::AlreadyTerminal, false});
  }
  const bool was_active = j->kill.active();
  j->kill.waiters.push_back(std::move(done));
  if (was_active) return;

  if (j->stage == Stage::Local || j->stage == Stage::AwaitSubmitAck || j->stage == Stage::Done) {
    // The agent never left: kill the local copy.
    if (j->stage == Stage::AwaitSubmitAck) send(j->candidates[j->candidate].str(), msg::Kill{job}, j->receiver.twin_id.str());
    cancel(j->timer);
    const JobStatus killed = advance_status(j->mobile.snapshot.status, lifecycle::Kill{});
    record_status(job, j->mobile.snapshot.status, killed);
    j->mobile.snapshot.status = killed;
    j->receiver.observe(std::nullopt, killed, now());
    dispatch_done(*j, DispatchOutcome{killed, std::nullopt, std::nullopt});
    return kill_done(*j, {KillOutcome::Result::Killed, false});
  }
  if (j->stage == Stage::AwaitMigrateAck) {
    j->kill.targets = {j->candidates[j->candidate].str()};
  } else {
    j->kill.targets = routes(*j, false);
  }
  j->kill.index = 0;
  kill_step(job);
}

void ClientContainer::kill_step(const JobId& job) {
  auto& j = jobs_.at(job);
  cancel(j.kill.timer);
  if (j.kill.index >= j.kill.targets.size()) return kill_done(j, {KillOutcome::Result::Unknown, false});
  send(j.kill.targets[j.kill.index], msg::Kill{job}, j.receiver.twin_id.str());
  j.kill.timer = after(config_.timing.request_timeout(), [this, job] {
    auto& jj = jobs_.at(job);
    jj.kill.timer = 0;
    ++jj.kill.index;
    kill_step(job);
  });
}

void ClientContainer::kill_done(ClientJob& j, KillOutcome outcome) {
  cancel(j.kill.timer);
  auto waiters = std::move(j.kill.waiters);
  j.kill.waiters.clear();
  for (auto& w : waiters) w(outcome);
}

void ClientContainer::query_status(const JobId& job, std::function<void(const StatusOutcome&)> done) {
  ClientJob* j = find(job);
  if (!j) return done({});
  const auto& lk = j->receiver.last_known;
  if (is_terminal(lk.status)) return done({true, lk.status, lk.node});
  if (j->stage != Stage::Dispatched && j->stage != Stage::Done) {
    return done({true, j->mobile.snapshot.status, std::nullopt});
  }
  const bool was_active = j->status.active();
  j->status.waiters.push_back(std::move(done));
  if (was_active) return;
  j->status.targets = routes(*j, true);
  j->status.index = 0;
  status_step(job);
}

void ClientContainer::status_step(const JobId& job) {
  auto& j = jobs_.at(job);
  cancel(j.status.timer);
  if (j.status.index >= j.status.targets.size()) return status_done(j, {});
  send(j.status.targets[j.status.index], msg::StatusQuery{job}, j.receiver.twin_id.str());
  j.status.timer = after(config_.timing.request_timeout(), [this, job] {
    auto& jj = jobs_.at(job);
    jj.status.timer = 0;
    ++jj.status.index;
    status_step(job);
  });
}

void ClientContainer::status_done(ClientJob& j, StatusOutcome outcome) {
  cancel(j.status.timer);
  auto waiters = std::move(j.status.waiters);
  j.status.waiters.clear();
  for (auto& w : waiters) w(outcome);
}

void ClientContainer::route_failed(const JobId& job) {
  ClientJob* j = find(job);
  if (!j) return;
  if (j->kill.active()) {
    ++j->kill.index;
    kill_step(job);
  }
  if (j->status.active()) {
    ++j->status.index;
    status_step(job);
  }
}

void ClientContainer::reconnect(const JobId& job, std::function<void(const StatusOutcome&)> done) {
  register_with_all([this, job, done = std::move(done)](const RegisterOutcome&) { query_status(job, done); });
}

void ClientContainer::adopt(ReceiverAgent receiver, const AgentSnapshot& mobile, std::optional<NodeId> server,
                            std::optional<NodeId> node) {
  ClientJob j;
  j.receiver = std::move(receiver);
  j.mobile.snapshot = mobile;
  j.mobile.max_hops = config_.max_hops;
  j.stage = is_terminal(j.receiver.last_known.status) ? Stage::Done : Stage::Dispatched;
  j.dispatch_server = std::move(server);
  j.placed_node = std::move(node);
  jobs_[j.receiver.job_id] = std::move(j);
}

// ---------------------------------------------------------------------------
// Incoming

void ClientContainer::on_message(const Envelope& env) {
  std::visit(
      Overloaded{
          [&](const msg::RegisterAck& m) { on_register_ack(env, m); },
          [&](const msg::SubmitAck& m) { on_submit_ack(env, m); },
          [&](const msg::MigrateAck& m) { on_migrate_ack(env, m); },
          [&](const msg::MigrateAgent& m) { on_home(env, m); },
          [&](const msg::ResultTransfer& m) { on_result_transfer(env, m); },
          [&](const msg::LocationUpdate& m) {
            ClientJob* j = find_by_agent(env.recipient);
            if (!j) j = find_by_agent(m.agent_id.str());
            if (j) j->receiver.observe(m.node, m.status, now());
          },
          [&](const msg::StatusReport& m) {
            ClientJob* j = find(m.job_id);
            if (!j) return;
            j->receiver.observe(m.node, m.status, now());
            if (j->status.active()) {
              const auto& lk = j->receiver.last_known;
              status_done(*j, {true, lk.status, lk.node});
            }
          },
          [&](const msg::KillAck& m) {
            ClientJob* j = find(m.job_id);
            if (!j) return;
            j->receiver.observe(std::nullopt, status::Killed{}, now());
            if (j->kill.active()) kill_done(*j, {KillOutcome::Result::Killed, m.was_running});
          },
          [&](const msg::ProtocolError& m) {
            note("protocol_error", m.detail, env.sender + " " + m.code);
            ClientJob* j = is_valid_id(m.detail) ? find(JobId(m.detail)) : nullptr;
            if (!j) j = find_by_agent(m.detail);
            if (!j) return;
            if (m.code == "already_terminal" && j->kill.active()) {
              return kill_done(*j, {KillOutcome::Result::AlreadyTerminal, false});
            }
            route_failed(j->receiver.job_id);
          },
          [&](const msg::Heartbeat&) { reply(env, msg::HeartbeatAck{id()}); },
          [&](const auto&) {},
      },
      env.body);
}

void ClientContainer::on_send_failed(const std::string& to, const Envelope& env, SendFailure why) {
  const auto job = job_of(env.body);
  note("send_failed", job ? job->str() : std::string(), to + " " + std::string(to_string(why)));
  if (std::holds_alternative<msg::RegisterClient>(env.body)) {
    if (is_valid_id(to)) registration_answer(NodeId(to), false);
    return;
  }
  if (!job) return;
  ClientJob* j = find(*job);
  if (!j) return;
  if (std::holds_alternative<msg::SubmitJob>(env.body) || std::holds_alternative<msg::MigrateAgent>(env.body)) {
    if ((j->stage == Stage::AwaitSubmitAck || j->stage == Stage::AwaitMigrateAck) &&
        j->candidates[j->candidate].str() == to) {
      next_server(*job);
    }
    return;
  }
  if (std::holds_alternative<msg::Kill>(env.body) && j->kill.active()) {
    ++j->kill.index;
    return kill_step(*job);
  }
  if (std::holds_alternative<msg::StatusQuery>(env.body) && j->status.active()) {
    ++j->status.index;
    status_step(*job);
  }
}

void ClientContainer::take_result(ClientJob& j, const ResultPayload& payload) {
  if (!j.receiver.accept_result(payload)) {
    note("duplicate_result", payload.job_id.str(), {});
    return;
  }
  j.times.result = now();
  const JobId job = payload.job_id;
  after(config_.display_time, [this, job] {
    auto& jj = jobs_.at(job);
    jj.times.displayed = now();
    record_phase(job, "display", config_.display_time);
    if (result_hook_) result_hook_(jj.receiver.inbox.front());
  });
}

void ClientContainer::on_result_transfer(const Envelope& env, const msg::ResultTransfer& m) {
  reply(env, msg::ResultAck{m.payload.job_id});
  if (ClientJob* j = find(m.payload.job_id)) take_result(*j, m.payload);
}

void ClientContainer::on_home(const Envelope& env, const msg::MigrateAgent& m) {
  ClientJob* j = find(m.snapshot.job.job_id);
  if (!m.payload || !j || m.snapshot.client != config_.id || j->receiver.twin_id != m.snapshot.agent_id) {
    return reply(env, msg::MigrateAck{m.snapshot.agent_id, false, "unknown_job", std::nullopt});
  }
  AgentSnapshot snap = m.snapshot;
  snap.hop_count += 1;
  snap.visited.push_back(NodeId(config_.id.str()));
  if (!is_terminal(j->receiver.last_known.status)) {
    const JobStatus done = std::holds_alternative<status::Running>(snap.status)
                               ? advance_status(snap.status, lifecycle::Complete{})
                               : JobStatus{status::Completed{}};
    record_status(snap.job.job_id, snap.status, done);
    snap.status = done;
    j->receiver.observe(std::nullopt, done, now());
  }
  j->mobile.snapshot = std::move(snap);
  note("home", m.snapshot.job.job_id.str(), "hop=" + std::to_string(j->mobile.snapshot.hop_count));
  reply(env, msg::MigrateAck{m.snapshot.agent_id, true, "", std::nullopt});
  take_result(*j, *m.payload);
}

}  // namespace offload
