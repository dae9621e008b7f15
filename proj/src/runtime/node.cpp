#include "offload/runtime/node.hpp"

#include <algorithm>

#include "offload/detail/overloaded.hpp"
#include "offload/workloads/run.hpp"

namespace offload {

using detail::Overloaded;

NodeContainer::NodeContainer(NodeConfig config, std::shared_ptr<const InputStore> inputs, Fabric& fabric)
    : Container(config.id.str(), fabric), config_(std::move(config)), inputs_(std::move(inputs)) {
  fabric.learn_endpoint(config_.server.str(), config_.server_endpoint);
  for (const auto& p : config_.peers) fabric.learn_endpoint(p.id.str(), p.endpoint);
}

void NodeContainer::start() {
  last_server_ack_ = now();
  heartbeat();
}

void NodeContainer::heartbeat() {
  send(config_.server.str(), msg::Heartbeat{id()});
  after(config_.timing.heartbeat_interval, [this] { heartbeat(); });
}

bool NodeContainer::server_alive() const {
  return now() - last_server_ack_ <= config_.timing.request_timeout();
}

std::optional<JobStatus> NodeContainer::finished_status(const JobId& job) const {
  const auto it = finished_.find(job);
  if (it == finished_.end()) return std::nullopt;
  return it->second.status;
}

NodeContainer::Hosted* NodeContainer::by_job(const JobId& job) {
  for (auto& [agent, h] : hosted_) {
    if (h.snap.job.job_id == job) return &h;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Load

void NodeContainer::script_load(Micros at, std::optional<ScriptedLoad> load) { script_[at] = load; }

void NodeContainer::set_running(std::int64_t delta) {
  running_ += delta;
  busy_.emplace_back(now(), running_);
  // Keep one change point older than the window.
  const Micros horizon = now() - config_.load_window;
  auto keep = std::find_if(busy_.begin(), busy_.end(), [&](const auto& p) { return p.first > horizon; });
  if (keep != busy_.begin()) busy_.erase(busy_.begin(), std::prev(keep));
}

LoadReport NodeContainer::sample_load() const {
  LoadReport r{config_.id, 0.0, 0, config_.capacity, 0.0, now() / 1000};
  if (auto it = script_.upper_bound(now()); it != script_.begin() && std::prev(it)->second) {
    const auto& s = *std::prev(it)->second;
    r.cpu_util = s.cpu_util;
    r.queue_depth = s.queue_depth;
    r.mem_util = s.mem_util;
    return r;
  }
  for (const auto& [agent, h] : hosted_) {
    if (h.phase == Phase::Checking || h.phase == Phase::Queued || h.phase == Phase::Executing) ++r.queue_depth;
  }
  // Busy fraction of the last window: integral of min(running, capacity) / capacity.
  const Micros end = now();
  const Micros begin = end - config_.load_window;
  double busy = 0.0;
  for (std::size_t i = 0; i < busy_.size(); ++i) {
    const Micros from = std::max(busy_[i].first, begin);
    const Micros to = i + 1 < busy_.size() ? busy_[i + 1].first : end;
    if (to <= from) continue;
    const double level = static_cast<double>(std::min(busy_[i].second, config_.capacity)) /
                         static_cast<double>(config_.capacity);
    busy += level * static_cast<double>(to - from);
  }
  r.cpu_util = std::clamp(busy / static_cast<double>(config_.load_window), 0.0, 1.0);
  return r;
}

// ---------------------------------------------------------------------------

void NodeContainer::on_message(const Envelope& env) {
  if (const auto* k = std::get_if<msg::Kill>(&env.body)) return on_kill(env, *k);
  if (const auto* q = std::get_if<msg::StatusQuery>(&env.body)) return on_status_query(env, *q);

  std::visit(Overloaded{
                 [&](const msg::MigrateAgent& m) {
                   if (m.payload) {
                     reply(env, msg::MigrateAck{m.snapshot.agent_id, false, "unexpected_payload", std::nullopt});
                   } else {
                     arrive(env, m);
                   }
                 },
                 [&](const msg::MigrateAck& m) { on_migrate_ack(env, m); },
                 [&](const msg::LoadQuery&) { reply(env, msg::LoadReply{sample_load()}); },
                 [&](const msg::LoadReply& m) { on_load_reply(m); },
                 [&](const msg::ResultAck& m) { on_result_ack(m); },
                 [&](const msg::HeartbeatAck&) { last_server_ack_ = now(); },
                 [&](const msg::Heartbeat&) { reply(env, msg::HeartbeatAck{id()}); },
                 [&](const msg::ProtocolError& m) {
                   note("protocol_error", m.detail, env.sender + " " + m.code);
                   if (m.code != "unreachable" && m.code != "unknown_recipient") return;
                   Hosted* h = is_valid_id(m.detail) ? by_job(JobId(m.detail)) : nullptr;
                   if (!h) return;
                   const AgentId agent = h->snap.agent_id;
                   if (h->phase == Phase::Delivering && h->attempt != Attempt::Park) delivery_failed(agent);
                 },
                 [&](const auto&) {
                   reply(env, msg::ProtocolError{"unexpected_message", std::string(env.kind())});
                 },
             },
             env.body);
}

void NodeContainer::on_send_failed(const std::string& to, const Envelope& env, SendFailure why) {
  const auto job = job_of(env.body);
  note("send_failed", job ? job->str() : std::string(), to + " " + std::string(to_string(why)));
  if (env.sender != id()) {
    send(env.sender, msg::ProtocolError{"unreachable", job ? job->str() : env.recipient});
    return;
  }
  if (std::holds_alternative<msg::ResultTransfer>(env.body) || std::holds_alternative<msg::MigrateAgent>(env.body)) {
    Hosted* h = job ? by_job(*job) : nullptr;
    if (!h) return;
    const AgentId agent = h->snap.agent_id;
    if (h->phase == Phase::Relocating) return relocation_failed(agent);
    if (h->phase == Phase::Delivering) return delivery_failed(agent);
    return;
  }
  if (const auto* q = std::get_if<msg::LoadQuery>(&env.body)) {
    std::vector<AgentId> done;
    for (auto& [agent, h] : hosted_) {
      if (h.phase == Phase::Checking && h.awaiting.erase(q->node) && h.awaiting.empty()) done.push_back(agent);
    }
    for (const auto& a : done) finish_check(a);
  }
}

// ---------------------------------------------------------------------------
// Arrival and relocation

void NodeContainer::arrive(const Envelope& env, const msg::MigrateAgent& m) {
  AgentSnapshot snap = m.snapshot;
  const JobId job = snap.job.job_id;
  auto refuse = [&](const char* reason) {
    note("migrate_refused", job.str(), reason);
    reply(env, msg::MigrateAck{snap.agent_id, false, reason, std::nullopt});
  };
  if (hosted_.contains(snap.agent_id) || by_job(job)) return refuse("duplicate_agent");
  if (!validate_snapshot(snap).empty()) return refuse("invalid_snapshot");
  if (!std::holds_alternative<status::Migrating>(snap.status) &&
      !std::holds_alternative<status::Relocating>(snap.status)) {
    return refuse("invalid_snapshot");
  }

  const JobStatus next = advance_status(snap.status, lifecycle::MigrateDone{config_.id});
  record_status(job, snap.status, next);
  snap.status = next;
  snap.hop_count += 1;
  snap.visited.push_back(config_.id);
  note("arrived", job.str(), "hop=" + std::to_string(snap.hop_count));
  moved_.erase(job);
  finished_.erase(job);
  if (!snap.home_endpoint.empty()) fabric().learn_endpoint(snap.client.str(), snap.home_endpoint);

  const AgentId agent = snap.agent_id;
  auto& h = hosted_[agent];
  h.snap = std::move(snap);
  reply(env, msg::MigrateAck{agent, true, "", config_.id});
  notify(h);
  check_load(agent);
}

void NodeContainer::notify(const Hosted& h) {
  const msg::LocationUpdate update{h.snap.agent_id, config_.id, h.snap.status};
  send(h.snap.client.str(), update, h.snap.twin_id.str());
  send(config_.server.str(), update);
}

void NodeContainer::check_load(const AgentId& agent) {
  auto& h = hosted_.at(agent);
  const LoadReport load = sample_load();
  if (classify_load(load, config_.thresholds) != LoadStatus::Over) return enqueue(agent);
  if (!may_relocate(h.snap, config_.max_hops)) {
    note("stay", h.snap.job.job_id.str(), "hop_limit");
    return enqueue(agent);
  }
  h.phase = Phase::Checking;
  h.replies.clear();
  h.awaiting.clear();
  for (const auto& p : config_.peers) {
    if (p.id != config_.id) h.awaiting.insert(p.id);
  }
  const auto targets = h.awaiting;
  for (const auto& p : targets) send(p.str(), msg::LoadQuery{p});
  if (targets.empty()) return finish_check(agent);
  h.timer = after(config_.timing.load_query_timeout(), [this, agent] {
    if (auto it = hosted_.find(agent); it != hosted_.end() && it->second.phase == Phase::Checking) {
      it->second.timer = 0;
      finish_check(agent);
    }
  });
}

void NodeContainer::on_load_reply(const msg::LoadReply& m) {
  std::vector<AgentId> done;
  for (auto& [agent, h] : hosted_) {
    if (h.phase == Phase::Checking && h.awaiting.erase(m.report.node)) {
      h.replies.push_back(m.report);
      if (h.awaiting.empty()) done.push_back(agent);
    }
  }
  for (const auto& a : done) finish_check(a);
}

void NodeContainer::finish_check(const AgentId& agent) {
  auto& h = hosted_.at(agent);
  cancel(h.timer);
  const FarmView view = make_farm_view(config_.server, h.replies, config_.thresholds, now() / 1000);
  const auto decision = decide_relocation(h.snap, config_.id, sample_load(), view, config_.thresholds, config_.max_hops);
  if (decision.kind == RelocationDecision::Kind::Stay) {
    note("stay", h.snap.job.job_id.str(), decision.reason);
    return enqueue(agent);
  }
  const JobId job = h.snap.job.job_id;
  const JobStatus next = advance_status(h.snap.status, lifecycle::Relocate{config_.id, *decision.target});
  record_status(job, h.snap.status, next);
  h.snap.status = next;
  h.phase = Phase::Relocating;
  h.target = *decision.target;
  notify(h);
  send(h.target.str(), msg::MigrateAgent{h.snap, std::nullopt});
  h.timer = after(config_.timing.request_timeout(), [this, agent] {
    if (auto it = hosted_.find(agent); it != hosted_.end() && it->second.phase == Phase::Relocating) {
      it->second.timer = 0;
      relocation_failed(agent);
    }
  });
}

void NodeContainer::relocation_failed(const AgentId& agent) {
  auto it = hosted_.find(agent);
  if (it == hosted_.end() || it->second.phase != Phase::Relocating) return;
  auto& h = it->second;
  cancel(h.timer);
  const JobId job = h.snap.job.job_id;
  note("relocation_failed", job.str(), h.target.str());
  const JobStatus next = advance_status(h.snap.status, lifecycle::MigrateDone{config_.id});
  record_status(job, h.snap.status, next);
  h.snap.status = next;
  notify(h);
  auto deferred = std::move(h.deferred);
  h.deferred.clear();
  enqueue(agent);
  for (const auto& env : deferred) on_message(env);
}

void NodeContainer::on_migrate_ack(const Envelope& env, const msg::MigrateAck& m) {
  auto it = hosted_.find(m.agent_id);
  if (it == hosted_.end()) return;
  auto& h = it->second;
  if (h.phase == Phase::Relocating && env.sender == h.target.str()) {
    if (!m.accepted) return relocation_failed(m.agent_id);
    cancel(h.timer);
    const JobId job = h.snap.job.job_id;
    const NodeId target = h.target;
    auto deferred = std::move(h.deferred);
    hosted_.erase(it);
    moved_[job] = target;
    for (const auto& d : deferred) forward(target.str(), d);
    return;
  }
  if (h.phase != Phase::Delivering) return;
  if (h.attempt == Attempt::Home && env.sender == h.snap.client.str()) {
    if (!m.accepted) return delivery_failed(m.agent_id);
    // The client records Completed on handover.
    cancel(h.timer);
    send(config_.server.str(), msg::LocationUpdate{h.snap.agent_id, config_.id, status::Completed{}});
    finished_[h.snap.job.job_id] = Finished{status::Completed{}, false};
    hosted_.erase(it);
    return;
  }
  if (h.attempt == Attempt::Park && env.sender == config_.server.str()) {
    if (!m.accepted) return fail(m.agent_id, "client_unreachable");
    cancel(h.timer);
    finished_[h.snap.job.job_id] = Finished{h.snap.status, true};
    hosted_.erase(it);
  }
}

// ---------------------------------------------------------------------------
// Execution

void NodeContainer::enqueue(const AgentId& agent) {
  hosted_.at(agent).phase = Phase::Queued;
  queue_.push_back(agent);
  pump();
}

void NodeContainer::pump() {
  while (running_ < config_.capacity && !queue_.empty()) {
    const AgentId next = queue_.front();
    queue_.pop_front();
    start_execution(next);
  }
}

void NodeContainer::start_execution(const AgentId& agent) {
  auto& h = hosted_.at(agent);
  h.phase = Phase::Executing;
  set_running(+1);
  const JobId job = h.snap.job.job_id;

  const auto input = inputs_->get(h.snap.job.input_ref);
  if (!input) return fail(agent, "input_missing");
  WorkloadOutput out;
  try {
    out = run_workload(h.snap.job, *input);
  } catch (const WorkloadError& e) {
    note("workload_error", job.str(), e.what());
    return fail(agent, "workload_error");
  }
  h.result = ResultPayload{job, config_.id, std::move(out.data)};

  const bool charge = config_.charge_compute_time;
  const Micros parse_us = charge ? CostModel::scaled(config_.cost.base_parse_us(out.units), config_.speed_factor) : 0;
  const Micros analyze_us =
      charge ? CostModel::scaled(config_.cost.base_analyze_us(out.units), config_.speed_factor) : 0;

  h.timer = after(parse_us, [this, agent, job, parse_us, analyze_us] {
    auto& hh = hosted_.at(agent);
    record_phase(job, "parse", parse_us);
    hh.timer = after(analyze_us, [this, agent, job, analyze_us] {
      auto& h3 = hosted_.at(agent);
      h3.timer = 0;
      record_phase(job, "analyze", analyze_us);
      set_running(-1);
      deliver(agent);
      pump();
    });
  });
}

void NodeContainer::deliver(const AgentId& agent) {
  auto& h = hosted_.at(agent);
  h.phase = Phase::Delivering;
  const auto mode = h.snap.job.delivery;
  if (mode == DeliveryMode::BringBack) {
    h.attempt = Attempt::Home;
    send(h.snap.client.str(), msg::MigrateAgent{h.snap, h.result});
  } else {
    h.attempt = Attempt::Direct;
    send(h.snap.client.str(), msg::ResultTransfer{*h.result}, h.snap.twin_id.str());
  }
  h.timer = after(config_.timing.request_timeout(), [this, agent] {
    if (auto it = hosted_.find(agent); it != hosted_.end()) {
      it->second.timer = 0;
      delivery_failed(agent);
    }
  });
}

void NodeContainer::delivery_failed(const AgentId& agent) {
  auto it = hosted_.find(agent);
  if (it == hosted_.end() || it->second.phase != Phase::Delivering) return;
  auto& h = it->second;
  cancel(h.timer);
  note("delivery_failed", h.snap.job.job_id.str(), h.attempt == Attempt::Park ? "park" : "client");
  if (h.attempt == Attempt::Park || (h.attempt == Attempt::Direct && h.snap.job.delivery == DeliveryMode::Direct)) {
    return fail(agent, "client_unreachable");
  }
  park(agent);
}

void NodeContainer::park(const AgentId& agent) {
  auto& h = hosted_.at(agent);
  if (!server_alive()) return fail(agent, "client_unreachable");
  h.attempt = Attempt::Park;
  send(config_.server.str(), msg::MigrateAgent{h.snap, h.result});
  h.timer = after(config_.timing.request_timeout(), [this, agent] {
    if (auto it = hosted_.find(agent); it != hosted_.end()) {
      it->second.timer = 0;
      delivery_failed(agent);
    }
  });
}

void NodeContainer::on_result_ack(const msg::ResultAck& m) {
  Hosted* h = by_job(m.job_id);
  if (!h || h->phase != Phase::Delivering || h->attempt != Attempt::Direct) return;
  cancel(h->timer);
  finish(h->snap.agent_id, status::Completed{}, true);
}

void NodeContainer::finish(const AgentId& agent, JobStatus status, bool notify_twin, bool parked) {
  auto it = hosted_.find(agent);
  auto& h = it->second;
  cancel(h.timer);
  const JobId job = h.snap.job.job_id;
  if (h.phase == Phase::Executing) set_running(-1);
  if (h.phase == Phase::Queued) queue_.erase(std::remove(queue_.begin(), queue_.end(), agent), queue_.end());
  record_status(job, h.snap.status, status);
  h.snap.status = status;
  const msg::LocationUpdate update{agent, config_.id, status};
  if (notify_twin) send(h.snap.client.str(), update, h.snap.twin_id.str());
  send(config_.server.str(), update);
  finished_[job] = Finished{std::move(status), parked};
  hosted_.erase(it);
  pump();
}

void NodeContainer::fail(const AgentId& agent, const std::string& reason) {
  auto& h = hosted_.at(agent);
  JobStatus next = std::holds_alternative<status::Running>(h.snap.status)
                       ? advance_status(h.snap.status, lifecycle::Fail{reason})
                       : JobStatus{status::Failed{reason}};
  finish(agent, std::move(next), true);
}

// ---------------------------------------------------------------------------
// Job-scoped requests

void NodeContainer::on_kill(const Envelope& env, const msg::Kill& m) {
  if (Hosted* h = by_job(m.job_id)) {
    switch (h->phase) {
      case Phase::Relocating: h->deferred.push_back(env); return;
      case Phase::Delivering: return reply(env, msg::ProtocolError{"already_terminal", m.job_id.str()});
      case Phase::Checking:
      case Phase::Queued:
      case Phase::Executing: {
        const bool was_running = h->phase == Phase::Executing;
        const AgentId agent = h->snap.agent_id;
        reply(env, msg::KillAck{m.job_id, was_running});
        finish(agent, advance_status(h->snap.status, lifecycle::Kill{}), true);
        return;
      }
    }
  }
  if (finished_.contains(m.job_id)) return reply(env, msg::ProtocolError{"already_terminal", m.job_id.str()});
  if (auto it = moved_.find(m.job_id); it != moved_.end()) return forward(it->second.str(), env);
  reply(env, msg::ProtocolError{"unknown_job", m.job_id.str()});
}

void NodeContainer::on_status_query(const Envelope& env, const msg::StatusQuery& m) {
  if (Hosted* h = by_job(m.job_id)) return reply(env, msg::StatusReport{m.job_id, h->snap.status, config_.id});
  if (auto it = finished_.find(m.job_id); it != finished_.end()) {
    return reply(env, msg::StatusReport{m.job_id, it->second.status, config_.id});
  }
  if (auto it = moved_.find(m.job_id); it != moved_.end()) return forward(it->second.str(), env);
  reply(env, msg::ProtocolError{"unknown_job", m.job_id.str()});
}

}  // namespace offload
