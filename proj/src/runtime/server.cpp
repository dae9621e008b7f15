#include "offload/runtime/server.hpp"

#include "offload/detail/overloaded.hpp"

namespace offload {

using detail::Overloaded;

NodeConfig node_config_from(const ServerConfig& server, const NodeId& node) {
  NodeConfig cfg;
  cfg.id = node;
  bool found = false;
  for (const auto& f : server.farm) {
    if (f.id == node) {
      cfg.listen = f.endpoint;
      cfg.capacity = f.capacity;
      cfg.speed_factor = f.speed_factor;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("node '" + node.str() + "' is not in the farm of " + server.id.str());
  cfg.server = server.id;
  cfg.server_endpoint = server.listen;
  cfg.peers = server.farm;
  cfg.thresholds = server.thresholds;
  cfg.timing = server.timing;
  cfg.max_hops = server.max_hops;
  return cfg;
}

ServerContainer::ServerContainer(ServerConfig config, Fabric& fabric)
    : Container(config.id.str(), fabric), config_(std::move(config)) {
  for (const auto& f : config_.farm) {
    nodes_[f.id] = NodeEntry{f, std::nullopt, 0, false};
    fabric.learn_endpoint(f.id.str(), f.endpoint);
  }
}

void ServerContainer::start() {
  for (auto& [id, n] : nodes_) n.last_heartbeat = now();
  after(config_.timing.heartbeat_interval, [this] { watchdog(); });
}

void ServerContainer::set_status(JobRecord& rec, const JobId& job, JobStatus next, bool record) {
  if (record) record_status(job, rec.status, next);
  rec.status = std::move(next);
}

// ---------------------------------------------------------------------------

void ServerContainer::on_message(const Envelope& env) {
  // Job-scoped queries are answered or routed whatever they were addressed to.
  if (const auto* q = std::get_if<msg::StatusQuery>(&env.body)) return on_status_query(env, *q);
  if (const auto* k = std::get_if<msg::Kill>(&env.body)) return on_kill(env, *k);
  // A client may not know this server's id before registering.
  if (const auto* r = std::get_if<msg::RegisterClient>(&env.body)) return on_register(env, *r);
  if (env.recipient != id()) return route(env);

  std::visit(Overloaded{
                 [&](const msg::RegisterClient& m) { on_register(env, m); },
                 [&](const msg::SubmitJob& m) { on_submit(env, m); },
                 [&](const msg::MigrateAgent& m) { on_migrate(env, m); },
                 [&](const msg::MigrateAck& m) { on_migrate_ack(env, m); },
                 [&](const msg::LoadReply& m) { on_load_reply(m); },
                 [&](const msg::LocationUpdate& m) { on_location(m); },
                 [&](const msg::Heartbeat& m) { on_heartbeat(env, m); },
                 [&](const msg::ProtocolError& m) { note("protocol_error", {}, m.code + " " + m.detail); },
                 [&](const auto&) {
                   reply(env, msg::ProtocolError{"unexpected_message", std::string(env.kind())});
                 },
             },
             env.body);
}

void ServerContainer::route(const Envelope& env) {
  if (is_valid_id(env.recipient)) {
    const ClientId client(env.recipient);
    if (clients_.contains(client)) return forward(env.recipient, env);
    const NodeId node(env.recipient);
    if (nodes_.contains(node)) return forward(env.recipient, env);
    const AgentId agent(env.recipient);
    if (const auto it = agents_.find(agent); it != agents_.end()) {
      const auto& rec = jobs_.at(it->second);
      if (rec.node && !is_terminal(rec.status)) return forward(rec.node->str(), env);
    }
    // Receivers live on their client.
    for (const auto& [job, rec] : jobs_) {
      if (rec.twin == agent && clients_.contains(rec.client)) return forward(rec.client.str(), env);
    }
  }
  reply(env, msg::ProtocolError{"unknown_recipient", env.recipient});
}

void ServerContainer::on_send_failed(const std::string& to, const Envelope& env, SendFailure why) {
  note("send_failed", job_of(env.body).value_or(JobId()).str(), to + " " + std::string(to_string(why)));
  if (env.sender != id()) {
    const auto job = job_of(env.body);
    send(env.sender, msg::ProtocolError{"unreachable", job ? job->str() : env.recipient});
    return;
  }
  if (const auto* m = std::get_if<msg::MigrateAgent>(&env.body)) {
    if (m->payload) {
      if (auto it = parked_.find(m->snapshot.job.job_id); it != parked_.end()) {
        cancel(it->second.timer);
        it->second.in_flight = false;
      }
    } else {
      placement_failed(m->snapshot.agent_id, "node_unreachable");
    }
    return;
  }
  if (const auto* q = std::get_if<msg::LoadQuery>(&env.body)) {
    std::vector<AgentId> done;
    for (auto& [agent, p] : placements_) {
      if (!p.forwarding && p.awaiting.erase(q->node) && p.awaiting.empty()) done.push_back(agent);
    }
    for (const auto& a : done) finish_query(a);
  }
}

// ---------------------------------------------------------------------------

void ServerContainer::on_register(const Envelope& env, const msg::RegisterClient& m) {
  clients_[m.client] = ClientEntry{m.endpoint, now()};
  if (!m.endpoint.empty()) fabric().learn_endpoint(m.client.str(), m.endpoint);
  // Parked agents go home ahead of the ack.
  std::vector<JobId> waiting;
  for (const auto& [job, p] : parked_) {
    if (p.snapshot.client == m.client && !p.in_flight) waiting.push_back(job);
  }
  for (const auto& job : waiting) bring_back(job);
  reply(env, msg::RegisterAck{config_.id, true});
}

void ServerContainer::on_submit(const Envelope& env, const msg::SubmitJob& m) {
  const auto& spec = m.spec;
  bool ok = is_valid_id(env.sender) && clients_.contains(ClientId(env.sender)) && validate_job_spec(spec).empty();
  if (ok) {
    const auto it = jobs_.find(spec.job_id);
    if (it == jobs_.end()) {
      jobs_[spec.job_id] = JobRecord{status::Submitted{}, ClientId(env.sender), {}, {}, std::nullopt, false};
    } else {
      ok = it->second.client == ClientId(env.sender) &&
           std::holds_alternative<status::Submitted>(it->second.status);
    }
  }
  reply(env, msg::SubmitAck{spec.job_id, ok});
}

void ServerContainer::on_migrate(const Envelope& env, const msg::MigrateAgent& m) {
  if (m.payload) return park(env, m);
  const auto& snap = m.snapshot;
  if (!is_valid_id(env.sender) || !clients_.contains(ClientId(env.sender)) || snap.client != ClientId(env.sender)) {
    return refuse(env.sender, snap.agent_id, "unregistered_client");
  }
  if (agents_.contains(snap.agent_id)) return refuse(env.sender, snap.agent_id, "duplicate_agent");
  if (!validate_snapshot(snap).empty()) return refuse(env.sender, snap.agent_id, "invalid_snapshot");
  if (!std::holds_alternative<status::Submitted>(snap.status)) {
    return refuse(env.sender, snap.agent_id, "invalid_snapshot");
  }

  auto it = jobs_.find(snap.job.job_id);
  if (it == jobs_.end()) {
    it = jobs_.emplace(snap.job.job_id, JobRecord{status::Submitted{}, snap.client, {}, {}, std::nullopt, false}).first;
  }
  auto& rec = it->second;
  if (std::holds_alternative<status::Killed>(rec.status)) return refuse(env.sender, snap.agent_id, "killed");
  if (!std::holds_alternative<status::Submitted>(rec.status) || rec.client != snap.client) {
    return refuse(env.sender, snap.agent_id, "duplicate_job");
  }
  rec.agent = snap.agent_id;
  rec.twin = snap.twin_id;
  agents_[snap.agent_id] = snap.job.job_id;
  start_placement(env.sender, snap);
}

void ServerContainer::refuse(const std::string& to, const AgentId& agent, const std::string& reason) {
  note("migrate_refused", {}, agent.str() + " " + reason);
  send(to, msg::MigrateAck{agent, false, reason, std::nullopt});
}

void ServerContainer::start_placement(const std::string& client_container, AgentSnapshot snapshot) {
  const AgentId agent = snapshot.agent_id;
  Placement p;
  p.snapshot = std::move(snapshot);
  p.client_container = client_container;
  for (const auto& [node, entry] : nodes_) {
    if (!entry.lost) p.awaiting.insert(node);
  }
  const auto targets = p.awaiting;
  placements_[agent] = std::move(p);
  for (const auto& node : targets) send(node.str(), msg::LoadQuery{node});
  if (targets.empty()) return finish_query(agent);
  placements_[agent].timer = after(config_.timing.load_query_timeout(), [this, agent] {
    if (auto it = placements_.find(agent); it != placements_.end()) {
      it->second.timer = 0;
      finish_query(agent);
    }
  });
}

void ServerContainer::on_load_reply(const msg::LoadReply& m) {
  if (auto it = nodes_.find(m.report.node); it != nodes_.end()) it->second.last_report = m.report;
  std::vector<AgentId> done;
  for (auto& [agent, p] : placements_) {
    if (!p.forwarding && p.awaiting.erase(m.report.node)) {
      p.replies.push_back(m.report);
      if (p.awaiting.empty()) done.push_back(agent);
    }
  }
  for (const auto& a : done) finish_query(a);
}

void ServerContainer::finish_query(const AgentId& agent) {
  auto it = placements_.find(agent);
  if (it == placements_.end() || it->second.forwarding) return;
  auto& p = it->second;
  cancel(p.timer);
  const FarmView view = make_farm_view(config_.id, p.replies, config_.thresholds, now() / 1000);
  const auto target = find_target(view, {}, config_.thresholds);
  const JobId job = p.snapshot.job.job_id;
  if (!target) return placement_failed(agent, "no_target");

  auto& rec = jobs_.at(job);
  set_status(rec, job, advance_status(rec.status, lifecycle::MigrateStart{}), true);
  p.snapshot.status = rec.status;
  p.forwarding = true;
  p.target = *target;
  note("placed", job.str(), target->str());
  send(target->str(), msg::MigrateAgent{p.snapshot, std::nullopt});
  p.timer = after(config_.timing.request_timeout(), [this, agent] {
    if (auto pit = placements_.find(agent); pit != placements_.end()) {
      pit->second.timer = 0;
      placement_failed(agent, "node_timeout");
    }
  });
}

void ServerContainer::placement_failed(const AgentId& agent, const std::string& reason) {
  auto it = placements_.find(agent);
  if (it == placements_.end()) return;
  Placement p = std::move(it->second);
  placements_.erase(it);
  cancel(p.timer);
  const JobId job = p.snapshot.job.job_id;
  agents_.erase(agent);

  bool killed = false;
  for (const auto& env : p.deferred) {
    if (std::holds_alternative<msg::Kill>(env.body)) {
      send(env.sender, msg::KillAck{job, false});
      killed = true;
    }
  }
  if (killed) {
    auto& rec = jobs_.at(job);
    set_status(rec, job, status::Killed{}, true);
    refuse(p.client_container, agent, "killed");
  } else {
    jobs_.erase(job);
    refuse(p.client_container, agent, reason);
  }
}

void ServerContainer::on_migrate_ack(const Envelope& env, const msg::MigrateAck& m) {
  if (auto it = placements_.find(m.agent_id); it != placements_.end() && it->second.forwarding &&
                                              it->second.target.str() == env.sender) {
    if (!m.accepted) return placement_failed(m.agent_id, m.reason.empty() ? "refused" : m.reason);
    Placement p = std::move(it->second);
    placements_.erase(it);
    cancel(p.timer);
    auto& rec = jobs_.at(p.snapshot.job.job_id);
    rec.node = p.target;
    send(p.client_container, msg::MigrateAck{m.agent_id, true, "", p.target});
    for (const auto& d : p.deferred) forward(p.target.str(), d);
    return;
  }
  for (auto& [job, parked] : parked_) {
    if (parked.snapshot.agent_id != m.agent_id || !parked.in_flight) continue;
    cancel(parked.timer);
    parked.in_flight = false;
    if (m.accepted) {
      const JobId done = job;
      parked_.erase(done);
      auto& rec = jobs_[done];
      rec.parked = false;
      set_status(rec, done, status::Completed{}, false);
    }
    return;
  }
}

// ---------------------------------------------------------------------------

void ServerContainer::on_status_query(const Envelope& env, const msg::StatusQuery& m) {
  const auto it = jobs_.find(m.job_id);
  if (it == jobs_.end()) return reply(env, msg::ProtocolError{"unknown_job", m.job_id.str()});
  reply(env, msg::StatusReport{m.job_id, it->second.status, it->second.node});
}

void ServerContainer::on_kill(const Envelope& env, const msg::Kill& m) {
  const auto it = jobs_.find(m.job_id);
  if (it == jobs_.end()) return reply(env, msg::ProtocolError{"unknown_job", m.job_id.str()});
  auto& rec = it->second;
  if (is_terminal(rec.status) || rec.parked) {
    return reply(env, msg::ProtocolError{"already_terminal", m.job_id.str()});
  }
  if (auto pit = placements_.find(rec.agent); !rec.agent.empty() && pit != placements_.end()) {
    auto& p = pit->second;
    if (p.forwarding) {
      p.deferred.push_back(env);
      return;
    }
    cancel(p.timer);
    const std::string client = p.client_container;
    placements_.erase(pit);
    set_status(rec, m.job_id, status::Killed{}, true);
    reply(env, msg::KillAck{m.job_id, false});
    refuse(client, rec.agent, "killed");
    return;
  }
  if (rec.node) return forward(rec.node->str(), env);
  // Submitted, agent not yet arrived.
  set_status(rec, m.job_id, status::Killed{}, true);
  reply(env, msg::KillAck{m.job_id, false});
}

void ServerContainer::on_location(const msg::LocationUpdate& m) {
  const auto it = agents_.find(m.agent_id);
  if (it == agents_.end()) return;
  auto& rec = jobs_.at(it->second);
  if (is_terminal(rec.status)) return;
  rec.status = m.status;
  if (const auto* r = std::get_if<status::Relocating>(&m.status)) {
    rec.node = r->from;
  } else if (nodes_.contains(m.node)) {
    rec.node = m.node;
  }
}

void ServerContainer::on_heartbeat(const Envelope& env, const msg::Heartbeat& m) {
  if (is_valid_id(m.from)) {
    if (auto it = nodes_.find(NodeId(m.from)); it != nodes_.end()) {
      it->second.last_heartbeat = now();
      it->second.lost = false;
    }
  }
  reply(env, msg::HeartbeatAck{id()});
}

// ---------------------------------------------------------------------------

void ServerContainer::park(const Envelope& env, const msg::MigrateAgent& m) {
  AgentSnapshot snap = m.snapshot;
  const JobId job = snap.job.job_id;
  if (!validate_snapshot(snap).empty()) return refuse(env.sender, snap.agent_id, "invalid_snapshot");
  if (parked_.contains(job)) return refuse(env.sender, snap.agent_id, "duplicate_agent");
  snap.hop_count += 1;
  snap.visited.push_back(config_.id);
  note("parked", job.str(), "hop=" + std::to_string(snap.hop_count));

  auto& rec = jobs_[job];
  if (rec.client.empty()) {
    rec.client = snap.client;
    rec.agent = snap.agent_id;
    rec.twin = snap.twin_id;
    rec.status = snap.status;
    agents_[snap.agent_id] = job;
  }
  rec.parked = true;
  parked_[job] = Parked{std::move(snap), *m.payload, false, 0};
  reply(env, msg::MigrateAck{m.snapshot.agent_id, true, "", std::nullopt});
  bring_back(job);
}

void ServerContainer::bring_back(const JobId& job) {
  auto it = parked_.find(job);
  if (it == parked_.end() || it->second.in_flight) return;
  auto& p = it->second;
  if (!clients_.contains(p.snapshot.client)) return;
  p.in_flight = true;
  send(p.snapshot.client.str(), msg::MigrateAgent{p.snapshot, p.payload});
  p.timer = after(config_.timing.request_timeout(), [this, job] {
    if (auto pit = parked_.find(job); pit != parked_.end()) {
      pit->second.timer = 0;
      pit->second.in_flight = false;
    }
  });
}

void ServerContainer::watchdog() {
  const Micros limit = config_.timing.request_timeout();
  std::vector<NodeId> lost;
  for (auto& [node, entry] : nodes_) {
    if (!entry.lost && now() - entry.last_heartbeat > limit) {
      entry.lost = true;
      lost.push_back(node);
    }
  }
  for (const auto& n : lost) node_lost(n);
  after(config_.timing.heartbeat_interval, [this] { watchdog(); });
}

void ServerContainer::node_lost(const NodeId& node) {
  note("node_lost", {}, node.str());
  for (auto& [job, rec] : jobs_) {
    if (rec.node != node || is_terminal(rec.status) || rec.parked) continue;
    set_status(rec, job, status::Failed{"node_lost"}, true);
    send(rec.client.str(), msg::LocationUpdate{rec.agent, node, rec.status}, rec.twin.str());
  }
  std::vector<AgentId> done;
  for (auto& [agent, p] : placements_) {
    if (!p.forwarding && p.awaiting.erase(node) && p.awaiting.empty()) done.push_back(agent);
  }
  for (const auto& a : done) finish_query(a);
}

}  // namespace offload
