#include "offload/runtime/agents.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

namespace offload {

void ReceiverAgent::observe(std::optional<NodeId> node, const JobStatus& status, Micros at) {
  if (is_terminal(last_known.status)) return;
  if (node) last_known.node = std::move(node);
  last_known.status = status;
  last_known.at = at;
}

bool ReceiverAgent::accept_result(const ResultPayload& payload) {
  const bool seen = std::any_of(inbox.begin(), inbox.end(),
                                [&](const ResultPayload& p) { return p.job_id == payload.job_id; });
  if (seen) return false;
  inbox.push_back(payload);
  return true;
}

std::pair<AgentId, AgentId> AgentIdSource::next(const JobId& job) {
  ++counter_;
  const std::string suffix = std::to_string(counter_);
  std::string base = job.str();
  if (base.size() + suffix.size() + 2 > kMaxIdBytes) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016zx", std::hash<std::string>{}(client_.str() + "/" + base));
    base = hex;
  }
  return {AgentId(base + "/m" + suffix), AgentId(base + "/r" + suffix)};
}

std::pair<MobileAgent, ReceiverAgent> spawn_pair(const ClientId& client, const JobSpec& spec,
                                                 const std::string& home_endpoint, AgentIdSource& ids,
                                                 std::int64_t max_hops) {
  const auto [mobile_id, receiver_id] = ids.next(spec.job_id);
  MobileAgent mobile;
  mobile.max_hops = max_hops;
  mobile.snapshot.agent_id = mobile_id;
  mobile.snapshot.twin_id = receiver_id;
  mobile.snapshot.client = client;
  mobile.snapshot.job = spec;
  mobile.snapshot.status = status::Pending{};
  mobile.snapshot.home_endpoint = home_endpoint;

  ReceiverAgent receiver;
  receiver.agent_id = receiver_id;
  receiver.twin_id = mobile_id;
  receiver.job_id = spec.job_id;
  return {std::move(mobile), std::move(receiver)};
}

std::int64_t hop_reserve(DeliveryMode mode) { return mode == DeliveryMode::Direct ? 0 : 2; }

bool may_relocate(const AgentSnapshot& snapshot, std::int64_t max_hops) {
  return snapshot.hop_count + 1 + hop_reserve(snapshot.job.delivery) <= max_hops;
}

RelocationDecision decide_relocation(const AgentSnapshot& snapshot, const NodeId& current,
                                     const LoadReport& current_load, const FarmView& peers,
                                     const LoadThresholds& thresholds, std::int64_t max_hops) {
  using K = RelocationDecision::Kind;
  if (classify_load(current_load, thresholds) != LoadStatus::Over) return {K::Stay, std::nullopt, "not_over"};
  if (!may_relocate(snapshot, max_hops)) return {K::Stay, std::nullopt, "hop_limit"};
  auto target = find_target(peers, {current}, thresholds);
  if (!target) return {K::Stay, std::nullopt, "no_target"};
  return {K::Move, std::move(target), "over"};
}

}  // namespace offload
