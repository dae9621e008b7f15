#include "offload/sim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace offload {

Micros transfer_time(std::uint64_t bytes, const LinkParams& link) {
  return link.latency + std::llround(static_cast<double>(bytes) * 1e6 / link.bandwidth);
}

void Simulation::add_host(Host& host, LinkParams link) {
  if (!(link.bandwidth > 0.0) || link.latency < 0) throw std::invalid_argument("bad link for " + host.id());
  auto [it, fresh] = hosts_.try_emplace(host.id());
  if (!fresh) throw std::invalid_argument("duplicate container " + host.id());
  it->second.host = &host;
  it->second.link = link;
}

void Simulation::add_down_interval(const std::string& id, Micros from, Micros to) {
  hosts_.at(id).down.emplace_back(from, to);
}

bool Simulation::link_up(const std::string& id, Micros at) const {
  const auto it = hosts_.find(id);
  if (it == hosts_.end()) return false;
  return std::none_of(it->second.down.begin(), it->second.down.end(),
                      [at](const auto& d) { return d.first <= at && at < d.second; });
}

void Simulation::kill(const std::string& id) {
  hosts_.at(id).dead = true;
  record({now_, TraceEvent::Type::Fault, id, {}, "crash", {}, {}, 0, 0});
}

bool Simulation::alive(const std::string& id) const {
  const auto it = hosts_.find(id);
  return it != hosts_.end() && !it->second.dead;
}

TimerId Simulation::push(Micros at, std::string owner, std::function<void()> fn) {
  const std::uint64_t seq = ++seq_;
  queue_.push({at, seq});
  actions_.emplace(seq, Action{std::move(owner), std::move(fn)});
  return seq;
}

void Simulation::at(Micros when, std::function<void()> fn) { push(std::max(when, now_), {}, std::move(fn)); }

TimerId Simulation::schedule_after(const std::string& owner, Micros delay, std::function<void()> fn) {
  return push(now_ + std::max<Micros>(delay, 0), owner, std::move(fn));
}

void Simulation::cancel(TimerId id) { actions_.erase(id); }

void Simulation::record(TraceEvent event) {
  trace_.push_back(std::move(event));
  if (observer_) observer_(trace_.back());
}

void Simulation::send(const std::string& from, const std::string& to, Envelope env) {
  Bytes frame = encode_frame(env);
  const auto bytes = frame.size();
  const auto job = job_of(env.body);
  record({now_, TraceEvent::Type::Send, from, to, std::string(env.kind()), job ? job->str() : std::string(), {},
          bytes, 0});

  const auto dst = hosts_.find(to);
  if (dst == hosts_.end()) {
    push(now_, from, [this, from, to, env = std::move(env)] { fail(from, to, env, SendFailure::UnknownRecipient); });
    return;
  }
  const auto& src = hosts_.at(from);
  const LinkParams path{std::min(src.link.bandwidth, dst->second.link.bandwidth),
                        std::max(src.link.latency, dst->second.link.latency)};
  if (dst->second.dead || !link_up(from, now_) || !link_up(to, now_)) {
    push(now_ + path.latency, from,
         [this, from, to, env = std::move(env)] { fail(from, to, env, SendFailure::Unreachable); });
    return;
  }
  Micros arrival = now_ + transfer_time(bytes, path);
  auto& last = last_arrival_[{from, to}];
  arrival = std::max(arrival, last);
  last = arrival;
  push(arrival, {}, [this, from, to, frame = std::move(frame)] { deliver(from, to, frame); });
}

void Simulation::fail(const std::string& from, const std::string& to, const Envelope& env, SendFailure why) {
  const auto job = job_of(env.body);
  record({now_, TraceEvent::Type::Fail, from, to, std::string(env.kind()), job ? job->str() : std::string(),
          std::string(to_string(why)), 0, 0});
  if (alive(from)) hosts_.at(from).host->on_send_failed(to, env, why);
}

void Simulation::deliver(const std::string& from, const std::string& to, const Bytes& frame) {
  Envelope env = decode_frame(frame).envelope;
  if (!alive(to) || !link_up(from, now_) || !link_up(to, now_)) return fail(from, to, env, SendFailure::Unreachable);
  const auto job = job_of(env.body);
  record({now_, TraceEvent::Type::Deliver, from, to, std::string(env.kind()), job ? job->str() : std::string(), {},
          frame.size(), 0});
  hosts_.at(to).host->on_message(env);
}

bool Simulation::step() {
  while (!queue_.empty()) {
    const Key k = queue_.top();
    queue_.pop();
    auto it = actions_.find(k.seq);
    if (it == actions_.end()) continue;  // cancelled
    Action action = std::move(it->second);
    actions_.erase(it);
    now_ = k.at;
    if (!action.owner.empty() && !alive(action.owner)) continue;
    action.fn();
    return true;
  }
  return false;
}

void Simulation::run_until(Micros horizon, const std::function<bool()>& stop) {
  for (;;) {
    while (!queue_.empty() && !actions_.contains(queue_.top().seq)) queue_.pop();
    if (queue_.empty() || queue_.top().at > horizon) return;
    step();
    if (stop && stop()) return;
  }
}

std::string Simulation::trace_text() const {
  std::string out;
  for (const auto& e : trace_) {
    out += format_trace_line(e);
    out += '\n';
  }
  return out;
}

}  // namespace offload
