#pragma once

#include <functional>
#include <map>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "offload/runtime/fabric.hpp"

namespace offload {

/// One container's access link.  A message between two containers travels
/// at the slower bandwidth and the larger latency of the two links.
struct LinkParams {
  double bandwidth = 10'000'000.0;  // bytes per second
  Micros latency = 5'000;
};

/// Transfer time of `bytes` over `link`, latency included.
Micros transfer_time(std::uint64_t bytes, const LinkParams& link);

/**
 * Discrete-event fabric on a virtual clock.
 *
 * Events run in (time, insertion) order, so a run is a pure function of
 * what was scheduled.  Every frame is really encoded and decoded; its
 * encoded size sets the transfer time.  Messages between one ordered pair
 * of containers arrive in send order.
 */
class Simulation : public Fabric {
 public:
  Simulation() = default;

  void add_host(Host& host, LinkParams link);
  bool has_host(const std::string& id) const { return hosts_.contains(id); }
  const LinkParams& link(const std::string& id) const { return hosts_.at(id).link; }

  /// The container's link is down on [from, to).
  void add_down_interval(const std::string& id, Micros from, Micros to);
  bool link_up(const std::string& id, Micros at) const;

  /// Crash: from now on the container neither receives nor runs timers.
  void kill(const std::string& id);
  bool alive(const std::string& id) const;

  /// Harness event with no owning container.
  void at(Micros when, std::function<void()> fn);

  Micros now() const override { return now_; }
  TimerId schedule_after(const std::string& owner, Micros delay, std::function<void()> fn) override;
  void cancel(TimerId id) override;
  void send(const std::string& from, const std::string& to, Envelope env) override;
  void record(TraceEvent event) override;

  /// Runs the next event; false when the queue is empty.
  bool step();
  /// Steps until the queue is empty, the next event lies beyond `horizon`,
  /// or `stop` returns true after an event.
  void run_until(Micros horizon, const std::function<bool()>& stop = {});
  std::size_t pending() const { return actions_.size(); }

  const std::vector<TraceEvent>& trace() const { return trace_; }
  std::string trace_text() const;
  void set_trace_observer(std::function<void(const TraceEvent&)> fn) { observer_ = std::move(fn); }

 private:
  struct Node {
    Host* host = nullptr;
    LinkParams link;
    std::vector<std::pair<Micros, Micros>> down;
    bool dead = false;
  };
  struct Action {
    std::string owner;  // empty: harness
    std::function<void()> fn;
  };
  struct Key {
    Micros at;
    std::uint64_t seq;
    bool operator>(const Key& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  TimerId push(Micros at, std::string owner, std::function<void()> fn);
  void fail(const std::string& from, const std::string& to, const Envelope& env, SendFailure why);
  void deliver(const std::string& from, const std::string& to, const Bytes& frame);

  Micros now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Key, std::vector<Key>, std::greater<Key>> queue_;
  std::unordered_map<std::uint64_t, Action> actions_;
  std::map<std::string, Node> hosts_;
  std::map<std::pair<std::string, std::string>, Micros> last_arrival_;
  std::vector<TraceEvent> trace_;
  std::function<void(const TraceEvent&)> observer_;
};

}  // namespace offload
