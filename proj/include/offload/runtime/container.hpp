#pragma once

#include <map>
#include <set>
#include <string>

#include "offload/runtime/fabric.hpp"

namespace offload {

/// Shared plumbing for server, node and client containers: per-sender
/// msg_id assignment, owned timers and trace helpers.
class Container : public Host {
 public:
  Container(std::string id, Fabric& fabric) : id_(std::move(id)), fabric_(fabric) {}
  ~Container() override;

  Container(const Container&) = delete;
  Container& operator=(const Container&) = delete;

  const std::string& id() const override { return id_; }
  Fabric& fabric() { return fabric_; }
  Micros now() const { return fabric_.now(); }

 protected:
  /// Sends `body` to container `to`, addressed to `recipient` (defaults to `to`).
  void send(const std::string& to, MessageBody body, std::string recipient = {});
  /// Re-sends an envelope unchanged apart from the hop; used for routing.
  void forward(const std::string& to, const Envelope& env);
  /// Reply to whoever sent `env`.
  void reply(const Envelope& env, MessageBody body) { send(env.sender, std::move(body)); }

  TimerId after(Micros delay, std::function<void()> fn);
  void cancel(TimerId& id);

  void record_status(const JobId& job, const JobStatus& from, const JobStatus& to);
  /// Recorded when the phase ends, so trace time never runs backwards.
  void record_phase(const JobId& job, const std::string& phase, Micros duration);
  void note(const std::string& tag, const std::string& job, const std::string& detail);

 private:
  std::string id_;
  Fabric& fabric_;
  std::uint64_t next_msg_id_ = 1;
  std::set<TimerId> timers_;
};

}  // namespace offload
