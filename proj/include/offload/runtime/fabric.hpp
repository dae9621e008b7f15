#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "offload/wire.hpp"

namespace offload {

/// Microseconds on whichever clock the fabric runs (virtual or steady).
using Micros = std::int64_t;
using TimerId = std::uint64_t;

enum class SendFailure { UnknownRecipient, Unreachable };
std::string_view to_string(SendFailure f);

/// One line of the run trace.  Message events are recorded by the fabric,
/// the rest by containers.
struct TraceEvent {
  enum class Type { Send, Deliver, Fail, Status, Phase, Note, Fault };

  Micros at = 0;
  Type type = Type::Note;
  std::string where;  // container that produced the event (sender for messages)
  std::string peer;   // recipient container for messages
  std::string kind;   // message kind, phase name, or note tag
  std::string job;
  std::string detail;
  std::uint64_t bytes = 0;
  Micros duration = 0;  // phases only
};

std::string_view to_string(TraceEvent::Type t);
/// Fixed-format single line, no trailing newline.
std::string format_trace_line(const TraceEvent& e);

/// Something that receives messages: a container.
class Host {
 public:
  virtual ~Host() = default;
  virtual const std::string& id() const = 0;
  virtual void on_message(const Envelope& env) = 0;
  /// `env` could not be handed to `to`.
  virtual void on_send_failed(const std::string& to, const Envelope& env, SendFailure why) = 0;
};

/// Transport plus clock.  Simulation and live sockets both implement it, so
/// the containers above never know which one they run on.
class Fabric {
 public:
  virtual ~Fabric() = default;

  virtual Micros now() const = 0;
  /// Runs `fn` after `delay` unless cancelled, or unless `owner` has died.
  virtual TimerId schedule_after(const std::string& owner, Micros delay, std::function<void()> fn) = 0;
  virtual void cancel(TimerId id) = 0;

  /// Asynchronous.  Failure is reported to the sending host through
  /// on_send_failed; success is silent.
  virtual void send(const std::string& from, const std::string& to, Envelope env) = 0;

  /// Tells the transport where a container can be reached.  Simulation
  /// ignores this; live mode uses it to dial.
  virtual void learn_endpoint(const std::string& /*id*/, const std::string& /*endpoint*/) {}

  virtual void record(TraceEvent event) = 0;
};

}  // namespace offload
