#include "offload/runtime/container.hpp"

#include <cinttypes>
#include <cstdio>

namespace offload {

std::string_view to_string(SendFailure f) {
  return f == SendFailure::UnknownRecipient ? "unknown_recipient" : "unreachable";
}

std::string_view to_string(TraceEvent::Type t) {
  switch (t) {
    case TraceEvent::Type::Send: return "send";
    case TraceEvent::Type::Deliver: return "deliver";
    case TraceEvent::Type::Fail: return "fail";
    case TraceEvent::Type::Status: return "status";
    case TraceEvent::Type::Phase: return "phase";
    case TraceEvent::Type::Note: return "note";
    case TraceEvent::Type::Fault: return "fault";
  }
  return "?";
}

std::string format_trace_line(const TraceEvent& e) {
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "%12" PRId64, e.at);
  std::string line = stamp;
  line += ' ';
  line += to_string(e.type);
  line += ' ';
  line += e.where;
  if (!e.peer.empty()) line += "->" + e.peer;
  if (!e.kind.empty()) line += ' ' + e.kind;
  if (!e.job.empty()) line += " job=" + e.job;
  if (e.bytes) line += " bytes=" + std::to_string(e.bytes);
  if (e.type == TraceEvent::Type::Phase) line += " dur_us=" + std::to_string(e.duration);
  if (!e.detail.empty()) line += ' ' + e.detail;
  return line;
}

Container::~Container() {
  for (auto t : timers_) fabric_.cancel(t);
}

void Container::send(const std::string& to, MessageBody body, std::string recipient) {
  Envelope env{next_msg_id_++, id_, recipient.empty() ? to : std::move(recipient), std::move(body)};
  fabric_.send(id_, to, std::move(env));
}

void Container::forward(const std::string& to, const Envelope& env) { fabric_.send(id_, to, env); }

TimerId Container::after(Micros delay, std::function<void()> fn) {
  auto holder = std::make_shared<TimerId>(0);
  const TimerId id = fabric_.schedule_after(id_, delay, [this, holder, fn = std::move(fn)] {
    timers_.erase(*holder);
    fn();
  });
  *holder = id;
  timers_.insert(id);
  return id;
}

void Container::cancel(TimerId& id) {
  if (id == 0) return;
  fabric_.cancel(id);
  timers_.erase(id);
  id = 0;
}

void Container::record_status(const JobId& job, const JobStatus& from, const JobStatus& to) {
  fabric_.record({now(), TraceEvent::Type::Status, id_, {}, {}, job.str(),
                  to_string(from) + " -> " + to_string(to), 0, 0});
}

void Container::record_phase(const JobId& job, const std::string& phase, Micros duration) {
  fabric_.record({now(), TraceEvent::Type::Phase, id_, {}, phase, job.str(), {}, 0, duration});
}

void Container::note(const std::string& tag, const std::string& job, const std::string& detail) {
  fabric_.record({now(), TraceEvent::Type::Note, id_, {}, tag, job, detail, 0, 0});
}

}  // namespace offload
