#pragma once

// Random generators for wire-level values, shared by unit and acceptance tests.

#include <random>
#include <string>

#include "offload/wire.hpp"

namespace offload::testing {

class MessageGen {
 public:
  explicit MessageGen(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t u(std::uint64_t bound) { return rng_() % bound; }
  bool coin() { return (rng_() & 1U) != 0; }
  double real() {
    switch (u(5)) {
      case 0: return 0.0;
      case 1: return -1e300 * unit();
      case 2: return 1e-300 * unit();
      default: return (unit() - 0.5) * 2000.0;
    }
  }
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::string text(std::size_t max_len = 12) {
    static const char* pieces[] = {"a", "Z", "0", "_", "-", " ", "\"", "\\", "/", "\xc3\xa9",
                                   "\xe2\x82\xac", "\xf0\x9f\x98\x80", "{", "}", "\t"};
    std::string out;
    const auto len = u(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) out += pieces[u(std::size(pieces))];
    return out;
  }

  std::string id() {
    static const char* pieces[] = {"n", "s", "c", "j", "1", "9", "_", ".", "\xc3\xa9", " "};
    std::string out = "x";
    const auto len = u(10);
    for (std::size_t i = 0; i < len; ++i) out += pieces[u(std::size(pieces))];
    return out;
  }

  template <typename T>
  T tid() {
    return T(id());
  }

  AxisSpec axis() { return AxisSpec{id(), static_cast<std::int64_t>(1 + u(100)), real(), real()}; }

  JobSpec job() {
    JobSpec s;
    s.job_id = tid<JobId>();
    s.input_ref = text(20);
    switch (u(3)) {
      case 0: s.params = Hist1DParams{axis()}; break;
      case 1: s.params = Hist2DParams{axis(), axis()}; break;
      default: s.params = ParseXmlParams{}; break;
    }
    s.delivery = static_cast<DeliveryMode>(u(3));
    return s;
  }

  JobStatus status() {
    switch (u(8)) {
      case 0: return status::Pending{};
      case 1: return status::Submitted{};
      case 2: return status::Migrating{};
      case 3: return status::Running{tid<NodeId>()};
      case 4: return status::Relocating{tid<NodeId>(), tid<NodeId>()};
      case 5: return status::Completed{};
      case 6: return status::Failed{text()};
      default: return status::Killed{};
    }
  }

  LoadReport report() {
    return LoadReport{tid<NodeId>(), unit(), static_cast<std::int64_t>(u(50)),
                      static_cast<std::int64_t>(1 + u(16)), unit(), static_cast<std::int64_t>(u(1'000'000'000))};
  }

  AgentSnapshot snapshot() {
    AgentSnapshot s;
    s.agent_id = tid<AgentId>();
    s.twin_id = tid<AgentId>();
    s.client = tid<ClientId>();
    s.job = job();
    s.status = status();
    const auto hops = u(6);
    for (std::size_t i = 0; i < hops; ++i) s.visited.push_back(tid<NodeId>());
    s.hop_count = static_cast<std::int64_t>(hops);
    s.home_endpoint = text();
    return s;
  }

  ResultPayload payload() {
    ResultPayload p{tid<JobId>(), tid<NodeId>(), {}};
    switch (u(3)) {
      case 0: {
        Histogram1D h;
        h.nbins = static_cast<std::int64_t>(1 + u(20));
        h.lo = real();
        h.hi = real();
        for (std::int64_t i = 0; i < h.nbins; ++i) h.counts.push_back(rng_());
        h.underflow = rng_();
        h.overflow = u(1000);
        p.data = h;
        break;
      }
      case 1: {
        Histogram2D h;
        h.nx = static_cast<std::int64_t>(1 + u(6));
        h.ny = static_cast<std::int64_t>(1 + u(6));
        h.xlo = real();
        h.xhi = real();
        h.ylo = real();
        h.yhi = real();
        for (std::int64_t i = 0; i < h.nx * h.ny; ++i) h.counts.push_back(u(1u << 31));
        h.x_underflow = u(9);
        h.x_overflow = u(9);
        h.y_underflow = u(9);
        h.y_overflow = u(9);
        p.data = h;
        break;
      }
      default: {
        DrawableSummary d;
        d.events = u(100);
        const auto types = u(4);
        for (std::size_t i = 0; i < types; ++i) d.drawables_by_type[text(6)] = u(50);
        const auto points = u(4);
        for (std::size_t i = 0; i < points; ++i) d.add_point(real(), real(), real());
        p.data = d;
        break;
      }
    }
    return p;
  }

  MessageBody body(std::size_t kind) {
    switch (kind) {
      case 0: return msg::RegisterClient{tid<ClientId>(), text()};
      case 1: return msg::RegisterAck{tid<NodeId>(), coin()};
      case 2: return msg::SubmitJob{job()};
      case 3: return msg::SubmitAck{tid<JobId>(), coin()};
      case 4: {
        msg::MigrateAgent m{snapshot(), std::nullopt};
        if (coin()) m.payload = payload();
        return m;
      }
      case 5: {
        msg::MigrateAck m{tid<AgentId>(), coin(), text(), std::nullopt};
        if (coin()) m.node = tid<NodeId>();
        return m;
      }
      case 6: return msg::LoadQuery{tid<NodeId>()};
      case 7: return msg::LoadReply{report()};
      case 8: return msg::StatusQuery{tid<JobId>()};
      case 9: {
        msg::StatusReport m{tid<JobId>(), status(), std::nullopt};
        if (coin()) m.node = tid<NodeId>();
        return m;
      }
      case 10: return msg::Kill{tid<JobId>()};
      case 11: return msg::KillAck{tid<JobId>(), coin()};
      case 12: return msg::LocationUpdate{tid<AgentId>(), tid<NodeId>(), status()};
      case 13: return msg::ResultTransfer{payload()};
      case 14: return msg::ResultAck{tid<JobId>()};
      case 15: return msg::Heartbeat{id()};
      case 16: return msg::HeartbeatAck{id()};
      default: return msg::ProtocolError{text(), text(30)};
    }
  }

  Envelope envelope(std::size_t kind) { return Envelope{rng_(), id(), id(), body(kind)}; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace offload::testing
