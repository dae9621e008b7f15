#include "offload/wire.hpp"

#include <array>
#include <cmath>
#include <set>

#include "offload/detail/overloaded.hpp"

namespace offload {

using nlohmann::json;
using detail::Overloaded;

namespace {

constexpr std::array<std::string_view, kMessageKinds> kKindNames = {
    "register_client", "register_ack",  "submit_job",      "submit_ack",      "migrate_agent",
    "migrate_ack",     "load_query",    "load_reply",      "status_query",    "status_report",
    "kill",            "kill_ack",      "location_update", "result_transfer", "result_ack",
    "heartbeat",       "heartbeat_ack", "protocol_error",
};

std::string code_name(WireError::Code code) {
  switch (code) {
    case WireError::Code::Truncated: return "Truncated";
    case WireError::Code::MalformedPayload: return "MalformedPayload";
    case WireError::Code::OversizePayload: return "OversizePayload";
    case WireError::Code::InvalidEnvelope: return "InvalidEnvelope";
  }
  return "?";
}

[[noreturn]] void malformed(const std::string& detail) {
  throw WireError(WireError::Code::MalformedPayload, detail);
}

json real(double v) {
  if (!std::isfinite(v)) throw WireError(WireError::Code::InvalidEnvelope, "non-finite real in message");
  return v;
}

/// Strict view over one JSON object: every key must be read exactly once.
class Fields {
 public:
  Fields(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j.is_object()) malformed(what_ + ": expected an object");
  }

  const json& at(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) malformed(what_ + ": missing key '" + key + "'");
    ++used_;
    return *it;
  }

  const json* opt(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    ++used_;
    return &*it;
  }

  std::string str(const char* key) {
    const auto& v = at(key);
    if (!v.is_string()) malformed(what_ + ": '" + key + "' must be a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key) {
    const auto& v = at(key);
    if (!v.is_boolean()) malformed(what_ + ": '" + key + "' must be a boolean");
    return v.get<bool>();
  }

  double number(const char* key) { return as_real(at(key), key); }

  std::int64_t i64(const char* key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) malformed(what_ + ": '" + key + "' must be an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      malformed(what_ + ": '" + key + "' out of range");
    }
    return v.get<std::int64_t>();
  }

  std::uint64_t u64(const char* key) { return as_u64(at(key), key); }

  template <typename Tag>
  Id<Tag> id(const char* key) {
    return Id<Tag>(str(key));
  }

  void finish() const {
    if (used_ != j_.size()) malformed(what_ + ": unexpected keys");
  }

  double as_real(const json& v, const char* key) const {
    if (!v.is_number()) malformed(what_ + ": '" + key + "' must be a number");
    return v.get<double>();
  }

  std::uint64_t as_u64(const json& v, const char* key) const {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      malformed(what_ + ": '" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

 private:
  const json& j_;
  std::string what_;
  std::size_t used_ = 0;
};

// --- histogram / summary ---------------------------------------------------

json counts_json(const std::vector<std::uint64_t>& counts) { return json(counts); }

std::vector<std::uint64_t> counts_from(const json& j, std::size_t expected, const std::string& what) {
  if (!j.is_array()) malformed(what + ": counts must be an array");
  if (j.size() != expected) malformed(what + ": counts length does not match bins");
  std::vector<std::uint64_t> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      malformed(what + ": counts must be non-negative integers");
    }
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

json to_json(const Histogram1D& h) {
  return json{{"nbins", h.nbins},          {"lo", real(h.lo)},           {"hi", real(h.hi)},
              {"counts", counts_json(h.counts)}, {"underflow", h.underflow}, {"overflow", h.overflow}};
}

Histogram1D hist1d_from(const json& j) {
  Fields f(j, "hist1d");
  Histogram1D h;
  h.nbins = f.i64("nbins");
  if (h.nbins < 1 || h.nbins > (1 << 26)) malformed("hist1d: nbins out of range");
  h.lo = f.number("lo");
  h.hi = f.number("hi");
  h.counts = counts_from(f.at("counts"), static_cast<std::size_t>(h.nbins), "hist1d");
  h.underflow = f.u64("underflow");
  h.overflow = f.u64("overflow");
  f.finish();
  return h;
}

json to_json(const Histogram2D& h) {
  return json{{"nx", h.nx},
              {"ny", h.ny},
              {"xlo", real(h.xlo)},
              {"xhi", real(h.xhi)},
              {"ylo", real(h.ylo)},
              {"yhi", real(h.yhi)},
              {"counts", counts_json(h.counts)},
              {"x_underflow", h.x_underflow},
              {"x_overflow", h.x_overflow},
              {"y_underflow", h.y_underflow},
              {"y_overflow", h.y_overflow}};
}

Histogram2D hist2d_from(const json& j) {
  Fields f(j, "hist2d");
  Histogram2D h;
  h.nx = f.i64("nx");
  h.ny = f.i64("ny");
  if (h.nx < 1 || h.ny < 1 || h.nx > (1 << 13) || h.ny > (1 << 13)) malformed("hist2d: bins out of range");
  h.xlo = f.number("xlo");
  h.xhi = f.number("xhi");
  h.ylo = f.number("ylo");
  h.yhi = f.number("yhi");
  h.counts = counts_from(f.at("counts"), static_cast<std::size_t>(h.nx * h.ny), "hist2d");
  h.x_underflow = f.u64("x_underflow");
  h.x_overflow = f.u64("x_overflow");
  h.y_underflow = f.u64("y_underflow");
  h.y_overflow = f.u64("y_overflow");
  f.finish();
  return h;
}

json to_json(const DrawableSummary& s) {
  json box = nullptr;
  if (s.bounding_box) {
    const auto& b = *s.bounding_box;
    box = json{{"min", {real(b.min[0]), real(b.min[1]), real(b.min[2])}},
               {"max", {real(b.max[0]), real(b.max[1]), real(b.max[2])}}};
  }
  json types = json::object();
  for (const auto& [type, count] : s.drawables_by_type) types[type] = count;
  return json{{"events", s.events},
              {"drawables_by_type", types},
              {"total_points", s.total_points},
              {"bounding_box", box}};
}

std::array<double, 3> triple_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) malformed(what + ": expected 3 reals");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) malformed(what + ": expected 3 reals");
    out[i] = j[i].get<double>();
  }
  return out;
}

DrawableSummary summary_from(const json& j) {
  Fields f(j, "drawables");
  DrawableSummary s;
  s.events = f.u64("events");
  const auto& types = f.at("drawables_by_type");
  if (!types.is_object()) malformed("drawables: drawables_by_type must be an object");
  for (auto it = types.begin(); it != types.end(); ++it) {
    s.drawables_by_type[it.key()] = f.as_u64(it.value(), "drawables_by_type");
  }
  s.total_points = f.u64("total_points");
  const auto& box = f.at("bounding_box");
  if (!box.is_null()) {
    Fields b(box, "bounding_box");
    s.bounding_box = BoundingBox{triple_from(b.at("min"), "bounding_box.min"),
                                 triple_from(b.at("max"), "bounding_box.max")};
    b.finish();
  }
  f.finish();
  if (s.bounding_box.has_value() != (s.total_points > 0)) {
    malformed("drawables: bounding_box must be present iff total_points > 0");
  }
  return s;
}

// --- axes ------------------------------------------------------------------

json to_json(const AxisSpec& a) {
  return json{{"branch", a.branch}, {"nbins", a.nbins}, {"lo", real(a.lo)}, {"hi", real(a.hi)}};
}

AxisSpec axis_from(const json& j, const std::string& what) {
  Fields f(j, what);
  AxisSpec a;
  a.branch = f.str("branch");
  a.nbins = f.i64("nbins");
  a.lo = f.number("lo");
  a.hi = f.number("hi");
  f.finish();
  return a;
}

template <typename T>
std::optional<T> opt_id(Fields& f, const char* key) {
  const json* v = f.opt(key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_string()) malformed(std::string("'") + key + "' must be a string or null");
  return T(v->get<std::string>());
}

template <typename T>
json opt_id_json(const std::optional<T>& v) {
  return v ? json(v->str()) : json(nullptr);
}

// --- bodies ----------------------------------------------------------------

json body_to_json(const MessageBody& body) {
  return std::visit(
      Overloaded{
          [](const msg::RegisterClient& m) {
            return json{{"client", m.client.str()}, {"endpoint", m.endpoint}};
          },
          [](const msg::RegisterAck& m) {
            return json{{"server", m.server.str()}, {"accepted", m.accepted}};
          },
          [](const msg::SubmitJob& m) { return json{{"spec", codec::to_json(m.spec)}}; },
          [](const msg::SubmitAck& m) {
            return json{{"job_id", m.job_id.str()}, {"accepted", m.accepted}};
          },
          [](const msg::MigrateAgent& m) {
            return json{{"snapshot", codec::to_json(m.snapshot)},
                        {"payload", m.payload ? codec::to_json(*m.payload) : json(nullptr)}};
          },
          [](const msg::MigrateAck& m) {
            return json{{"agent_id", m.agent_id.str()},
                        {"accepted", m.accepted},
                        {"reason", m.reason},
                        {"node", opt_id_json(m.node)}};
          },
          [](const msg::LoadQuery& m) { return json{{"node", m.node.str()}}; },
          [](const msg::LoadReply& m) { return json{{"report", codec::to_json(m.report)}}; },
          [](const msg::StatusQuery& m) { return json{{"job_id", m.job_id.str()}}; },
          [](const msg::StatusReport& m) {
            return json{{"job_id", m.job_id.str()},
                        {"status", codec::to_json(m.status)},
                        {"node", opt_id_json(m.node)}};
          },
          [](const msg::Kill& m) { return json{{"job_id", m.job_id.str()}}; },
          [](const msg::KillAck& m) {
            return json{{"job_id", m.job_id.str()}, {"was_running", m.was_running}};
          },
          [](const msg::LocationUpdate& m) {
            return json{{"agent_id", m.agent_id.str()},
                        {"node", m.node.str()},
                        {"status", codec::to_json(m.status)}};
          },
          [](const msg::ResultTransfer& m) { return json{{"payload", codec::to_json(m.payload)}}; },
          [](const msg::ResultAck& m) { return json{{"job_id", m.job_id.str()}}; },
          [](const msg::Heartbeat& m) { return json{{"from", m.from}}; },
          [](const msg::HeartbeatAck& m) { return json{{"from", m.from}}; },
          [](const msg::ProtocolError& m) { return json{{"code", m.code}, {"detail", m.detail}}; },
      },
      body);
}

std::string checked_id_string(Fields& f, const char* key) {
  auto s = f.str(key);
  if (!is_valid_id(s)) malformed(std::string("'") + key + "' is not a valid identifier");
  return s;
}

MessageBody body_from_json(std::string_view kind, const json& j) {
  std::size_t index = kKindNames.size();
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == kind) index = i;
  }
  if (index == kKindNames.size()) malformed("unknown message kind '" + std::string(kind) + "'");

  Fields f(j, std::string(kind));
  MessageBody body;
  switch (index) {
    case 0: body = msg::RegisterClient{f.id<ClientTag>("client"), f.str("endpoint")}; break;
    case 1: body = msg::RegisterAck{f.id<NodeTag>("server"), f.boolean("accepted")}; break;
    case 2: body = msg::SubmitJob{codec::job_spec_from_json(f.at("spec"))}; break;
    case 3: body = msg::SubmitAck{f.id<JobTag>("job_id"), f.boolean("accepted")}; break;
    case 4: {
      msg::MigrateAgent m{codec::snapshot_from_json(f.at("snapshot")), std::nullopt};
      const auto& p = f.at("payload");
      if (!p.is_null()) m.payload = codec::result_from_json(p);
      body = std::move(m);
      break;
    }
    case 5: {
      msg::MigrateAck m;
      m.agent_id = f.id<AgentTag>("agent_id");
      m.accepted = f.boolean("accepted");
      m.reason = f.str("reason");
      if (!j.contains("node")) malformed("migrate_ack: missing key 'node'");
      m.node = opt_id<NodeId>(f, "node");
      body = std::move(m);
      break;
    }
    case 6: body = msg::LoadQuery{f.id<NodeTag>("node")}; break;
    case 7: body = msg::LoadReply{codec::load_report_from_json(f.at("report"))}; break;
    case 8: body = msg::StatusQuery{f.id<JobTag>("job_id")}; break;
    case 9: {
      msg::StatusReport m;
      m.job_id = f.id<JobTag>("job_id");
      m.status = codec::job_status_from_json(f.at("status"));
      if (!j.contains("node")) malformed("status_report: missing key 'node'");
      m.node = opt_id<NodeId>(f, "node");
      body = std::move(m);
      break;
    }
    case 10: body = msg::Kill{f.id<JobTag>("job_id")}; break;
    case 11: body = msg::KillAck{f.id<JobTag>("job_id"), f.boolean("was_running")}; break;
    case 12: {
      msg::LocationUpdate m;
      m.agent_id = f.id<AgentTag>("agent_id");
      m.node = f.id<NodeTag>("node");
      m.status = codec::job_status_from_json(f.at("status"));
      body = std::move(m);
      break;
    }
    case 13: body = msg::ResultTransfer{codec::result_from_json(f.at("payload"))}; break;
    case 14: body = msg::ResultAck{f.id<JobTag>("job_id")}; break;
    case 15: body = msg::Heartbeat{checked_id_string(f, "from")}; break;
    case 16: body = msg::HeartbeatAck{checked_id_string(f, "from")}; break;
    case 17: body = msg::ProtocolError{f.str("code"), f.str("detail")}; break;
  }
  f.finish();
  return body;
}

std::uint32_t read_be32(std::span<const std::uint8_t> b) {
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

}  // namespace

WireError::WireError(Code code, const std::string& detail)
    : std::runtime_error(code_name(code) + ": " + detail), code_(code) {}

std::string_view kind_name(std::size_t index) { return kKindNames.at(index); }
std::string_view kind_name(const MessageBody& body) { return kKindNames[body.index()]; }

std::optional<JobId> job_of(const MessageBody& body) {
  return std::visit(
      Overloaded{
          [](const msg::SubmitJob& m) -> std::optional<JobId> { return m.spec.job_id; },
          [](const msg::SubmitAck& m) -> std::optional<JobId> { return m.job_id; },
          [](const msg::MigrateAgent& m) -> std::optional<JobId> { return m.snapshot.job.job_id; },
          [](const msg::StatusQuery& m) -> std::optional<JobId> { return m.job_id; },
          [](const msg::StatusReport& m) -> std::optional<JobId> { return m.job_id; },
          [](const msg::Kill& m) -> std::optional<JobId> { return m.job_id; },
          [](const msg::KillAck& m) -> std::optional<JobId> { return m.job_id; },
          [](const msg::ResultTransfer& m) -> std::optional<JobId> { return m.payload.job_id; },
          [](const msg::ResultAck& m) -> std::optional<JobId> { return m.job_id; },
          [](const auto&) -> std::optional<JobId> { return std::nullopt; },
      },
      body);
}

// --- codec -----------------------------------------------------------------

namespace codec {

json to_json(const JobSpec& spec) {
  json params = std::visit(Overloaded{
                               [](const Hist1DParams& p) { return offload::to_json(p.axis); },
                               [](const Hist2DParams& p) {
                                 return json{{"x", offload::to_json(p.x)}, {"y", offload::to_json(p.y)}};
                               },
                               [](const ParseXmlParams&) { return json::object(); },
                           },
                           spec.params);
  return json{{"job_id", spec.job_id.str()},
              {"kind", std::string(to_string(spec.kind()))},
              {"input_ref", spec.input_ref},
              {"params", params},
              {"delivery", std::string(to_string(spec.delivery))}};
}

JobSpec job_spec_from_json(const json& j) {
  Fields f(j, "spec");
  JobSpec spec;
  spec.job_id = f.id<JobTag>("job_id");
  const auto kind = parse_job_kind(f.str("kind"));
  if (!kind) malformed("spec: unknown job kind");
  spec.input_ref = f.str("input_ref");
  const auto& p = f.at("params");
  switch (*kind) {
    case JobKind::Hist1D: spec.params = Hist1DParams{axis_from(p, "params")}; break;
    case JobKind::Hist2D: {
      Fields pf(p, "params");
      spec.params = Hist2DParams{axis_from(pf.at("x"), "params.x"), axis_from(pf.at("y"), "params.y")};
      pf.finish();
      break;
    }
    case JobKind::ParseEventXml:
      Fields(p, "params").finish();
      spec.params = ParseXmlParams{};
      break;
  }
  const auto mode = parse_delivery_mode(f.str("delivery"));
  if (!mode) malformed("spec: unknown delivery mode");
  spec.delivery = *mode;
  f.finish();
  return spec;
}

json to_json(const JobStatus& status) {
  json out{{"state", std::string(status_name(status))}};
  std::visit(Overloaded{
                 [&](const status::Running& r) { out["node"] = r.node.str(); },
                 [&](const status::Relocating& r) {
                   out["from"] = r.from.str();
                   out["to"] = r.to.str();
                 },
                 [&](const status::Failed& fl) { out["reason"] = fl.reason; },
                 [](const auto&) {},
             },
             status);
  return out;
}

JobStatus job_status_from_json(const json& j) {
  Fields f(j, "status");
  const auto state = f.str("state");
  JobStatus s;
  if (state == "pending") {
    s = status::Pending{};
  } else if (state == "submitted") {
    s = status::Submitted{};
  } else if (state == "migrating") {
    s = status::Migrating{};
  } else if (state == "running") {
    s = status::Running{f.id<NodeTag>("node")};
  } else if (state == "relocating") {
    auto from = f.id<NodeTag>("from");
    s = status::Relocating{std::move(from), f.id<NodeTag>("to")};
  } else if (state == "completed") {
    s = status::Completed{};
  } else if (state == "failed") {
    s = status::Failed{f.str("reason")};
  } else if (state == "killed") {
    s = status::Killed{};
  } else {
    malformed("status: unknown state '" + state + "'");
  }
  f.finish();
  return s;
}

json to_json(const LoadReport& r) {
  return json{{"node", r.node.str()},         {"cpu_util", real(r.cpu_util)},
              {"queue_depth", r.queue_depth}, {"capacity", r.capacity},
              {"mem_util", real(r.mem_util)}, {"sampled_at_ms", r.sampled_at_ms}};
}

LoadReport load_report_from_json(const json& j) {
  Fields f(j, "report");
  LoadReport r;
  r.node = f.id<NodeTag>("node");
  r.cpu_util = f.number("cpu_util");
  r.queue_depth = f.i64("queue_depth");
  r.capacity = f.i64("capacity");
  r.mem_util = f.number("mem_util");
  r.sampled_at_ms = f.i64("sampled_at_ms");
  f.finish();
  return r;
}

json to_json(const AgentSnapshot& s) {
  json visited = json::array();
  for (const auto& v : s.visited) visited.push_back(v.str());
  return json{{"agent_id", s.agent_id.str()},
              {"twin_id", s.twin_id.str()},
              {"client", s.client.str()},
              {"job", to_json(s.job)},
              {"status", to_json(s.status)},
              {"hop_count", s.hop_count},
              {"home_endpoint", s.home_endpoint},
              {"visited", visited}};
}

AgentSnapshot snapshot_from_json(const json& j) {
  Fields f(j, "snapshot");
  AgentSnapshot s;
  s.agent_id = f.id<AgentTag>("agent_id");
  s.twin_id = f.id<AgentTag>("twin_id");
  s.client = f.id<ClientTag>("client");
  s.job = job_spec_from_json(f.at("job"));
  s.status = job_status_from_json(f.at("status"));
  s.hop_count = f.i64("hop_count");
  s.home_endpoint = f.str("home_endpoint");
  const auto& visited = f.at("visited");
  if (!visited.is_array()) malformed("snapshot: visited must be an array");
  for (const auto& v : visited) {
    if (!v.is_string()) malformed("snapshot: visited entries must be strings");
    s.visited.emplace_back(v.get<std::string>());
  }
  f.finish();
  return s;
}

json to_json(const ResultPayload& p) {
  json data = std::visit([](const auto& d) { return offload::to_json(d); }, p.data);
  return json{{"job_id", p.job_id.str()},
              {"node", p.node.str()},
              {"kind", std::string(to_string(p.kind()))},
              {"data", data}};
}

ResultPayload result_from_json(const json& j) {
  Fields f(j, "payload");
  ResultPayload p;
  p.job_id = f.id<JobTag>("job_id");
  p.node = f.id<NodeTag>("node");
  const auto kind = parse_job_kind(f.str("kind"));
  if (!kind) malformed("payload: unknown kind");
  const auto& data = f.at("data");
  switch (*kind) {
    case JobKind::Hist1D: p.data = hist1d_from(data); break;
    case JobKind::Hist2D: p.data = hist2d_from(data); break;
    case JobKind::ParseEventXml: p.data = summary_from(data); break;
  }
  f.finish();
  return p;
}

}  // namespace codec

// --- framing ---------------------------------------------------------------

std::string encode_payload(const Envelope& env) {
  if (!is_valid_id(env.sender) || !is_valid_id(env.recipient)) {
    throw WireError(WireError::Code::InvalidEnvelope, "sender and recipient must be valid identifiers");
  }
  json j{{"msg_id", env.msg_id},
         {"sender", env.sender},
         {"recipient", env.recipient},
         {"kind", std::string(env.kind())},
         {"body", body_to_json(env.body)}};
  try {
    return j.dump();
  } catch (const json::exception& e) {
    throw WireError(WireError::Code::InvalidEnvelope, e.what());
  }
}

Envelope decode_payload(std::string_view text) {
  try {
    const json j = json::parse(text);
    Fields f(j, "envelope");
    Envelope env;
    env.msg_id = f.u64("msg_id");
    env.sender = checked_id_string(f, "sender");
    env.recipient = checked_id_string(f, "recipient");
    const auto kind = f.str("kind");
    env.body = body_from_json(kind, f.at("body"));
    f.finish();
    return env;
  } catch (const WireError&) {
    throw;
  } catch (const std::exception& e) {
    // json::parse_error, type errors and identifier validation all land here.
    malformed(e.what());
  }
}

Bytes encode_frame(const Envelope& env) {
  const std::string payload = encode_payload(env);
  if (payload.size() > kMaxPayloadBytes) {
    throw WireError(WireError::Code::OversizePayload,
                    "payload of " + std::to_string(payload.size()) + " bytes exceeds 16 MiB");
  }
  const auto n = static_cast<std::uint32_t>(payload.size());
  Bytes out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

DecodedFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw WireError(WireError::Code::Truncated, "fewer than 4 prefix bytes");
  const std::uint32_t n = read_be32(bytes);
  if (n > kMaxPayloadBytes) {
    throw WireError(WireError::Code::OversizePayload, "length prefix " + std::to_string(n) + " exceeds 16 MiB");
  }
  if (bytes.size() - 4 < n) {
    throw WireError(WireError::Code::Truncated, "prefix promises " + std::to_string(n) + " bytes, " +
                                                    std::to_string(bytes.size() - 4) + " available");
  }
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + 4), n);
  return DecodedFrame{decode_payload(text), 4 + static_cast<std::size_t>(n)};
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  if (start_ > 0 && start_ == buf_.size()) {
    buf_.clear();
    start_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Envelope> FrameReader::next() {
  const std::span<const std::uint8_t> pending(buf_.data() + start_, buf_.size() - start_);
  if (pending.size() < 4) return std::nullopt;
  const std::uint32_t n = read_be32(pending);
  if (n > kMaxPayloadBytes) {
    throw WireError(WireError::Code::OversizePayload, "length prefix exceeds 16 MiB");
  }
  if (pending.size() - 4 < n) return std::nullopt;
  auto decoded = decode_frame(pending);
  start_ += decoded.consumed;
  if (start_ > (1u << 20) && start_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(start_));
    start_ = 0;
  }
  return std::move(decoded.envelope);
}

}  // namespace offload
