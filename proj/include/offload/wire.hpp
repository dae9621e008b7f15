#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "offload/model.hpp"

namespace offload {

using Bytes = std::vector<std::uint8_t>;

namespace msg {

struct RegisterClient {
  ClientId client;
  std::string endpoint;
  friend bool operator==(const RegisterClient&, const RegisterClient&) = default;
};
struct RegisterAck {
  NodeId server;
  bool accepted = false;
  friend bool operator==(const RegisterAck&, const RegisterAck&) = default;
};
struct SubmitJob {
  JobSpec spec;
  friend bool operator==(const SubmitJob&, const SubmitJob&) = default;
};
struct SubmitAck {
  JobId job_id;
  bool accepted = false;
  friend bool operator==(const SubmitAck&, const SubmitAck&) = default;
};
/// `payload` is set only when an agent carries a finished result (parking
/// at a server, or travelling home to its client).
struct MigrateAgent {
  AgentSnapshot snapshot;
  std::optional<ResultPayload> payload;
  friend bool operator==(const MigrateAgent&, const MigrateAgent&) = default;
};
/// `agent_id` correlates the ack with its migration; `node` names the
/// placement target when a server accepts.
struct MigrateAck {
  AgentId agent_id;
  bool accepted = false;
  std::string reason;
  std::optional<NodeId> node;
  friend bool operator==(const MigrateAck&, const MigrateAck&) = default;
};
struct LoadQuery {
  NodeId node;
  friend bool operator==(const LoadQuery&, const LoadQuery&) = default;
};
struct LoadReply {
  LoadReport report;
  friend bool operator==(const LoadReply&, const LoadReply&) = default;
};
struct StatusQuery {
  JobId job_id;
  friend bool operator==(const StatusQuery&, const StatusQuery&) = default;
};
struct StatusReport {
  JobId job_id;
  JobStatus status;
  std::optional<NodeId> node;
  friend bool operator==(const StatusReport&, const StatusReport&) = default;
};
struct Kill {
  JobId job_id;
  friend bool operator==(const Kill&, const Kill&) = default;
};
struct KillAck {
  JobId job_id;
  bool was_running = false;
  friend bool operator==(const KillAck&, const KillAck&) = default;
};
struct LocationUpdate {
  AgentId agent_id;
  NodeId node;
  JobStatus status;
  friend bool operator==(const LocationUpdate&, const LocationUpdate&) = default;
};
struct ResultTransfer {
  ResultPayload payload;
  friend bool operator==(const ResultTransfer&, const ResultTransfer&) = default;
};
struct ResultAck {
  JobId job_id;
  friend bool operator==(const ResultAck&, const ResultAck&) = default;
};
struct Heartbeat {
  std::string from;
  friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};
struct HeartbeatAck {
  std::string from;
  friend bool operator==(const HeartbeatAck&, const HeartbeatAck&) = default;
};
/// Job-scoped errors carry the job id in `detail`.
struct ProtocolError {
  std::string code;
  std::string detail;
  friend bool operator==(const ProtocolError&, const ProtocolError&) = default;
};

}  // namespace msg

/// Alternative order matches the kind table in wire.cpp.
using MessageBody =
    std::variant<msg::RegisterClient, msg::RegisterAck, msg::SubmitJob, msg::SubmitAck, msg::MigrateAgent,
                 msg::MigrateAck, msg::LoadQuery, msg::LoadReply, msg::StatusQuery, msg::StatusReport,
                 msg::Kill, msg::KillAck, msg::LocationUpdate, msg::ResultTransfer, msg::ResultAck,
                 msg::Heartbeat, msg::HeartbeatAck, msg::ProtocolError>;

inline constexpr std::size_t kMessageKinds = std::variant_size_v<MessageBody>;

/// Wire kind string, e.g. "register_client".
std::string_view kind_name(const MessageBody& body);
std::string_view kind_name(std::size_t index);

/// Job a message concerns, when it names one.
std::optional<JobId> job_of(const MessageBody& body);

struct Envelope {
  std::uint64_t msg_id = 0;
  std::string sender;
  std::string recipient;
  MessageBody body;

  std::string_view kind() const { return kind_name(body); }
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

inline constexpr std::size_t kMaxPayloadBytes = std::size_t{16} << 20;

class WireError : public std::runtime_error {
 public:
  enum class Code { Truncated, MalformedPayload, OversizePayload, InvalidEnvelope };

  WireError(Code code, const std::string& detail);
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// [u32 big-endian payload length][UTF-8 JSON object with keys
/// msg_id, sender, recipient, kind, body].
Bytes encode_frame(const Envelope& env);

struct DecodedFrame {
  Envelope envelope;
  std::size_t consumed = 0;  // 4 + payload length; trailing bytes untouched
};

DecodedFrame decode_frame(std::span<const std::uint8_t> bytes);

/// The JSON payload alone, without the length prefix.
std::string encode_payload(const Envelope& env);
Envelope decode_payload(std::string_view text);

/// Reassembles frames from a byte stream arriving in arbitrary pieces.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete envelope, or nullopt when more bytes are needed.
  /// Throws WireError on a malformed or oversize frame.
  std::optional<Envelope> next();
  std::size_t buffered() const noexcept { return buf_.size() - start_; }

 private:
  Bytes buf_;
  std::size_t start_ = 0;
};

// JSON forms of domain values, shared by the wire codec, result files and
// client session files.  Decoders are strict: missing or unexpected keys
// throw WireError(MalformedPayload).
namespace codec {
nlohmann::json to_json(const JobSpec& spec);
JobSpec job_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const JobStatus& status);
JobStatus job_status_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LoadReport& report);
LoadReport load_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AgentSnapshot& snapshot);
AgentSnapshot snapshot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResultPayload& payload);
ResultPayload result_from_json(const nlohmann::json& j);
}  // namespace codec

}  // namespace offload
