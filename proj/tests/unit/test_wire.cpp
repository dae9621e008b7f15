#include <doctest.h>

#include <cmath>
#include <limits>

#include "../support/random_messages.hpp"
#include "offload/wire.hpp"

using namespace offload;
using offload::testing::MessageGen;

namespace {

Bytes frame_of(const std::string& payload) {
  const auto n = payload.size();
  Bytes b{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
          static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

WireError::Code decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_frame(bytes);
  } catch (const WireError& e) {
    return e.code();
  }
  FAIL("expected a WireError");
  return WireError::Code::InvalidEnvelope;
}

WireError::Code payload_error(const std::string& payload) { return decode_error(frame_of(payload)); }

const std::string kGood =
    R"({"msg_id":1,"sender":"c1","recipient":"s1","kind":"kill","body":{"job_id":"j1"}})";

}  // namespace

TEST_CASE("every kind round-trips") {
  MessageGen gen(2024);
  for (std::size_t kind = 0; kind < kMessageKinds; ++kind) {
    for (int i = 0; i < 100; ++i) {
      const Envelope env = gen.envelope(kind);
      const Bytes bytes = encode_frame(env);
      const auto decoded = decode_frame(bytes);
      CHECK(decoded.consumed == bytes.size());
      CHECK(decoded.envelope == env);
      CHECK(decoded.envelope.kind() == kind_name(kind));
    }
  }
}

TEST_CASE("kind names") {
  CHECK(kMessageKinds == 18);
  CHECK(kind_name(0) == "register_client");
  CHECK(kind_name(5) == "migrate_ack");
  CHECK(kind_name(17) == "protocol_error");
}

TEST_CASE("prefix is the big-endian payload length") {
  MessageGen gen(1);
  const Envelope env = gen.envelope(13);
  const Bytes bytes = encode_frame(env);
  const std::string payload = encode_payload(env);
  CHECK(bytes == frame_of(payload));
}

TEST_CASE("trailing bytes are left alone") {
  Bytes bytes = frame_of(kGood);
  const auto size = bytes.size();
  bytes.push_back(0xAB);
  bytes.push_back(0xCD);
  CHECK(decode_frame(bytes).consumed == size);
}

TEST_CASE("every truncation is reported as Truncated") {
  MessageGen gen(9);
  for (std::size_t kind = 0; kind < kMessageKinds; ++kind) {
    const Bytes bytes = encode_frame(gen.envelope(kind));
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
      CHECK(decode_error(std::span(bytes.data(), cut)) == WireError::Code::Truncated);
    }
  }
}

TEST_CASE("oversize prefix is rejected before reading the payload") {
  Bytes b{0x01, 0x00, 0x00, 0x01};  // 16 MiB + 1
  CHECK(decode_error(b) == WireError::Code::OversizePayload);
  b = {0xFF, 0xFF, 0xFF, 0xFF, '{'};
  CHECK(decode_error(b) == WireError::Code::OversizePayload);
  b = {0x01, 0x00, 0x00, 0x00};  // exactly 16 MiB, but absent
  CHECK(decode_error(b) == WireError::Code::Truncated);
}

TEST_CASE("oversize messages cannot be encoded") {
  Envelope env{1, "a", "b", msg::ProtocolError{"big", std::string(kMaxPayloadBytes, 'x')}};
  try {
    encode_frame(env);
    FAIL("expected OversizePayload");
  } catch (const WireError& e) {
    CHECK(e.code() == WireError::Code::OversizePayload);
  }
}

TEST_CASE("malformed payloads") {
  CHECK(decode_frame(frame_of(kGood)).envelope.kind() == "kill");
  CHECK(payload_error("not json") == WireError::Code::MalformedPayload);
  CHECK(payload_error("[1,2]") == WireError::Code::MalformedPayload);
  CHECK(payload_error("") == WireError::Code::MalformedPayload);
  // unknown kind
  CHECK(payload_error(R"({"msg_id":1,"sender":"c1","recipient":"s1","kind":"nope","body":{}})") ==
        WireError::Code::MalformedPayload);
  // missing and extra keys
  CHECK(payload_error(R"({"msg_id":1,"sender":"c1","recipient":"s1","kind":"kill","body":{}})") ==
        WireError::Code::MalformedPayload);
  CHECK(payload_error(R"({"msg_id":1,"sender":"c1","recipient":"s1","kind":"kill","body":{"job_id":"j","x":1}})") ==
        WireError::Code::MalformedPayload);
  CHECK(payload_error(R"({"msg_id":1,"sender":"c1","recipient":"s1","kind":"kill","body":{"job_id":"j"},"y":0})") ==
        WireError::Code::MalformedPayload);
  // wrong types, bad ids
  CHECK(payload_error(R"({"msg_id":-1,"sender":"c1","recipient":"s1","kind":"kill","body":{"job_id":"j"}})") ==
        WireError::Code::MalformedPayload);
  CHECK(payload_error(R"({"msg_id":1,"sender":"","recipient":"s1","kind":"kill","body":{"job_id":"j"}})") ==
        WireError::Code::MalformedPayload);
  CHECK(payload_error(R"({"msg_id":1,"sender":"c1","recipient":"s1","kind":"kill","body":{"job_id":7}})") ==
        WireError::Code::MalformedPayload);
  // invalid UTF-8 inside a string
  CHECK(payload_error("{\"msg_id\":1,\"sender\":\"c\xff\",\"recipient\":\"s1\",\"kind\":\"kill\",\"body\":{\"job_id\":\"j\"}}") ==
        WireError::Code::MalformedPayload);
}

TEST_CASE("non-finite reals and bad text are refused at encode time") {
  LoadReport r{NodeId("n1"), std::numeric_limits<double>::quiet_NaN(), 0, 1, 0.0, 0};
  Envelope env{1, "n1", "s1", msg::LoadReply{r}};
  try {
    encode_frame(env);
    FAIL("expected InvalidEnvelope");
  } catch (const WireError& e) {
    CHECK(e.code() == WireError::Code::InvalidEnvelope);
  }
  Envelope bad_text{1, "n1", "s1", msg::ProtocolError{"x", "\xff"}};
  CHECK_THROWS_AS(encode_frame(bad_text), WireError);
  Envelope bad_sender{1, "", "s1", msg::Kill{JobId("j")}};
  CHECK_THROWS_AS(encode_frame(bad_sender), WireError);
}

TEST_CASE("random garbage only ever raises WireError") {
  std::mt19937_64 rng(5);
  MessageGen gen(6);
  for (int i = 0; i < 2000; ++i) {
    Bytes bytes = encode_frame(gen.envelope(rng() % kMessageKinds));
    const auto flips = 1 + rng() % 4;
    for (std::uint64_t f = 0; f < flips; ++f) bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    try {
      decode_frame(bytes);
    } catch (const WireError&) {
    }
  }
}

TEST_CASE("frame reader reassembles a stream fed byte by byte") {
  MessageGen gen(3);
  std::vector<Envelope> sent;
  Bytes stream;
  for (std::size_t k = 0; k < kMessageKinds; ++k) {
    sent.push_back(gen.envelope(k));
    const auto b = encode_frame(sent.back());
    stream.insert(stream.end(), b.begin(), b.end());
  }
  FrameReader reader;
  std::vector<Envelope> got;
  for (auto byte : stream) {
    reader.feed(std::span(&byte, 1));
    while (auto env = reader.next()) got.push_back(std::move(*env));
  }
  CHECK(got == sent);
  CHECK(reader.buffered() == 0);
}

TEST_CASE("frame reader rejects an oversize prefix") {
  FrameReader reader;
  const Bytes b{0x7F, 0, 0, 0};
  reader.feed(b);
  CHECK_THROWS_AS(reader.next(), WireError);
}
