#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace offload {

inline constexpr std::size_t kMaxIdBytes = 64;

/// True for well-formed UTF-8 (no overlongs, no surrogates, max U+10FFFF).
bool is_valid_utf8(std::string_view text);

/// Identifier rule shared by every entity: non-empty, at most 64 bytes,
/// valid UTF-8 and free of control characters.
bool is_valid_id(std::string_view text);

/**
 * Opaque string identifier tagged by the entity it names.
 *
 * Ordering is plain byte-wise lexicographic order, which is what the
 * load balancer uses for tie-breaking.  A default-constructed id is empty
 * and only serves as a "not set" placeholder; every other constructor
 * validates.
 */
template <typename Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {
    if (!is_valid_id(value_)) {
      throw std::invalid_argument("invalid identifier '" + value_ + "'");
    }
  }

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend bool operator==(const Id&, const Id&) = default;
  friend std::strong_ordering operator<=>(const Id& a, const Id& b) {
    return a.value_.compare(b.value_) <=> 0;
  }
  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

 private:
  std::string value_;
};

struct NodeTag {};
struct ClientTag {};
struct AgentTag {};
struct JobTag {};

/// Containers (servers and resource nodes) share one id space.
using NodeId = Id<NodeTag>;
using ClientId = Id<ClientTag>;
using AgentId = Id<AgentTag>;
using JobId = Id<JobTag>;

}  // namespace offload

template <typename Tag>
struct std::hash<offload::Id<Tag>> {
  std::size_t operator()(const offload::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
