#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "offload/ids.hpp"
#include "offload/workloads/event_xml.hpp"
#include "offload/workloads/histogram.hpp"

namespace offload {

// ---------------------------------------------------------------------------
// Jobs
// ---------------------------------------------------------------------------

enum class JobKind { Hist1D, Hist2D, ParseEventXml };

std::string_view to_string(JobKind kind);
std::optional<JobKind> parse_job_kind(std::string_view text);

/// One histogram axis: which branch to read and how to bin it.
struct AxisSpec {
  std::string branch;
  std::int64_t nbins = 1;
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const AxisSpec&, const AxisSpec&) = default;
};

struct Hist1DParams {
  AxisSpec axis;
  friend bool operator==(const Hist1DParams&, const Hist1DParams&) = default;
};
struct Hist2DParams {
  AxisSpec x;
  AxisSpec y;
  friend bool operator==(const Hist2DParams&, const Hist2DParams&) = default;
};
struct ParseXmlParams {
  friend bool operator==(const ParseXmlParams&, const ParseXmlParams&) = default;
};

/// Alternative order matches JobKind.
using JobParams = std::variant<Hist1DParams, Hist2DParams, ParseXmlParams>;

enum class DeliveryMode { Direct, BringBack, Auto };

std::string_view to_string(DeliveryMode mode);
std::optional<DeliveryMode> parse_delivery_mode(std::string_view text);

struct JobSpec {
  JobId job_id;
  std::string input_ref;
  JobParams params = ParseXmlParams{};
  DeliveryMode delivery = DeliveryMode::Auto;

  JobKind kind() const { return static_cast<JobKind>(params.index()); }
  friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

/// Every violated invariant, in a stable order; empty means valid.
std::vector<std::string> validate_job_spec(const JobSpec& spec);

// ---------------------------------------------------------------------------
// Lifecycle
// ---------------------------------------------------------------------------

namespace status {
struct Pending {
  friend bool operator==(const Pending&, const Pending&) = default;
};
struct Submitted {
  friend bool operator==(const Submitted&, const Submitted&) = default;
};
struct Migrating {
  friend bool operator==(const Migrating&, const Migrating&) = default;
};
struct Running {
  NodeId node;
  friend bool operator==(const Running&, const Running&) = default;
};
struct Relocating {
  NodeId from;
  NodeId to;
  friend bool operator==(const Relocating&, const Relocating&) = default;
};
struct Completed {
  friend bool operator==(const Completed&, const Completed&) = default;
};
struct Failed {
  std::string reason;
  friend bool operator==(const Failed&, const Failed&) = default;
};
struct Killed {
  friend bool operator==(const Killed&, const Killed&) = default;
};
}  // namespace status

using JobStatus = std::variant<status::Pending, status::Submitted, status::Migrating, status::Running,
                               status::Relocating, status::Completed, status::Failed, status::Killed>;

bool is_terminal(const JobStatus& s);
/// "running", "failed", ... (lower-case state name without arguments).
std::string_view status_name(const JobStatus& s);
/// Human form: "Running(n1)", "Failed(input_missing)", "Pending".
std::string to_string(const JobStatus& s);

namespace lifecycle {
struct Submit {};
struct MigrateStart {};
struct MigrateDone {
  NodeId node;
};
struct Relocate {
  NodeId from;
  NodeId to;
};
struct Complete {};
struct Fail {
  std::string reason;
};
struct Kill {};
}  // namespace lifecycle

using LifecycleEvent = std::variant<lifecycle::Submit, lifecycle::MigrateStart, lifecycle::MigrateDone,
                                    lifecycle::Relocate, lifecycle::Complete, lifecycle::Fail,
                                    lifecycle::Kill>;

std::string to_string(const LifecycleEvent& e);

class IllegalTransition : public std::logic_error {
 public:
  IllegalTransition(const JobStatus& from, const LifecycleEvent& event);
};

/**
 * Successor of `current` under `event`.  Legal edges:
 *
 *   Pending    --submit-->            Submitted
 *   Submitted  --migrate_start-->     Migrating
 *   Migrating  --migrate_done(n)-->   Running(n)
 *   Running(n) --relocate(n,m)-->     Relocating(n,m)
 *   Relocating --migrate_done(k)-->   Running(k)
 *   Running    --complete-->          Completed
 *   Submitted | Migrating | Running --fail(r)--> Failed(r)
 *   any non-terminal --kill-->        Killed
 *
 * Anything else throws IllegalTransition.
 */
JobStatus advance_status(const JobStatus& current, const LifecycleEvent& event);

// ---------------------------------------------------------------------------
// Load
// ---------------------------------------------------------------------------

struct LoadReport {
  NodeId node;
  double cpu_util = 0.0;
  std::int64_t queue_depth = 0;  // jobs hosted (running + waiting)
  std::int64_t capacity = 1;     // max concurrent jobs
  double mem_util = 0.0;
  std::int64_t sampled_at_ms = 0;

  friend bool operator==(const LoadReport&, const LoadReport&) = default;
};

std::vector<std::string> validate_load_report(const LoadReport& report);

enum class LoadStatus { Under, Normal, Over };
std::string_view to_string(LoadStatus s);

struct LoadThresholds {
  double theta_lo = 0.5;
  double theta_hi = 0.8;

  bool valid() const { return 0.0 <= theta_lo && theta_lo < theta_hi && theta_hi <= 1.0; }
  friend bool operator==(const LoadThresholds&, const LoadThresholds&) = default;
};

// ---------------------------------------------------------------------------
// Agents and results
// ---------------------------------------------------------------------------

/// Serializable state of a mobile agent; this is what crosses the wire.
struct AgentSnapshot {
  AgentId agent_id;
  AgentId twin_id;
  ClientId client;
  JobSpec job;
  JobStatus status = status::Pending{};
  std::int64_t hop_count = 0;
  std::string home_endpoint;
  std::vector<NodeId> visited;  // containers hosted in, in order

  friend bool operator==(const AgentSnapshot&, const AgentSnapshot&) = default;
};

std::vector<std::string> validate_snapshot(const AgentSnapshot& snapshot);

/// Alternative order matches JobKind.
using ResultData = std::variant<Histogram1D, Histogram2D, DrawableSummary>;

struct ResultPayload {
  JobId job_id;
  NodeId node;  // producing node
  ResultData data;

  JobKind kind() const { return static_cast<JobKind>(data.index()); }
  friend bool operator==(const ResultPayload&, const ResultPayload&) = default;
};

}  // namespace offload
