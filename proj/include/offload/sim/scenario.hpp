#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "offload/runtime/client.hpp"
#include "offload/runtime/input_store.hpp"
#include "offload/runtime/node.hpp"
#include "offload/runtime/server.hpp"
#include "offload/sim/simulation.hpp"
#include "offload/sim/timing.hpp"
#include "offload/workloads/gendata.hpp"

namespace offload {

class ScriptError : public std::runtime_error {
 public:
  ScriptError(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/**
 * Parsed scenario script.  Times are microseconds here and milliseconds in
 * the text.  The text format, one directive per line, `#` to end of line
 * is a comment:
 *
 *   server <id> farm=<node,...>
 *   node <id> [capacity=N] [speed=X]
 *   client <id> servers=<server,...> [speed=X] [bandwidth=B] [latency_ms=T]
 *   set <key> <value>
 *   input <path> hier [branches=N] [values=N]
 *   input <path> xml [events=N] [drawables=N] [points=N]
 *   job <id> client=<id> kind=hist1d|hist2d|parsexml input=<path>
 *       [branch=B nbins=N lo=X hi=X] [delivery=direct|bringback|auto] [at_ms=T]
 *   load <node> at_ms=T (cpu=X queue=N mem=X | measured)
 *   kill_server <id> at_ms=T
 *   kill_node <id> at_ms=T
 *   link_down <id> from_ms=T to_ms=T
 *   kill_job <job> at_ms=T
 *
 * hist2d takes comma pairs: branch=bx,by nbins=nx,ny lo=xl,yl hi=xh,yh.
 * Without any server, node or client line the topology defaults to one
 * server s1 with nodes n1 and n2 and one client c1.
 */
struct ScenarioScript {
  struct Server {
    NodeId id;
    std::vector<NodeId> farm;
  };
  struct Node {
    NodeId id;
    std::int64_t capacity = 4;
    double speed = 1.0;
  };
  struct Client {
    ClientId id;
    std::vector<NodeId> servers;
    double speed = 2.0;
    LinkParams link{500'000.0, 50'000};
  };
  struct Input {
    std::string path;
    bool xml = false;
    std::int64_t branches = 3;
    std::int64_t values = 1000;
    XmlShape shape{20, 5, 4};
  };
  struct Job {
    JobSpec spec;
    ClientId client;
    Micros at = 0;
  };
  struct Load {
    NodeId node;
    Micros at = 0;
    std::optional<ScriptedLoad> load;  // nullopt: back to measured
  };
  struct Crash {
    std::string target;
    Micros at = 0;
  };
  struct LinkDown {
    std::string target;
    Micros from = 0;
    Micros to = 0;
  };
  struct KillJob {
    JobId job;
    Micros at = 0;
  };

  std::vector<Server> servers;
  std::vector<Node> nodes;
  std::vector<Client> clients;
  std::vector<Input> inputs;
  std::vector<Job> jobs;
  std::vector<Load> loads;
  std::vector<Crash> crashes;
  std::vector<LinkDown> link_downs;
  std::vector<KillJob> kills;

  LoadThresholds thresholds;
  Timing timing;
  std::int64_t max_hops = kDefaultMaxHops;
  LinkParams server_link{10'000'000.0, 5'000};
  CostModel cost;
  Micros display = 50'000;
  Micros horizon = 600'000'000;
  Micros settle = 2'000'000;
};

ScenarioScript parse_scenario(std::string_view text);

struct JobOutcome {
  JobId job;
  ClientId client;
  JobStatus status = status::Pending{};  // the receiver's last known status
  std::size_t results = 0;               // payloads held by the receiver
  std::optional<KillOutcome> kill;
  std::vector<StatusOutcome> reconnects;  // one per reconnect, in order
  JobTimes times;
};

struct ScenarioResult {
  std::vector<TraceEvent> trace;
  std::string trace_text;
  std::vector<TimingReport> reports;
  std::vector<JobOutcome> jobs;
  Micros end = 0;
  bool settled = false;  // false: stopped at the horizon

  const JobOutcome& job(const std::string& id) const;
};

/// One simulation of a script.  Containers stay reachable for inspection
/// after run().
class ScenarioRun {
 public:
  ScenarioRun(ScenarioScript script, std::uint64_t seed);
  ~ScenarioRun();

  /// Kills `job` through its client at `at`, in addition to the script.
  void schedule_kill(const JobId& job, Micros at);
  /// Replaces a generated input before run().
  void replace_input(const std::string& path, Bytes bytes);
  ScenarioResult run();

  Simulation& sim() { return sim_; }
  const ScenarioScript& script() const { return script_; }
  ClientContainer& client(const std::string& id) { return *clients_.at(id); }
  ServerContainer& server(const std::string& id) { return *servers_.at(id); }
  NodeContainer& node(const std::string& id) { return *nodes_.at(id); }
  const MemoryInputStore& inputs() const { return *inputs_; }

 private:
  struct JobState {
    const ScenarioScript::Job* job = nullptr;
    bool submitted = false;
    bool terminal = false;  // latest recorded status is terminal
    JobOutcome outcome;
  };

  void build();
  void submit(JobState& js);
  void observe(const TraceEvent& e);
  bool quiescent() const;
  std::vector<TimingReport> reports() const;

  Simulation sim_;
  ScenarioScript script_;
  std::uint64_t seed_;
  std::shared_ptr<MemoryInputStore> inputs_;
  std::map<std::string, std::unique_ptr<ServerContainer>> servers_;
  std::map<std::string, std::unique_ptr<NodeContainer>> nodes_;
  std::map<std::string, std::unique_ptr<ClientContainer>> clients_;
  std::map<std::string, bool> client_ready_;
  std::map<std::string, std::vector<JobState*>> waiting_;
  std::map<std::string, JobState> jobs_;
  std::vector<std::pair<JobId, Micros>> extra_kills_;
  int outstanding_ = 0;  // harness events and callbacks not yet finished
  bool ran_ = false;
};

inline ScenarioResult run_scenario(const ScenarioScript& script, std::uint64_t seed) {
  return ScenarioRun(script, seed).run();
}

}  // namespace offload
