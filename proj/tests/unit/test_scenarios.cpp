#include <doctest.h>

#include <algorithm>

#include "offload/sim/scenario.hpp"
#include "offload/workloads/run.hpp"

using namespace offload;

namespace {

ScenarioResult run(const std::string& text, std::uint64_t seed = 1) {
  return run_scenario(parse_scenario(text), seed);
}

std::vector<std::string> statuses(const ScenarioResult& r, const std::string& job) {
  std::vector<std::string> out;
  for (const auto& e : r.trace) {
    if (e.type == TraceEvent::Type::Status && e.job == job) out.push_back(e.where + " " + e.detail);
  }
  return out;
}

std::size_t count_kind(const ScenarioResult& r, TraceEvent::Type type, const std::string& kind,
                       const std::string& job) {
  return static_cast<std::size_t>(std::count_if(r.trace.begin(), r.trace.end(), [&](const TraceEvent& e) {
    return e.type == type && e.kind == kind && e.job == job;
  }));
}

std::size_t count_detail(const std::vector<std::string>& lines, const std::string& needle) {
  return static_cast<std::size_t>(
      std::count_if(lines.begin(), lines.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; }));
}

const char* kOneJob = R"(
input /d/a.hnf hier values=2000
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b1 nbins=7 lo=0 hi=1 at_ms=200
)";

}  // namespace

TEST_CASE("one job runs to completion and matches a local run") {
  ScenarioRun sr(parse_scenario(kOneJob), 3);
  const auto r = sr.run();
  CHECK(r.settled);
  const auto& j = r.job("j1");
  CHECK(to_string(j.status) == "Completed");
  CHECK(j.results == 1);

  const auto* rec = sr.client("c1").receiver(JobId("j1"));
  REQUIRE(rec != nullptr);
  REQUIRE(rec->inbox.size() == 1);
  const auto& spec = sr.script().jobs[0].spec;
  const auto input = sr.inputs().get("/d/a.hnf");
  REQUIRE(input);
  CHECK(rec->inbox[0].data == run_workload(spec, *input).data);

  REQUIRE(r.reports.size() == 2);
  CHECK(r.reports[0].scenario == "without_agents");
  CHECK(r.reports[1].scenario == "with_agents");
  CHECK(r.reports[1].phase("display") == 50'000);
  CHECK(r.reports[1].phase("parse") * 2 == r.reports[0].phase("parse"));

  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i - 1].at <= r.trace[i].at);
}

TEST_CASE("runs are reproducible") {
  const auto a = run(kOneJob, 9);
  const auto b = run(kOneJob, 9);
  CHECK(a.trace_text == b.trace_text);
  CHECK(emit_report(a.reports) == emit_report(b.reports));
}

TEST_CASE("lifecycle seen by the trace") {
  const auto r = run(kOneJob);
  const auto s = statuses(r, "j1");
  REQUIRE(s.size() >= 4);
  CHECK(s[0] == "c1 Pending -> Submitted");
  CHECK(count_detail(s, "Submitted -> Migrating") == 1);
  CHECK(count_detail(s, "Migrating -> Running(") == 1);
  CHECK(count_detail(s, "-> Completed") >= 1);
  CHECK(count_kind(r, TraceEvent::Type::Phase, "parse", "j1") == 1);
  CHECK(count_kind(r, TraceEvent::Type::Phase, "display", "j1") == 1);
}

TEST_CASE("bring-back delivery carries the result home") {
  const auto r = run(R"(
input /d/e.xml xml events=4
job j1 client=c1 kind=parsexml input=/d/e.xml delivery=bringback at_ms=200
)");
  CHECK(to_string(r.job("j1").status) == "Completed");
  CHECK(r.job("j1").results == 1);
  CHECK(count_kind(r, TraceEvent::Type::Deliver, "result_transfer", "j1") == 0);
  CHECK(count_kind(r, TraceEvent::Type::Deliver, "migrate_agent", "j1") >= 3);
}

TEST_CASE("missing input fails the job on the node") {
  auto script = parse_scenario(kOneJob);
  script.jobs[0].spec.input_ref = "/d/nope";
  const auto r = run_scenario(script, 1);
  CHECK(to_string(r.job("j1").status) == "Failed(input_missing)");
  CHECK(r.job("j1").results == 0);
}

TEST_CASE("a dead server before submission sends the job to the next one") {
  const auto r = run(R"(
server s1 farm=n1,n2
server s2 farm=n3,n4
node n1
node n2
node n3
node n4
client c1 servers=s1,s2
input /d/a.hnf hier
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=500
kill_server s1 at_ms=300
)");
  CHECK(to_string(r.job("j1").status) == "Completed");
  const auto s = statuses(r, "j1");
  CHECK(count_detail(s, "Running(n3)") + count_detail(s, "Running(n4)") >= 1);
  CHECK(count_detail(s, "all_servers_failed") == 0);
}

TEST_CASE("no live server at all") {
  const auto r = run(R"(
input /d/a.hnf hier
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=500
kill_server s1 at_ms=300
)");
  CHECK(to_string(r.job("j1").status) == "Failed(all_servers_failed)");
}

TEST_CASE("results held while the client is away arrive after reconnect") {
  const auto r = run(R"(
input /d/a.hnf hier values=100000
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200 delivery=auto
link_down c1 from_ms=380 to_ms=6000
)");
  const auto& j = r.job("j1");
  CHECK(to_string(j.status) == "Completed");
  CHECK(j.results == 1);
  REQUIRE(j.reconnects.size() == 1);
  CHECK(j.reconnects[0].known);
  CHECK(to_string(j.reconnects[0].status) == "Completed");
}

TEST_CASE("direct delivery to an absent client fails") {
  const auto r = run(R"(
input /d/a.hnf hier values=100000
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200 delivery=direct
link_down c1 from_ms=380 to_ms=20000
)");
  CHECK(to_string(r.job("j1").status) == "Failed(client_unreachable)");
  CHECK(r.job("j1").results == 0);
}

TEST_CASE("an overloaded first node sends the agent on once") {
  const auto r = run(R"(
server s1 farm=n1,n2,n3,n4
node n1
node n2
node n3
node n4
client c1 servers=s1
input /d/a.hnf hier
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200
load n1 at_ms=0 cpu=0.1
load n2 at_ms=0 cpu=0.6
load n3 at_ms=0 cpu=0.2
load n4 at_ms=0 cpu=0.3
load n1 at_ms=364 cpu=0.95
)");
  const auto s = statuses(r, "j1");
  CHECK(count_detail(s, "-> Relocating(n1,n3)") == 1);
  CHECK(count_detail(s, "-> Relocating") == 1);
  CHECK(count_detail(s, "Relocating(n1,n3) -> Running(n3)") == 1);
  CHECK(to_string(r.job("j1").status) == "Completed");
}

TEST_CASE("an agent stays put when the whole farm is over") {
  const auto r = run(R"(
server s1 farm=n1,n2,n3
node n1
node n2
node n3
client c1 servers=s1
input /d/a.hnf hier
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200
load n1 at_ms=0 cpu=0.7
load n2 at_ms=0 cpu=0.7
load n3 at_ms=0 cpu=0.7
load n1 at_ms=363 cpu=0.95
load n2 at_ms=363 cpu=0.95
load n3 at_ms=363 cpu=0.95
)");
  CHECK(to_string(r.job("j1").status) == "Completed");
  const auto s = statuses(r, "j1");
  CHECK(count_detail(s, "-> Relocating") == 0);
  CHECK(count_detail(s, "Migrating -> Running(n1)") == 1);
}

TEST_CASE("kill while running and after completion") {
  SUBCASE("running") {
    auto script = parse_scenario(R"(
set parse_ns_per_byte 200000
input /d/a.hnf hier
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200
kill_job j1 at_ms=1000
)");
    const auto r = run_scenario(script, 1);
    REQUIRE(r.job("j1").kill.has_value());
    CHECK(r.job("j1").kill->result == KillOutcome::Result::Killed);
    CHECK(to_string(r.job("j1").status) == "Killed");
    CHECK(count_kind(r, TraceEvent::Type::Send, "result_transfer", "j1") == 0);
  }
  SUBCASE("completed") {
    const auto r = run(R"(
input /d/a.hnf hier
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200
kill_job j1 at_ms=3000
)");
    REQUIRE(r.job("j1").kill.has_value());
    CHECK(r.job("j1").kill->result == KillOutcome::Result::AlreadyTerminal);
    CHECK(to_string(r.job("j1").status) == "Completed");
  }
}

TEST_CASE("a node crash fails its job") {
  const auto r = run(R"(
set parse_ns_per_byte 200000
input /d/a.hnf hier
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200
load n2 at_ms=0 cpu=0.7
kill_node n1 at_ms=1000
)");
  CHECK(to_string(r.job("j1").status) == "Failed(node_lost)");
}

TEST_CASE("several jobs and clients share a farm") {
  const auto r = run(R"(
server s1 farm=n1,n2
node n1 capacity=1
node n2 capacity=1
client c1 servers=s1
client c2 servers=s1
input /d/a.hnf hier
input /d/e.xml xml
job j1 client=c1 kind=hist1d input=/d/a.hnf branch=b0 at_ms=200
job j2 client=c2 kind=hist2d input=/d/a.hnf branch=b0,b1 nbins=3,3 lo=0,0 hi=1,1 at_ms=200
job j3 client=c1 kind=parsexml input=/d/e.xml at_ms=210
)");
  for (const char* id : {"j1", "j2", "j3"}) {
    CHECK(to_string(r.job(id).status) == "Completed");
    CHECK(r.job(id).results == 1);
  }
  REQUIRE(r.reports.size() == 6);
  CHECK(r.reports[0].scenario.ends_with(":j1"));
}
