#include <doctest.h>

#include <random>

#include "offload/model.hpp"

using namespace offload;

namespace {

NodeId n(const char* s) { return NodeId(s); }

std::vector<JobStatus> sample_statuses() {
  return {status::Pending{},   status::Submitted{},        status::Migrating{},
          status::Running{n("n1")}, status::Relocating{n("n1"), n("n2")}, status::Completed{},
          status::Failed{"boom"},   status::Killed{}};
}

std::vector<LifecycleEvent> sample_events() {
  return {lifecycle::Submit{},          lifecycle::MigrateStart{}, lifecycle::MigrateDone{n("n3")},
          lifecycle::Relocate{n("n1"), n("n2")}, lifecycle::Complete{},     lifecycle::Fail{"r"},
          lifecycle::Kill{}};
}

// Expected successor, written out by hand; "" marks an illegal pair.
const char* kTable[8][7] = {
    // submit      migrate_start  migrate_done   relocate            complete     fail         kill
    {"Submitted", "",           "",            "",                 "",          "",          "Killed"},  // Pending
    {"",          "Migrating",  "",            "",                 "",          "Failed(r)", "Killed"},  // Submitted
    {"",          "",           "Running(n3)", "",                 "",          "Failed(r)", "Killed"},  // Migrating
    {"",          "",           "",            "Relocating(n1,n2)", "Completed", "Failed(r)", "Killed"},  // Running(n1)
    {"",          "",           "Running(n3)", "",                 "",          "",          "Killed"},  // Relocating
    {"",          "",           "",            "",                 "",          "",          ""},        // Completed
    {"",          "",           "",            "",                 "",          "",          ""},        // Failed
    {"",          "",           "",            "",                 "",          "",          ""},        // Killed
};

}  // namespace

TEST_CASE("identifiers") {
  CHECK(is_valid_id("n1"));
  CHECK(is_valid_id(std::string(64, 'a')));
  CHECK_FALSE(is_valid_id(std::string(65, 'a')));
  CHECK_FALSE(is_valid_id(""));
  CHECK_FALSE(is_valid_id("a\nb"));
  CHECK_FALSE(is_valid_id("\x7f"));
  CHECK(is_valid_id("n\xc3\xa9"));
  CHECK_FALSE(is_valid_id("\xc3"));
  CHECK_FALSE(is_valid_id("\xc0\x80"));          // overlong
  CHECK_FALSE(is_valid_id("\xed\xa0\x80"));      // surrogate
  CHECK_FALSE(is_valid_id("\xf4\x90\x80\x80"));  // > U+10FFFF
  CHECK_THROWS_AS(NodeId(""), std::invalid_argument);
  CHECK(NodeId("a") < NodeId("b"));
  CHECK(NodeId("Z") < NodeId("a"));
  CHECK(NodeId("n10") < NodeId("n2"));
}

TEST_CASE("transition table is exhaustive") {
  const auto statuses = sample_statuses();
  const auto events = sample_events();
  for (std::size_t s = 0; s < statuses.size(); ++s) {
    for (std::size_t e = 0; e < events.size(); ++e) {
      CAPTURE(s);
      CAPTURE(e);
      const std::string expected = kTable[s][e];
      if (expected.empty()) {
        CHECK_THROWS_AS(advance_status(statuses[s], events[e]), IllegalTransition);
      } else {
        CHECK(to_string(advance_status(statuses[s], events[e])) == expected);
      }
    }
  }
}

TEST_CASE("relocate needs the current node and a different target") {
  const JobStatus running = status::Running{n("n1")};
  CHECK_THROWS_AS(advance_status(running, lifecycle::Relocate{n("n2"), n("n3")}), IllegalTransition);
  CHECK_THROWS_AS(advance_status(running, lifecycle::Relocate{n("n1"), n("n1")}), IllegalTransition);
}

TEST_CASE("random walks never leave a terminal state") {
  std::mt19937_64 rng(7);
  const auto events = sample_events();
  for (int walk = 0; walk < 500; ++walk) {
    JobStatus s = status::Pending{};
    bool terminal = false;
    for (int step = 0; step < 20; ++step) {
      const auto& e = events[rng() % events.size()];
      try {
        s = advance_status(s, e);
        CHECK_FALSE(terminal);
      } catch (const IllegalTransition&) {
      }
      terminal = is_terminal(s);
    }
  }
}

TEST_CASE("status names") {
  CHECK(status_name(JobStatus{status::Running{n("n1")}}) == "running");
  CHECK(to_string(JobStatus{status::Failed{"input_missing"}}) == "Failed(input_missing)");
  CHECK(is_terminal(JobStatus{status::Killed{}}));
  CHECK_FALSE(is_terminal(JobStatus{status::Relocating{n("a"), n("b")}}));
}

TEST_CASE("job spec validation") {
  JobSpec spec{JobId("j1"), "in.hnf", Hist1DParams{{"b0", 10, 0.0, 1.0}}, DeliveryMode::Auto};
  CHECK(validate_job_spec(spec).empty());

  spec.params = Hist1DParams{{"", 0, 1.0, 1.0}};
  const auto v = validate_job_spec(spec);
  CHECK(std::find(v.begin(), v.end(), "nbins >= 1") != v.end());
  CHECK(std::find(v.begin(), v.end(), "lo < hi") != v.end());
  CHECK(std::find(v.begin(), v.end(), "branch non-empty") != v.end());

  spec.params = Hist2DParams{{"x", 4, 0, 1}, {"y", 4, 0, std::numeric_limits<double>::quiet_NaN()}};
  const auto v2 = validate_job_spec(spec);
  CHECK(std::find(v2.begin(), v2.end(), "y: lo, hi finite") != v2.end());

  spec.input_ref.clear();
  spec.params = ParseXmlParams{};
  const auto v3 = validate_job_spec(spec);
  CHECK(v3 == std::vector<std::string>{"input_ref non-empty"});
}

TEST_CASE("kind and delivery names round trip") {
  for (auto k : {JobKind::Hist1D, JobKind::Hist2D, JobKind::ParseEventXml}) {
    CHECK(parse_job_kind(to_string(k)) == k);
  }
  for (auto d : {DeliveryMode::Direct, DeliveryMode::BringBack, DeliveryMode::Auto}) {
    CHECK(parse_delivery_mode(to_string(d)) == d);
  }
  CHECK_FALSE(parse_job_kind("hist3d").has_value());
  CHECK_FALSE(parse_delivery_mode("").has_value());
}

TEST_CASE("load report and snapshot validation") {
  LoadReport r{n("n1"), 0.5, 2, 4, 0.1, 0};
  CHECK(validate_load_report(r).empty());
  r.cpu_util = 1.5;
  r.capacity = 0;
  CHECK(validate_load_report(r).size() == 2);

  AgentSnapshot s;
  s.agent_id = AgentId("a1");
  s.twin_id = AgentId("a1");
  s.client = ClientId("c1");
  s.job = JobSpec{JobId("j"), "x.xml", ParseXmlParams{}, DeliveryMode::Direct};
  s.hop_count = 1;
  const auto v = validate_snapshot(s);
  CHECK(std::find(v.begin(), v.end(), "agent_id != twin_id") != v.end());
  CHECK(std::find(v.begin(), v.end(), "hop_count == length(visited)") != v.end());
}
