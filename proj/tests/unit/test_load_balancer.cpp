#include <doctest.h>

#include <random>

#include "offload/load_balancer.hpp"

using namespace offload;

namespace {

LoadReport report(const char* node, double cpu, std::int64_t queue, std::int64_t capacity, double mem) {
  return LoadReport{NodeId(node), cpu, queue, capacity, mem, 0};
}

}  // namespace

TEST_CASE("load index is the worst of the three ratios") {
  CHECK(load_index(report("n", 0.2, 0, 4, 0.1)) == 0.2);
  CHECK(load_index(report("n", 0.2, 3, 4, 0.1)) == 0.75);
  CHECK(load_index(report("n", 0.2, 9, 4, 0.1)) == 1.0);
  CHECK(load_index(report("n", 0.2, 0, 4, 0.9)) == 0.9);
}

TEST_CASE("classification boundaries are inclusive") {
  const LoadThresholds t{0.5, 0.8};
  CHECK(classify_index(0.5, t) == LoadStatus::Under);
  CHECK(classify_index(0.50001, t) == LoadStatus::Normal);
  CHECK(classify_index(0.79999, t) == LoadStatus::Normal);
  CHECK(classify_index(0.8, t) == LoadStatus::Over);
  CHECK(classify_index(0.0, t) == LoadStatus::Under);
  CHECK(classify_index(1.0, t) == LoadStatus::Over);
}

TEST_CASE("under beats a lower-index normal node") {
  const LoadThresholds t{0.3, 0.8};
  // n1 Under at 0.3; n2 Normal at 0.31.  Under always wins, regardless of order.
  auto farm = make_farm_view(NodeId("s1"), {report("n2", 0.31, 0, 4, 0), report("n1", 0.3, 0, 4, 0)}, t, 0);
  CHECK(select_target(farm, {}, t) == NodeId("n1"));
}

TEST_CASE("smallest index wins, ties go to the smallest id") {
  const LoadThresholds t{0.5, 0.8};
  auto farm = make_farm_view(
      NodeId("s1"), {report("n3", 0.1, 0, 4, 0), report("n2", 0.1, 0, 4, 0), report("n1", 0.2, 0, 4, 0)}, t, 0);
  CHECK(select_target(farm, {}, t) == NodeId("n2"));
  CHECK(select_target(farm, {NodeId("n2")}, t) == NodeId("n3"));
  CHECK(select_target(farm, {NodeId("n2"), NodeId("n3")}, t) == NodeId("n1"));
}

TEST_CASE("normal nodes are used when nothing is under") {
  const LoadThresholds t{0.2, 0.8};
  auto farm = make_farm_view(NodeId("s1"), {report("a", 0.7, 0, 4, 0), report("b", 0.6, 0, 4, 0)}, t, 0);
  CHECK(select_target(farm, {}, t) == NodeId("b"));
}

TEST_CASE("over nodes are never chosen") {
  const LoadThresholds t{0.5, 0.8};
  auto farm = make_farm_view(NodeId("s1"), {report("a", 0.8, 0, 4, 0), report("b", 0.1, 4, 4, 0)}, t, 0);
  CHECK_FALSE(find_target(farm, {}, t).has_value());
  CHECK_THROWS_AS(select_target(farm, {}, t), NoTargetAvailable);
  FarmView empty{NodeId("s1"), {}, 0};
  CHECK_THROWS_AS(select_target(empty, {}, t), NoTargetAvailable);
}

TEST_CASE("selection ignores the cached status and is order independent") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const LoadThresholds t{0.5, 0.8};
    std::vector<LoadReport> reports;
    for (int i = 0; i < 6; ++i) {
      reports.push_back(report(("n" + std::to_string(i)).c_str(), static_cast<double>(rng() % 10) / 10.0, 0, 4, 0));
    }
    auto view = make_farm_view(NodeId("s"), reports, t, 0);
    const auto first = find_target(view, {}, t);
    std::shuffle(view.members.begin(), view.members.end(), rng);
    for (auto& m : view.members) m.status = LoadStatus::Over;
    CHECK(find_target(view, {}, t) == first);
  }
}
