#include <doctest.h>

#include "offload/live/live_fabric.hpp"
#include "offload/runtime/client.hpp"
#include "offload/runtime/input_store.hpp"
#include "offload/runtime/node.hpp"
#include "offload/runtime/server.hpp"
#include "offload/workloads/gendata.hpp"
#include "offload/workloads/hierfile.hpp"
#include "offload/workloads/run.hpp"

using namespace offload;

namespace {

// A server, two nodes and a client on loopback, all on one io_context.
struct Farm {
  boost::asio::io_context io;
  LiveFabric server_net{io}, n1_net{io}, n2_net{io}, client_net{io};
  std::shared_ptr<MemoryInputStore> inputs = std::make_shared<MemoryInputStore>();
  std::unique_ptr<ServerContainer> server;
  std::unique_ptr<NodeContainer> n1, n2;
  std::unique_ptr<ClientContainer> client;

  Farm() {
    const auto ep = [](std::uint16_t port) { return "127.0.0.1:" + std::to_string(port); };
    const auto s_port = server_net.listen("127.0.0.1:0");
    const auto p1 = n1_net.listen("127.0.0.1:0");
    const auto p2 = n2_net.listen("127.0.0.1:0");

    ServerConfig sc;
    sc.id = NodeId("s1");
    sc.listen = ep(s_port);
    sc.timing.heartbeat_interval = 200'000;
    sc.farm = {{NodeId("n1"), ep(p1)}, {NodeId("n2"), ep(p2)}};
    server = std::make_unique<ServerContainer>(sc, server_net);
    server_net.attach(*server);

    auto make_node = [&](LiveFabric& net, const char* id) {
      NodeConfig nc = node_config_from(sc, NodeId(id));
      nc.charge_compute_time = false;
      net.set_gateway("s1");
      auto node = std::make_unique<NodeContainer>(nc, inputs, net);
      net.attach(*node);
      return node;
    };
    n1 = make_node(n1_net, "n1");
    n2 = make_node(n2_net, "n2");

    ClientConfig cc;
    cc.id = ClientId("c1");
    cc.servers = {{NodeId("s1"), ep(s_port)}};
    cc.timing = sc.timing;
    client_net.set_gateway("s1");
    client = std::make_unique<ClientContainer>(cc, client_net);
    client_net.attach(*client);

    server->start();
    n1->start();
    n2->start();
  }

  template <typename Pred>
  bool run_until(Pred done, std::chrono::milliseconds budget = std::chrono::seconds(10)) {
    const auto deadline = std::chrono::steady_clock::now() + budget;
    while (!done()) {
      if (std::chrono::steady_clock::now() >= deadline) return false;
      io.restart();
      io.run_one_for(std::chrono::milliseconds(20));
    }
    return true;
  }
};

}  // namespace

TEST_CASE("endpoints split at the last colon") {
  CHECK(parse_endpoint("127.0.0.1:80").port == 80);
  CHECK(parse_endpoint("::1:9000").host == "::1");
  CHECK_THROWS_AS(parse_endpoint("nocolon"), std::invalid_argument);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), std::invalid_argument);
}

TEST_CASE("a job runs over loopback TCP") {
  Farm f;
  const Bytes file = write_hier_file(generate_branches(2, 500, 11));
  f.inputs->put("a.hnf", file);

  std::optional<RegisterOutcome> reg;
  f.client->register_with_all([&](const RegisterOutcome& r) { reg = r; });
  REQUIRE(f.run_until([&] { return reg.has_value(); }));
  REQUIRE(reg->any());

  SUBCASE("result comes back on the client's own connection") {
    const JobSpec spec{JobId("j1"), "a.hnf", Hist1DParams{AxisSpec{"b1", 16, 0.0, 1.0}}, DeliveryMode::Auto};
    std::optional<DispatchOutcome> dispatched;
    f.client->submit(spec, [&](const DispatchOutcome& o) { dispatched = o; });
    REQUIRE(f.run_until([&] { return dispatched.has_value(); }));
    CHECK(to_string(dispatched->status).starts_with("Running("));

    REQUIRE(f.run_until([&] {
      const auto* r = f.client->receiver(JobId("j1"));
      return r && !r->inbox.empty();
    }));
    const auto* r = f.client->receiver(JobId("j1"));
    CHECK(r->inbox.size() == 1);
    CHECK(r->inbox[0].data == run_workload(spec, file).data);

    // Completed arrives with the node's LocationUpdate, after the ack.
    REQUIRE(f.run_until([&] { return is_terminal(f.client->receiver(JobId("j1"))->last_known.status); }));
    std::optional<StatusOutcome> st;
    f.client->query_status(JobId("j1"), [&](const StatusOutcome& o) { st = o; });
    REQUIRE(f.run_until([&] { return st.has_value(); }));
    CHECK(st->known);
    CHECK(to_string(st->status) == "Completed");
  }

  SUBCASE("bring-back returns the agent itself") {
    const JobSpec spec{JobId("j2"), "a.hnf", Hist1DParams{AxisSpec{"b0", 4, 0.0, 1.0}}, DeliveryMode::BringBack};
    f.client->submit(spec);
    REQUIRE(f.run_until([&] {
      const auto* r = f.client->receiver(JobId("j2"));
      return r && !r->inbox.empty();
    }));
    CHECK(f.client->receiver(JobId("j2"))->inbox[0].data == run_workload(spec, file).data);
  }

  SUBCASE("missing input fails") {
    std::optional<DispatchOutcome> dispatched;
    f.client->submit(JobSpec{JobId("j3"), "nope", ParseXmlParams{}, DeliveryMode::Auto},
                     [&](const DispatchOutcome& o) { dispatched = o; });
    REQUIRE(f.run_until([&] { return dispatched.has_value(); }));
    std::optional<StatusOutcome> st;
    REQUIRE(f.run_until([&] {
      if (!st || !std::holds_alternative<status::Failed>(st->status)) {
        st.reset();
        f.client->query_status(JobId("j3"), [&](const StatusOutcome& o) { st = o; });
        f.run_until([&] { return st.has_value(); }, std::chrono::seconds(2));
      }
      return st && std::holds_alternative<status::Failed>(st->status);
    }));
    CHECK(to_string(st->status) == "Failed(input_missing)");
  }
}

TEST_CASE("an unreachable server fails registration") {
  boost::asio::io_context io;
  LiveFabric net(io);
  ClientConfig cc;
  cc.id = ClientId("c1");
  cc.timing.heartbeat_interval = 100'000;
  // Port 1 on loopback refuses connections.
  cc.servers = {{NodeId("s1"), "127.0.0.1:1"}};
  ClientContainer client(cc, net);
  net.attach(client);
  std::optional<RegisterOutcome> reg;
  client.register_with_all([&](const RegisterOutcome& r) { reg = r; });
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (!reg && std::chrono::steady_clock::now() < deadline) {
    io.restart();
    io.run_one_for(std::chrono::milliseconds(20));
  }
  REQUIRE(reg.has_value());
  CHECK_FALSE(reg->any());
}
