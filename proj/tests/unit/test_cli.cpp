#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "offload/cli/commands.hpp"
#include "offload/cli/config.hpp"
#include "offload/workloads/event_xml.hpp"
#include "offload/workloads/hierfile.hpp"

using namespace offload;
using namespace offload::cli;

namespace {

std::string usage(const std::vector<std::string>& args) {
  try {
    parse_args(args);
  } catch (const UsageError& e) {
    return e.what();
  }
  return "<no error>";
}

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected ConfigError for:\n" << text);
  return ConfigError(0, "");
}

std::set<std::string> flags_in(const std::string& help) {
  std::set<std::string> out;
  const std::regex flag("--[a-z][a-z-]*");
  for (auto it = std::sregex_iterator(help.begin(), help.end(), flag); it != std::sregex_iterator(); ++it) {
    out.insert(it->str());
  }
  return out;
}

const char* kMinimal = "id = s1\nlisten = 127.0.0.1:7000\nfarm = n1, 127.0.0.1:7101\n";

}  // namespace

TEST_CASE("submit arguments") {
  const auto cmd = parse_args({"submit", "--server", "a:1", "--kind", "hist1d", "--input", "f", "--branch", "b",
                               "--nbins", "10", "--lo", "0", "--hi", "1"});
  const auto& s = std::get<SubmitCommand>(cmd);
  CHECK(s.servers == std::vector<std::string>{"a:1"});
  CHECK(s.spec.input_ref == "f");
  CHECK(s.spec.delivery == DeliveryMode::Auto);
  CHECK(std::get<Hist1DParams>(s.spec.params).axis == AxisSpec{"b", 10, 0.0, 1.0});

  const auto two = std::get<SubmitCommand>(parse_args({"submit", "--server", "a:1,b:2", "--kind", "hist2d", "--input",
                                                       "f", "--branch", "x,y", "--nbins", "3,4", "--hi", "1,2",
                                                       "--delivery", "bringback"}));
  CHECK(two.servers.size() == 2);
  CHECK(two.spec.delivery == DeliveryMode::BringBack);
  const auto& p = std::get<Hist2DParams>(two.spec.params);
  CHECK(p.x == AxisSpec{"x", 3, 0.0, 1.0});
  CHECK(p.y == AxisSpec{"y", 4, 0.0, 2.0});

  const auto xml = std::get<SubmitCommand>(parse_args({"submit", "--server", "h:9", "--kind", "parsexml", "--input", "e"}));
  CHECK(std::holds_alternative<ParseXmlParams>(xml.spec.params));
}

TEST_CASE("usage errors name the flag") {
  CHECK(usage({"submit"}) == "--server required");
  CHECK(usage({"simulate", "--seed", "x"}) == "seed must be integer");
  CHECK(usage({"simulate", "--seed", "3"}) == "--scenario required");
  CHECK(usage({"submit", "--server", "a:1"}) == "--kind required");
  CHECK(usage({"submit", "--server", "nocolon", "--kind", "hist1d"}).starts_with("--server"));
  CHECK(usage({"submit", "--server", "a:1", "--kind", "pie", "--input", "f"}).starts_with("--kind"));
  CHECK(usage({"submit", "--server", "a:1", "--kind", "hist1d", "--input", "f"}) == "--branch required");
  CHECK(usage({"submit", "--server", "a:1", "--kind", "hist1d", "--input", "f", "--branch", "b", "--nbins", "x"}) ==
        "nbins must be integer");
  CHECK(usage({"submit", "--server", "a:1", "--kind", "hist2d", "--input", "f", "--branch", "b"}).starts_with(
      "--branch takes 2"));
  CHECK(usage({"submit", "--server", "a:1", "--kind", "parsexml", "--input", "f", "--nbins", "3"}).find("parsexml") !=
        std::string::npos);
  CHECK(usage({"submit", "--server", "a:1", "--kind", "hist1d", "--input", "f", "--branch", "b", "--lo", "1",
               "--hi", "0"}) != "<no error>");
  CHECK(usage({"serve", "--config", "c", "--theta-lo", "1.5"}).starts_with("--theta-lo"));
  CHECK(usage({"status"}) == "--job required");
  CHECK(usage({"results", "--job", "j"}) == "--out required");
  CHECK(usage({"gendata", "hier", "--values", "-1"}).starts_with("values"));
  CHECK(usage({"gendata"}) != "<no error>");
  CHECK(usage({}) != "<no error>");
  CHECK(usage({"frobnicate"}) != "<no error>");
}

TEST_CASE("other subcommands") {
  const auto sim = std::get<SimulateCommand>(
      parse_args({"simulate", "--scenario", "s.txt", "--seed", "42", "--out", "r.csv", "--trace", "t.log"}));
  CHECK(sim.scenario == "s.txt");
  CHECK(sim.seed == 42);
  CHECK(sim.trace == std::optional<std::string>("t.log"));

  const auto hier = std::get<GendataHierCommand>(parse_args({"gendata", "hier", "--branches", "2"}));
  CHECK(hier.branches == 2);
  CHECK(hier.values == 1000);

  const auto xml = std::get<GendataXmlCommand>(parse_args({"gendata", "xml", "--points", "7", "--seed", "5"}));
  CHECK(xml.shape.points_per_drawable == 7);
  CHECK(xml.seed == 5);

  const auto node = std::get<NodeCommand>(parse_args({"node", "--config", "c", "--id", "n4"}));
  CHECK(node.id == NodeId("n4"));

  const auto serve = std::get<ServeCommand>(parse_args({"serve", "--config", "c", "--theta-hi", "0.9"}));
  CHECK(serve.theta_hi == std::optional<double>(0.9));
  CHECK_FALSE(serve.theta_lo.has_value());

  CHECK(std::holds_alternative<HelpCommand>(parse_args({"--help"})));
  const auto help = std::get<HelpCommand>(parse_args({"submit", "--help"}));
  CHECK(help.text.find("--delivery") != std::string::npos);
}

TEST_CASE("help lists exactly the documented flags") {
  const std::map<std::string, std::set<std::string>> documented{
      {"serve", {"--config", "--theta-lo", "--theta-hi"}},
      {"node", {"--config", "--id"}},
      {"submit", {"--server", "--kind", "--input", "--branch", "--nbins", "--lo", "--hi", "--delivery"}},
      {"status", {"--job"}},
      {"kill", {"--job"}},
      {"results", {"--job", "--out"}},
      {"simulate", {"--scenario", "--seed", "--out", "--trace", "--theta-lo", "--theta-hi"}},
      {"gendata hier", {"--branches", "--values", "--seed"}},
      {"gendata xml", {"--events", "--drawables", "--points", "--seed"}},
  };
  for (const auto& [sub, flags] : documented) {
    auto shown = flags_in(help_text(sub));
    shown.erase("--help");
    CHECK_MESSAGE(shown == flags, sub);
  }
  CHECK(flags_in(help_text()) == std::set<std::string>{"--help"});
}

TEST_CASE("help states the config defaults") {
  const auto help = help_text("serve");
  const ServerConfig defaults = parse_config(kMinimal);
  auto mentions = [&](const std::string& key, const std::string& value) {
    return help.find(key + " = " + value) != std::string::npos && help.find("(default " + value + ")") != std::string::npos;
  };
  CHECK(mentions("theta_lo", "0.5"));
  CHECK(defaults.thresholds.theta_lo == 0.5);
  CHECK(mentions("theta_hi", "0.8"));
  CHECK(defaults.thresholds.theta_hi == 0.8);
  CHECK(mentions("heartbeat_interval_ms", "1000"));
  CHECK(defaults.timing.heartbeat_interval == 1'000'000);
  CHECK(mentions("heartbeat_miss_limit", "3"));
  CHECK(defaults.timing.heartbeat_miss_limit == 3);
  CHECK(mentions("max_hops", "5"));
  CHECK(defaults.max_hops == 5);
  CHECK(defaults.farm.at(0).capacity == 4);
  CHECK(defaults.farm.at(0).speed_factor == 1.0);
}

TEST_CASE("server config") {
  const auto c = parse_config(R"(# farm s1
id = s1
listen = 0.0.0.0:7000
theta_lo = 0.4
theta_hi = 0.9
heartbeat_interval_ms = 250
heartbeat_miss_limit = 4
max_hops = 6
farm = n1, 10.0.0.1:7101, 8, 1.5
farm = n2, 10.0.0.2:7101
)");
  CHECK(c.id == NodeId("s1"));
  CHECK(c.listen == "0.0.0.0:7000");
  CHECK(c.thresholds == LoadThresholds{0.4, 0.9});
  CHECK(c.timing.heartbeat_interval == 250'000);
  CHECK(c.timing.heartbeat_miss_limit == 4);
  CHECK(c.max_hops == 6);
  REQUIRE(c.farm.size() == 2);
  CHECK(c.farm[0].capacity == 8);
  CHECK(c.farm[0].speed_factor == 1.5);
  CHECK(c.farm[1].endpoint == "10.0.0.2:7101");

  const auto n = node_config_from(c, NodeId("n2"));
  CHECK(n.server == NodeId("s1"));
  CHECK(n.listen == "10.0.0.2:7101");
  CHECK(n.peers.size() == 2);
}

TEST_CASE("config errors") {
  const auto theta = config_error(std::string(kMinimal) + "theta_lo = 0.9\ntheta_hi = 0.8\n");
  CHECK(theta.detail() == "theta_lo < theta_hi");
  CHECK(theta.line() == 5);

  const auto unknown = config_error(std::string(kMinimal) + "colour = blue\n");
  CHECK(unknown.detail().find("colour") != std::string::npos);
  CHECK(unknown.line() == 4);

  CHECK(config_error("listen = a:1\nfarm = n1, a:2\n").detail().find("id") != std::string::npos);
  CHECK(config_error("id = s1\nfarm = n1, a:2\n").detail().find("listen") != std::string::npos);
  CHECK(config_error(std::string(kMinimal) + "id = s2\n").line() == 4);
  CHECK(config_error(std::string(kMinimal) + "max_hops = 2\n").line() == 4);
  CHECK(config_error(std::string(kMinimal) + "farm = n1, a:9\n").line() == 4);
  CHECK(config_error(std::string(kMinimal) + "farm = n2\n").line() == 4);
  CHECK(config_error(std::string(kMinimal) + "farm = n2, a:9, 0\n").line() == 4);
  CHECK(config_error(std::string(kMinimal) + "heartbeat_miss_limit = x\n").line() == 4);
  CHECK(config_error(std::string(kMinimal) + "no equals sign\n").line() == 4);
  CHECK_THROWS_AS(load_config("/nonexistent/offload.conf"), ConfigError);
}

TEST_CASE("commands run end to end without the network") {
  std::ostringstream out, err;
  SUBCASE("gendata hier writes a readable file") {
    CHECK(run_command(parse_args({"gendata", "hier", "--branches", "2", "--values", "30"}), out, err) == kOk);
    const std::string s = out.str();
    const auto file = read_hier_file(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    REQUIRE(file.branches.size() == 2);
    CHECK(file.branches[1].name == "b1");
    CHECK(file.branches[1].values.size() == 30);
  }
  SUBCASE("gendata xml parses") {
    CHECK(run_command(parse_args({"gendata", "xml", "--events", "3", "--drawables", "2", "--points", "1"}), out,
                      err) == kOk);
    std::istringstream in(out.str());
    CHECK(parse_event_stream(in).events == 3);
  }
  SUBCASE("simulate writes the report and trace") {
    const auto dir = std::filesystem::temp_directory_path() / "offload_test_cli";
    std::filesystem::create_directories(dir);
    const auto script = dir / "s.txt";
    std::ofstream(script) << "input f hier\njob j client=c1 kind=hist1d input=f branch=b0\n";
    const auto csv = dir / "r.csv";
    const auto trace = dir / "t.log";
    CHECK(run_command(parse_args({"simulate", "--scenario", script.string(), "--seed", "1", "--out", csv.string(),
                                  "--trace", trace.string()}),
                      out, err) == kOk);
    CHECK(out.str() == "j Completed results=1\n");
    CHECK(std::filesystem::file_size(csv) > 0);
    CHECK(std::filesystem::file_size(trace) > 0);

    std::ofstream(script) << "input f hier\nbogus line\n";
    CHECK(run_command(parse_args({"simulate", "--scenario", script.string(), "--seed", "1", "--out", csv.string()}),
                      out, err) == kUsage);
    CHECK(err.str().find("line 2") != std::string::npos);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("a bad config stops serve before it listens") {
    CHECK(run_command(ServeCommand{"/nonexistent/offload.conf", {}, {}}, out, err) == kUsage);
  }
}
