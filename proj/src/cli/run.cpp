#include <cstdlib>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "offload/cli/commands.hpp"
#include "offload/cli/config.hpp"
#include "offload/detail/overloaded.hpp"
#include "offload/live/live_fabric.hpp"
#include "offload/runtime/client.hpp"
#include "offload/runtime/node.hpp"
#include "offload/runtime/server.hpp"
#include "offload/sim/scenario.hpp"

namespace offload::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr Micros kResultWait = 60'000'000;

std::string random_id(const std::string& prefix) {
  std::random_device rd;
  std::ostringstream s;
  s << prefix << std::hex << rd() << rd();
  return s.str();
}

fs::path state_dir() {
  const char* env = std::getenv("OFFLOAD_STATE_DIR");
  return env && *env ? fs::path(env) : fs::path(".offload");
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

ClientId client_identity() {
  const fs::path dir = state_dir();
  fs::create_directories(dir);
  const fs::path file = dir / "client.json";
  if (fs::exists(file)) return ClientId(json::parse(read_text(file)).at("client").get<std::string>());
  ClientId id(random_id("c-"));
  write_text(file, json{{"client", id.str()}}.dump());
  return id;
}

/// What `submit` leaves behind so later invocations can find the job.
struct Session {
  ClientId client;
  std::vector<ServerRef> servers;
  ReceiverAgent receiver;
  AgentSnapshot mobile;
  std::optional<NodeId> dispatch_server;
  std::optional<NodeId> placed_node;
  std::optional<ResultPayload> result;
};

fs::path session_path(const JobId& job) { return state_dir() / (job.str() + ".json"); }

json opt_id(const std::optional<NodeId>& id) { return id ? json(id->str()) : json(nullptr); }
std::optional<NodeId> id_opt(const json& j) {
  return j.is_null() ? std::nullopt : std::optional<NodeId>(NodeId(j.get<std::string>()));
}

void save(const Session& s) {
  json servers = json::array();
  for (const auto& r : s.servers) servers.push_back({{"id", r.id.str()}, {"endpoint", r.endpoint}});
  json j{{"client", s.client.str()},
         {"servers", servers},
         {"receiver",
          {{"agent_id", s.receiver.agent_id.str()},
           {"twin_id", s.receiver.twin_id.str()},
           {"node", opt_id(s.receiver.last_known.node)},
           {"status", codec::to_json(s.receiver.last_known.status)}}},
         {"mobile", codec::to_json(s.mobile)},
         {"dispatch_server", opt_id(s.dispatch_server)},
         {"placed_node", opt_id(s.placed_node)},
         {"result", s.result ? codec::to_json(*s.result) : json(nullptr)}};
  fs::create_directories(state_dir());
  write_text(session_path(s.receiver.job_id), j.dump(2));
}

std::optional<Session> load(const JobId& job) {
  const fs::path p = session_path(job);
  if (!fs::exists(p)) return std::nullopt;
  const json j = json::parse(read_text(p));
  Session s;
  s.client = ClientId(j.at("client").get<std::string>());
  for (const auto& r : j.at("servers")) {
    s.servers.push_back({NodeId(r.at("id").get<std::string>()), r.at("endpoint").get<std::string>()});
  }
  const auto& rj = j.at("receiver");
  s.mobile = codec::snapshot_from_json(j.at("mobile"));
  s.receiver.agent_id = AgentId(rj.at("agent_id").get<std::string>());
  s.receiver.twin_id = AgentId(rj.at("twin_id").get<std::string>());
  s.receiver.job_id = job;
  s.receiver.last_known.node = id_opt(rj.at("node"));
  s.receiver.last_known.status = codec::job_status_from_json(rj.at("status"));
  for (const auto& r : s.servers) s.receiver.servers.push_back(r.id);
  s.dispatch_server = id_opt(j.at("dispatch_server"));
  s.placed_node = id_opt(j.at("placed_node"));
  if (!j.at("result").is_null()) s.result = codec::result_from_json(j.at("result"));
  return s;
}

/// Client side of a live run: one fabric, no listening socket.
class LiveClient {
 public:
  LiveClient() : fabric_(io_) {}

  /// Asks each endpoint in turn for its server id.  Unanswered endpoints
  /// are left out.
  std::vector<ServerRef> probe(const ClientId& client, const std::vector<std::string>& endpoints) {
    Probe p(client.str() + ".probe");
    fabric_.attach(p);
    std::vector<ServerRef> out;
    std::uint64_t msg_id = 0;
    for (const auto& endpoint : endpoints) {
      p.answer.reset();
      p.failed = false;
      fabric_.learn_endpoint(endpoint, endpoint);
      fabric_.send(p.id(), endpoint, Envelope{++msg_id, p.id(), endpoint, msg::RegisterClient{ClientId(p.id()), ""}});
      run_until(Timing{}.request_timeout(), [&] { return p.answer || p.failed; });
      if (p.answer) out.push_back({*p.answer, endpoint});
    }
    fabric_.attach(dummy_);
    return out;
  }

  ClientContainer& open(const ClientId& id, std::vector<ServerRef> servers) {
    ClientConfig cfg;
    cfg.id = id;
    cfg.servers = std::move(servers);
    if (!cfg.servers.empty()) fabric_.set_gateway(cfg.servers.front().id.str());
    client_ = std::make_unique<ClientContainer>(std::move(cfg), fabric_);
    fabric_.attach(*client_);
    return *client_;
  }

  template <typename Pred>
  bool run_until(Micros budget, Pred done) {
    const Micros deadline = fabric_.now() + budget;
    while (!done()) {
      const Micros left = deadline - fabric_.now();
      if (left <= 0) return false;
      io_.restart();
      io_.run_one_for(std::chrono::microseconds(std::min<Micros>(left, 50'000)));
    }
    return true;
  }

 private:
  struct Probe : Host {
    explicit Probe(std::string id) : id_(std::move(id)) {}
    const std::string& id() const override { return id_; }
    void on_message(const Envelope& env) override {
      if (const auto* ack = std::get_if<msg::RegisterAck>(&env.body); ack && ack->accepted) answer = ack->server;
    }
    void on_send_failed(const std::string&, const Envelope&, SendFailure) override { failed = true; }
    std::string id_;
    std::optional<NodeId> answer;
    bool failed = false;
  };
  struct Silent : Host {
    std::string id_ = "-";
    const std::string& id() const override { return id_; }
    void on_message(const Envelope&) override {}
    void on_send_failed(const std::string&, const Envelope&, SendFailure) override {}
  };

  boost::asio::io_context io_;
  LiveFabric fabric_;
  Silent dummy_;
  std::unique_ptr<ClientContainer> client_;
};

void apply_thetas(LoadThresholds& t, std::optional<double> lo, std::optional<double> hi) {
  if (lo) t.theta_lo = *lo;
  if (hi) t.theta_hi = *hi;
  if (!t.valid()) throw UsageError("thresholds need 0 <= theta_lo < theta_hi <= 1");
}

void print_trace(std::ostream& out, const TraceEvent& e) {
  if (e.kind == "heartbeat" || e.kind == "heartbeat_ack") return;
  out << format_trace_line(e) << '\n' << std::flush;
}

int serve_forever(boost::asio::io_context& io) {
  boost::asio::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) { io.stop(); });
  io.run();
  return kOk;
}

int run_serve(const ServeCommand& c, std::ostream& out) {
  ServerConfig cfg = load_config(c.config);
  apply_thetas(cfg.thresholds, c.theta_lo, c.theta_hi);
  validate_config(cfg);
  boost::asio::io_context io;
  LiveFabric fabric(io);
  fabric.set_trace_sink([&](const TraceEvent& e) { print_trace(out, e); });
  ServerContainer server(cfg, fabric);
  fabric.attach(server);
  const auto port = fabric.listen(cfg.listen);
  out << "server " << cfg.id << " listening on port " << port << '\n' << std::flush;
  server.start();
  return serve_forever(io);
}

int run_node(const NodeCommand& c, std::ostream& out) {
  const ServerConfig server = load_config(c.config);
  NodeConfig cfg;
  try {
    cfg = node_config_from(server, c.id);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--id: ") + e.what());
  }
  cfg.charge_compute_time = false;
  boost::asio::io_context io;
  LiveFabric fabric(io);
  fabric.set_trace_sink([&](const TraceEvent& e) { print_trace(out, e); });
  fabric.set_gateway(cfg.server.str());
  NodeContainer node(cfg, std::make_shared<DirectoryInputStore>("."), fabric);
  fabric.attach(node);
  const auto port = fabric.listen(cfg.listen);
  out << "node " << cfg.id << " listening on port " << port << '\n' << std::flush;
  node.start();
  return serve_forever(io);
}

void remember(Session& s, const ClientContainer& client);

int exit_for(const JobStatus& s) {
  return std::holds_alternative<status::Failed>(s) ? kJobFailed : kOk;
}

int run_submit(const SubmitCommand& c, std::ostream& out, std::ostream& err) {
  const ClientId id = client_identity();
  LiveClient live;
  auto servers = live.probe(id, c.servers);
  if (servers.empty()) {
    err << "offload: no server reachable\n";
    return kUnreachable;
  }
  ClientContainer& client = live.open(id, servers);
  std::optional<RegisterOutcome> reg;
  client.register_with_all([&](const RegisterOutcome& r) { reg = r; });
  live.run_until(kResultWait, [&] { return reg.has_value(); });
  if (!reg || !reg->any()) {
    err << "offload: registration failed\n";
    return kUnreachable;
  }
  JobSpec spec = c.spec;
  spec.job_id = JobId(random_id("j-"));
  std::optional<DispatchOutcome> outcome;
  client.submit(spec, [&](const DispatchOutcome& o) { outcome = o; });
  live.run_until(kResultWait, [&] { return outcome.has_value(); });
  if (!outcome) {
    err << "offload: no answer from any server\n";
    return kUnreachable;
  }

  Session s{id, servers, *client.receiver(spec.job_id), *client.last_snapshot(spec.job_id), outcome->server,
            outcome->node, std::nullopt};
  remember(s, client);
  out << spec.job_id << '\n';
  if (const auto* f = std::get_if<status::Failed>(&outcome->status)) {
    err << "offload: " << to_string(outcome->status) << '\n';
    return f->reason == "all_servers_failed" ? kUnreachable : kJobFailed;
  }
  return kOk;
}

std::optional<Session> session_or_complain(const JobId& job, std::ostream& err) {
  auto s = load(job);
  if (!s) err << "offload: no record of job " << job << " in " << state_dir().string() << '\n';
  return s;
}

ClientContainer& reopen(LiveClient& live, const Session& s) {
  ClientContainer& client = live.open(s.client, s.servers);
  client.adopt(s.receiver, s.mobile, s.dispatch_server, s.placed_node);
  return client;
}

void remember(Session& s, const ClientContainer& client) {
  if (const auto* r = client.receiver(s.receiver.job_id)) {
    s.receiver.last_known = r->last_known;
    if (!r->inbox.empty() && !s.result) s.result = r->inbox.front();
  }
  save(s);
}

int run_status(const StatusCommand& c, std::ostream& out, std::ostream& err) {
  auto s = session_or_complain(c.job, err);
  if (!s) return kUsage;
  LiveClient live;
  ClientContainer& client = reopen(live, *s);
  std::optional<StatusOutcome> got;
  client.reconnect(c.job, [&](const StatusOutcome& o) { got = o; });
  live.run_until(kResultWait, [&] { return got.has_value(); });
  remember(*s, client);
  if (!got || !got->known) {
    out << "unknown\n";
    return kUnreachable;
  }
  out << to_string(got->status);
  if (got->node) out << " on " << *got->node;
  out << '\n';
  return exit_for(got->status);
}

int run_kill(const KillCommand& c, std::ostream& out, std::ostream& err) {
  auto s = session_or_complain(c.job, err);
  if (!s) return kUsage;
  LiveClient live;
  ClientContainer& client = reopen(live, *s);
  std::optional<RegisterOutcome> reg;
  client.register_with_all([&](const RegisterOutcome& r) { reg = r; });
  live.run_until(kResultWait, [&] { return reg.has_value(); });
  std::optional<KillOutcome> got;
  client.kill(c.job, [&](const KillOutcome& o) { got = o; });
  live.run_until(kResultWait, [&] { return got.has_value(); });
  remember(*s, client);
  if (!got || got->result == KillOutcome::Result::Unknown) {
    out << "unknown\n";
    return kUnreachable;
  }
  if (got->result == KillOutcome::Result::AlreadyTerminal) {
    out << "already terminal\n";
    return kJobFailed;
  }
  out << "killed\n";
  return kOk;
}

int run_results(const ResultsCommand& c, std::ostream& out, std::ostream& err) {
  auto s = session_or_complain(c.job, err);
  if (!s) return kUsage;
  if (!s->result) {
    LiveClient live;
    ClientContainer& client = reopen(live, *s);
    std::optional<StatusOutcome> got;
    auto settled = [&] {
      const auto* r = client.receiver(c.job);
      if (!r->inbox.empty()) return true;
      const auto& st = r->last_known.status;
      return got.has_value() && (std::holds_alternative<status::Failed>(st) ||
                                 std::holds_alternative<status::Killed>(st));
    };
    // Registering again prompts the server to resend a parked agent whose
    // last trip home went unanswered.
    const Micros retry = Timing{}.request_timeout();
    for (Micros waited = 0; waited < kResultWait && !settled(); waited += retry) {
      client.reconnect(c.job, [&](const StatusOutcome& o) { got = o; });
      live.run_until(retry, settled);
    }
    remember(*s, client);
    if (!s->result) {
      const JobStatus st = client.receiver(c.job)->last_known.status;
      if (std::holds_alternative<status::Failed>(st) || std::holds_alternative<status::Killed>(st)) {
        err << "offload: job ended " << to_string(st) << '\n';
        return kJobFailed;
      }
      err << "offload: result not received\n";
      return kUnreachable;
    }
  }
  write_text(c.out, codec::to_json(*s->result).dump(2) + "\n");
  out << "wrote " << c.out << '\n';
  return kOk;
}

int run_simulate(const SimulateCommand& c, std::ostream& out, std::ostream& err) {
  ScenarioScript script;
  try {
    script = parse_scenario(read_text(c.scenario));
  } catch (const ScriptError& e) {
    err << "offload: " << c.scenario << ": " << e.what() << '\n';
    return kUsage;
  }
  apply_thetas(script.thresholds, c.theta_lo, c.theta_hi);
  const ScenarioResult r = run_scenario(script, c.seed);
  write_text(c.out, emit_report(r.reports));
  if (c.trace) write_text(*c.trace, r.trace_text);
  for (const auto& j : r.jobs) out << j.job << ' ' << to_string(j.status) << " results=" << j.results << '\n';
  if (!r.settled) err << "offload: stopped at the horizon before the run settled\n";
  return kOk;
}

}  // namespace

int run_command(const Command& command, std::ostream& out, std::ostream& err) {
  try {
    return std::visit(
        detail::Overloaded{
            [&](const HelpCommand& c) {
              out << c.text;
              return int{kOk};
            },
            [&](const ServeCommand& c) { return run_serve(c, out); },
            [&](const NodeCommand& c) { return run_node(c, out); },
            [&](const SubmitCommand& c) { return run_submit(c, out, err); },
            [&](const StatusCommand& c) { return run_status(c, out, err); },
            [&](const KillCommand& c) { return run_kill(c, out, err); },
            [&](const ResultsCommand& c) { return run_results(c, out, err); },
            [&](const SimulateCommand& c) { return run_simulate(c, out, err); },
            [&](const GendataHierCommand& c) {
              const Bytes bytes = write_hier_file(generate_branches(c.branches, c.values, c.seed));
              out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
              return int{kOk};
            },
            [&](const GendataXmlCommand& c) {
              generate_event_xml(out, c.shape, c.seed);
              return int{kOk};
            },
        },
        command);
  } catch (const UsageError& e) {
    err << "offload: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "offload: config: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "offload: " << e.what() << '\n';
    return kUnreachable;
  }
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  Command command;
  try {
    command = parse_args(args);
  } catch (const UsageError& e) {
    std::cerr << "offload: " << e.what() << "\nRun 'offload --help' for usage.\n";
    return kUsage;
  }
  return run_command(command, std::cout, std::cerr);
}

}  // namespace offload::cli
