#include "offload/sim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "offload/workloads/hierfile.hpp"

namespace offload {

ScriptError::ScriptError(std::size_t line, const std::string& detail)
    : std::runtime_error("line " + std::to_string(line) + ": " + detail), line_(line), detail_(detail) {}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::vector<std::string> words(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

/// One directive: positional words followed by key=value options.
class Directive {
 public:
  Directive(std::size_t line, std::vector<std::string> w) : line_(line) {
    for (std::size_t i = 1; i < w.size(); ++i) {
      const auto eq = w[i].find('=');
      if (eq == std::string::npos) {
        // Bare flags may sit anywhere.
        if (w[i] == "measured") {
          if (!opts_.emplace(w[i], "").second) fail("duplicate option '" + w[i] + "'");
          continue;
        }
        if (!opts_.empty()) fail("positional argument '" + w[i] + "' after options");
        pos_.push_back(w[i]);
        continue;
      }
      const std::string key = w[i].substr(0, eq);
      if (key.empty()) fail("empty option name");
      if (!opts_.emplace(key, w[i].substr(eq + 1)).second) fail("duplicate option '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& detail) const { throw ScriptError(line_, detail); }
  std::size_t line() const { return line_; }

  void positional(std::size_t n, const char* usage) const {
    if (pos_.size() != n) fail(std::string("expected: ") + usage);
  }
  const std::string& pos(std::size_t i) const { return pos_.at(i); }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : opts_) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        fail("unknown key '" + k + "'");
      }
    }
  }
  bool has(const std::string& key) const { return opts_.contains(key); }
  std::string text(const std::string& key) const {
    const auto it = opts_.find(key);
    if (it == opts_.end()) fail("missing " + key + "=");
    return it->second;
  }

  double real(const std::string& key, std::string_view v) const {
    double x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
      fail(key + " must be a number, got '" + std::string(v) + "'");
    }
    return x;
  }
  std::int64_t integer(const std::string& key, std::string_view v) const {
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) fail(key + " must be an integer, got '" + std::string(v) + "'");
    return x;
  }
  double real(const std::string& key) const { return real(key, text(key)); }
  double real(const std::string& key, double dflt) const { return has(key) ? real(key) : dflt; }
  std::int64_t integer(const std::string& key, std::int64_t dflt) const {
    return has(key) ? integer(key, text(key)) : dflt;
  }
  /// Milliseconds in the text, microseconds out.
  Micros ms(const std::string& key, std::string_view v) const {
    const double x = real(key, v);
    if (x < 0) fail(key + " must be >= 0");
    return std::llround(x * 1000.0);
  }
  Micros ms(const std::string& key) const { return ms(key, text(key)); }
  Micros ms(const std::string& key, Micros dflt) const { return has(key) ? ms(key) : dflt; }

  template <typename Tag>
  Id<Tag> id(const std::string& what, const std::string& v) const {
    if (!is_valid_id(v)) fail("invalid " + what + " id '" + v + "'");
    return Id<Tag>(v);
  }

 private:
  std::size_t line_;
  std::vector<std::string> pos_;
  std::map<std::string, std::string> opts_;
};

AxisSpec axis_from(const Directive& d, std::size_t i, std::size_t n) {
  auto part = [&](const char* key, const char* dflt) -> std::string {
    if (!d.has(key)) {
      if (!dflt) d.fail(std::string("missing ") + key + "=");
      return dflt;
    }
    const auto parts = split(d.text(key), ',');
    if (parts.size() != n) d.fail(std::string(key) + " needs " + std::to_string(n) + " comma-separated values");
    return parts[i];
  };
  AxisSpec a;
  a.branch = part("branch", nullptr);
  a.nbins = d.integer("nbins", part("nbins", "10"));
  a.lo = d.real("lo", part("lo", "0"));
  a.hi = d.real("hi", part("hi", "1"));
  return a;
}

void parse_set(const Directive& d, ScenarioScript& s) {
  d.positional(2, "set <key> <value>");
  const std::string& key = d.pos(0);
  const std::string& v = d.pos(1);
  if (key == "theta_lo") {
    s.thresholds.theta_lo = d.real(key, v);
  } else if (key == "theta_hi") {
    s.thresholds.theta_hi = d.real(key, v);
  } else if (key == "max_hops") {
    s.max_hops = d.integer(key, v);
    if (s.max_hops < 3) d.fail("max_hops must be >= 3");
  } else if (key == "heartbeat_interval_ms") {
    s.timing.heartbeat_interval = d.ms(key, v);
    if (s.timing.heartbeat_interval <= 0) d.fail("heartbeat_interval_ms must be > 0");
  } else if (key == "heartbeat_miss_limit") {
    s.timing.heartbeat_miss_limit = d.integer(key, v);
    if (s.timing.heartbeat_miss_limit < 1) d.fail("heartbeat_miss_limit must be >= 1");
  } else if (key == "server_bandwidth") {
    s.server_link.bandwidth = d.real(key, v);
    if (s.server_link.bandwidth <= 0) d.fail("server_bandwidth must be > 0");
  } else if (key == "server_latency_ms") {
    s.server_link.latency = d.ms(key, v);
  } else if (key == "display_ms") {
    s.display = d.ms(key, v);
  } else if (key == "parse_ns_per_byte") {
    s.cost.parse_ns_per_byte = d.real(key, v);
    if (s.cost.parse_ns_per_byte < 0) d.fail("parse_ns_per_byte must be >= 0");
  } else if (key == "analyze_ns_per_value") {
    s.cost.analyze_ns_per_value = d.real(key, v);
    if (s.cost.analyze_ns_per_value < 0) d.fail("analyze_ns_per_value must be >= 0");
  } else if (key == "horizon_ms") {
    s.horizon = d.ms(key, v);
  } else if (key == "settle_ms") {
    s.settle = d.ms(key, v);
  } else {
    d.fail("unknown key '" + key + "'");
  }
}

}  // namespace

ScenarioScript parse_scenario(std::string_view text) {
  ScenarioScript s;
  struct Ref {
    std::size_t line;
    std::string what;
    std::string id;
  };
  std::vector<Ref> refs;
  std::size_t theta_line = 0;

  const auto lines = split(text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto w = words(line);
    if (w.empty()) continue;
    const std::string verb = w.front();
    const Directive d(n + 1, std::move(w));

    if (verb == "server") {
      d.positional(1, "server <id> farm=<node,...>");
      d.allow({"farm"});
      ScenarioScript::Server srv{d.id<NodeTag>("server", d.pos(0)), {}};
      for (const auto& m : split(d.text("farm"), ',')) {
        srv.farm.push_back(d.id<NodeTag>("node", m));
        refs.push_back({d.line(), "node", m});
      }
      s.servers.push_back(std::move(srv));
    } else if (verb == "node") {
      d.positional(1, "node <id> [capacity=N] [speed=X]");
      d.allow({"capacity", "speed"});
      ScenarioScript::Node node{d.id<NodeTag>("node", d.pos(0)), d.integer("capacity", 4), d.real("speed", 1.0)};
      if (node.capacity < 1) d.fail("capacity must be >= 1");
      if (node.speed < 1.0) d.fail("speed must be >= 1");
      s.nodes.push_back(node);
    } else if (verb == "client") {
      d.positional(1, "client <id> servers=<server,...>");
      d.allow({"servers", "speed", "bandwidth", "latency_ms"});
      ScenarioScript::Client c;
      c.id = d.id<ClientTag>("client", d.pos(0));
      for (const auto& m : split(d.text("servers"), ',')) {
        c.servers.push_back(d.id<NodeTag>("server", m));
        refs.push_back({d.line(), "server", m});
      }
      c.speed = d.real("speed", 2.0);
      if (c.speed < 1.0) d.fail("speed must be >= 1");
      c.link.bandwidth = d.real("bandwidth", c.link.bandwidth);
      if (c.link.bandwidth <= 0) d.fail("bandwidth must be > 0");
      c.link.latency = d.ms("latency_ms", c.link.latency);
      s.clients.push_back(std::move(c));
    } else if (verb == "set") {
      parse_set(d, s);
      if (d.pos(0) == "theta_lo" || d.pos(0) == "theta_hi") theta_line = d.line();
    } else if (verb == "input") {
      d.positional(2, "input <path> hier|xml [options]");
      ScenarioScript::Input in;
      in.path = d.pos(0);
      if (d.pos(1) == "hier") {
        d.allow({"branches", "values"});
        in.branches = d.integer("branches", in.branches);
        in.values = d.integer("values", in.values);
        if (in.branches < 1 || in.values < 0) d.fail("need branches >= 1 and values >= 0");
      } else if (d.pos(1) == "xml") {
        in.xml = true;
        d.allow({"events", "drawables", "points"});
        in.shape.events = d.integer("events", in.shape.events);
        in.shape.drawables_per_event = d.integer("drawables", in.shape.drawables_per_event);
        in.shape.points_per_drawable = d.integer("points", in.shape.points_per_drawable);
        if (in.shape.events < 0 || in.shape.drawables_per_event < 0 || in.shape.points_per_drawable < 0) {
          d.fail("xml shape values must be >= 0");
        }
      } else {
        d.fail("input format must be hier or xml");
      }
      for (const auto& other : s.inputs) {
        if (other.path == in.path) d.fail("duplicate input '" + in.path + "'");
      }
      s.inputs.push_back(std::move(in));
    } else if (verb == "job") {
      d.positional(1, "job <id> client=<id> kind=<kind> input=<path>");
      d.allow({"client", "kind", "input", "branch", "nbins", "lo", "hi", "delivery", "at_ms"});
      ScenarioScript::Job job;
      job.spec.job_id = d.id<JobTag>("job", d.pos(0));
      job.client = d.id<ClientTag>("client", d.text("client"));
      refs.push_back({d.line(), "client", job.client.str()});
      job.spec.input_ref = d.text("input");
      refs.push_back({d.line(), "input", job.spec.input_ref});
      const auto kind = parse_job_kind(d.text("kind"));
      if (!kind) d.fail("unknown kind '" + d.text("kind") + "'");
      switch (*kind) {
        case JobKind::Hist1D: job.spec.params = Hist1DParams{axis_from(d, 0, 1)}; break;
        case JobKind::Hist2D: job.spec.params = Hist2DParams{axis_from(d, 0, 2), axis_from(d, 1, 2)}; break;
        case JobKind::ParseEventXml:
          if (d.has("branch") || d.has("nbins") || d.has("lo") || d.has("hi")) d.fail("parsexml takes no axis");
          job.spec.params = ParseXmlParams{};
          break;
      }
      if (d.has("delivery")) {
        const auto mode = parse_delivery_mode(d.text("delivery"));
        if (!mode) d.fail("unknown delivery '" + d.text("delivery") + "'");
        job.spec.delivery = *mode;
      }
      job.at = d.ms("at_ms", 0);
      if (const auto v = validate_job_spec(job.spec); !v.empty()) d.fail(v.front());
      for (const auto& other : s.jobs) {
        if (other.spec.job_id == job.spec.job_id) d.fail("duplicate job '" + job.spec.job_id.str() + "'");
      }
      s.jobs.push_back(std::move(job));
    } else if (verb == "load") {
      d.positional(1, "load <node> at_ms=T (cpu=X queue=N mem=X | measured)");
      d.allow({"at_ms", "cpu", "queue", "mem", "measured"});
      ScenarioScript::Load load{d.id<NodeTag>("node", d.pos(0)), d.ms("at_ms"), std::nullopt};
      refs.push_back({d.line(), "node", load.node.str()});
      if (d.has("measured")) {
        if (d.has("cpu") || d.has("queue") || d.has("mem")) d.fail("measured excludes cpu/queue/mem");
      } else {
        ScriptedLoad l{d.real("cpu", 0.0), d.integer("queue", 0), d.real("mem", 0.0)};
        if (l.cpu_util < 0 || l.cpu_util > 1 || l.mem_util < 0 || l.mem_util > 1 || l.queue_depth < 0) {
          d.fail("cpu and mem must lie in [0, 1], queue >= 0");
        }
        load.load = l;
      }
      s.loads.push_back(load);
    } else if (verb == "kill_server" || verb == "kill_node") {
      d.positional(1, (verb + " <id> at_ms=T").c_str());
      d.allow({"at_ms"});
      s.crashes.push_back({d.pos(0), d.ms("at_ms")});
      refs.push_back({d.line(), verb == "kill_server" ? "server" : "node", d.pos(0)});
    } else if (verb == "link_down") {
      d.positional(1, "link_down <id> from_ms=T to_ms=T");
      d.allow({"from_ms", "to_ms"});
      ScenarioScript::LinkDown l{d.pos(0), d.ms("from_ms"), d.ms("to_ms")};
      if (l.to <= l.from) d.fail("to_ms must be after from_ms");
      refs.push_back({d.line(), "container", l.target});
      s.link_downs.push_back(std::move(l));
    } else if (verb == "kill_job") {
      d.positional(1, "kill_job <job> at_ms=T");
      d.allow({"at_ms"});
      s.kills.push_back({d.id<JobTag>("job", d.pos(0)), d.ms("at_ms")});
      refs.push_back({d.line(), "job", d.pos(0)});
    } else {
      d.fail("unknown directive '" + verb + "'");
    }
  }

  if (!s.thresholds.valid()) throw ScriptError(theta_line, "theta_lo < theta_hi required, both in [0, 1]");

  if (s.servers.empty() && s.nodes.empty() && s.clients.empty()) {
    s.servers.push_back({NodeId("s1"), {NodeId("n1"), NodeId("n2")}});
    s.nodes.push_back({NodeId("n1")});
    s.nodes.push_back({NodeId("n2")});
    s.clients.push_back({ClientId("c1"), {NodeId("s1")}});
  }

  std::set<std::string> servers, nodes, clients, inputs, jobs;
  for (const auto& x : s.servers) {
    if (!servers.insert(x.id.str()).second) throw ScriptError(0, "duplicate server '" + x.id.str() + "'");
  }
  for (const auto& x : s.nodes) {
    if (!nodes.insert(x.id.str()).second || servers.contains(x.id.str())) {
      throw ScriptError(0, "duplicate container id '" + x.id.str() + "'");
    }
  }
  for (const auto& x : s.clients) {
    if (!clients.insert(x.id.str()).second || servers.contains(x.id.str()) || nodes.contains(x.id.str())) {
      throw ScriptError(0, "duplicate container id '" + x.id.str() + "'");
    }
  }
  for (const auto& x : s.inputs) inputs.insert(x.path);
  for (const auto& x : s.jobs) jobs.insert(x.spec.job_id.str());
  for (const auto& r : refs) {
    bool ok = false;
    if (r.what == "server") ok = servers.contains(r.id);
    if (r.what == "node") ok = nodes.contains(r.id);
    if (r.what == "client") ok = clients.contains(r.id);
    if (r.what == "input") ok = inputs.contains(r.id);
    if (r.what == "job") ok = jobs.contains(r.id);
    if (r.what == "container") ok = servers.contains(r.id) || nodes.contains(r.id) || clients.contains(r.id);
    if (!ok) throw ScriptError(r.line, "undefined " + r.what + " '" + r.id + "'");
  }
  std::map<std::string, std::string> owner;
  for (const auto& srv : s.servers) {
    for (const auto& n : srv.farm) {
      if (!owner.emplace(n.str(), srv.id.str()).second) {
        throw ScriptError(0, "node '" + n.str() + "' is in the farms of " + owner[n.str()] + " and " + srv.id.str());
      }
    }
  }
  for (const auto& n : s.nodes) {
    if (!owner.contains(n.id.str())) throw ScriptError(0, "node '" + n.id.str() + "' is in no farm");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Running

const JobOutcome& ScenarioResult::job(const std::string& id) const {
  for (const auto& j : jobs) {
    if (j.job.str() == id) return j;
  }
  throw std::out_of_range("no job " + id);
}

namespace {

bool terminal_name(std::string_view status) {
  return status.starts_with("Completed") || status.starts_with("Failed") || status.starts_with("Killed");
}

std::uint64_t input_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

ScenarioRun::ScenarioRun(ScenarioScript script, std::uint64_t seed)
    : script_(std::move(script)), seed_(seed), inputs_(std::make_shared<MemoryInputStore>()) {
  sim_.set_trace_observer([this](const TraceEvent& e) { observe(e); });
  build();
}

ScenarioRun::~ScenarioRun() = default;

void ScenarioRun::replace_input(const std::string& path, Bytes bytes) {
  if (ran_) throw std::logic_error("ScenarioRun::replace_input after run");
  inputs_->put(path, std::move(bytes));
}

void ScenarioRun::build() {
  for (std::size_t i = 0; i < script_.inputs.size(); ++i) {
    const auto& in = script_.inputs[i];
    const auto s = input_seed(seed_, i);
    if (in.xml) {
      std::ostringstream out;
      generate_event_xml(out, in.shape, s);
      const std::string text = out.str();
      inputs_->put(in.path, Bytes(text.begin(), text.end()));
    } else {
      inputs_->put(in.path, write_hier_file(generate_branches(in.branches, in.values, s)));
    }
  }

  std::map<std::string, const ScenarioScript::Node*> node_specs;
  for (const auto& n : script_.nodes) node_specs[n.id.str()] = &n;

  for (const auto& srv : script_.servers) {
    ServerConfig cfg;
    cfg.id = srv.id;
    cfg.listen = srv.id.str();
    cfg.thresholds = script_.thresholds;
    cfg.timing = script_.timing;
    cfg.max_hops = script_.max_hops;
    for (const auto& n : srv.farm) {
      const auto* spec = node_specs.at(n.str());
      cfg.farm.push_back({n, n.str(), spec->capacity, spec->speed});
    }
    for (const auto& n : srv.farm) {
      NodeConfig ncfg = node_config_from(cfg, n);
      ncfg.cost = script_.cost;
      auto node = std::make_unique<NodeContainer>(std::move(ncfg), inputs_, sim_);
      sim_.add_host(*node, script_.server_link);
      nodes_[n.str()] = std::move(node);
    }
    auto server = std::make_unique<ServerContainer>(std::move(cfg), sim_);
    sim_.add_host(*server, script_.server_link);
    servers_[srv.id.str()] = std::move(server);
  }
  for (const auto& c : script_.clients) {
    ClientConfig cfg;
    cfg.id = c.id;
    cfg.endpoint = c.id.str();
    for (const auto& s : c.servers) cfg.servers.push_back({s, s.str()});
    cfg.timing = script_.timing;
    cfg.max_hops = script_.max_hops;
    cfg.display_time = script_.display;
    auto client = std::make_unique<ClientContainer>(std::move(cfg), sim_);
    sim_.add_host(*client, c.link);
    clients_[c.id.str()] = std::move(client);
    client_ready_[c.id.str()] = false;
  }

  for (const auto& l : script_.loads) nodes_.at(l.node.str())->script_load(l.at, l.load);
  for (const auto& l : script_.link_downs) sim_.add_down_interval(l.target, l.from, l.to);
  for (const auto& j : script_.jobs) {
    auto& js = jobs_[j.spec.job_id.str()];
    js.job = &j;
    js.outcome.job = j.spec.job_id;
    js.outcome.client = j.client;
  }
}

void ScenarioRun::schedule_kill(const JobId& job, Micros at) {
  if (ran_) throw std::logic_error("schedule_kill after run");
  extra_kills_.emplace_back(job, at);
}

void ScenarioRun::submit(JobState& js) {
  js.submitted = true;
  --outstanding_;
  clients_.at(js.job->client.str())->submit(js.job->spec);
}

void ScenarioRun::observe(const TraceEvent& e) {
  if (e.type != TraceEvent::Type::Status) return;
  const auto it = jobs_.find(e.job);
  if (it == jobs_.end()) return;
  const auto arrow = e.detail.find(" -> ");
  it->second.terminal = arrow != std::string::npos && terminal_name(std::string_view(e.detail).substr(arrow + 4));
}

bool ScenarioRun::quiescent() const {
  if (outstanding_ > 0) return false;
  return std::all_of(jobs_.begin(), jobs_.end(), [](const auto& j) { return j.second.terminal; });
}

ScenarioResult ScenarioRun::run() {
  if (ran_) throw std::logic_error("ScenarioRun::run called twice");
  ran_ = true;

  sim_.at(0, [this] {
    for (auto& [id, s] : servers_) s->start();
    for (auto& [id, n] : nodes_) n->start();
    for (auto& [id, c] : clients_) {
      const std::string cid = id;
      c->register_with_all([this, cid](const RegisterOutcome&) {
        client_ready_[cid] = true;
        auto waiting = std::move(waiting_[cid]);
        waiting_.erase(cid);
        for (auto* js : waiting) submit(*js);
      });
    }
  });

  for (auto& [id, js] : jobs_) {
    ++outstanding_;
    JobState* p = &js;
    sim_.at(js.job->at, [this, p] {
      const std::string cid = p->job->client.str();
      if (client_ready_[cid]) {
        submit(*p);
      } else {
        waiting_[cid].push_back(p);
      }
    });
  }

  for (const auto& c : script_.crashes) {
    ++outstanding_;
    sim_.at(c.at, [this, target = c.target] {
      --outstanding_;
      sim_.kill(target);
    });
  }

  for (const auto& l : script_.link_downs) {
    outstanding_ += 2;
    sim_.at(l.from, [this, target = l.target] {
      --outstanding_;
      sim_.record({sim_.now(), TraceEvent::Type::Fault, target, {}, "link_down", {}, {}, 0, 0});
    });
    sim_.at(l.to, [this, target = l.target] {
      --outstanding_;
      sim_.record({sim_.now(), TraceEvent::Type::Fault, target, {}, "link_up", {}, {}, 0, 0});
      const auto it = clients_.find(target);
      if (it == clients_.end() || !sim_.alive(target)) return;
      for (auto& [id, js] : jobs_) {
        if (js.job->client.str() != target || !js.submitted) continue;
        ++outstanding_;
        JobState* p = &js;
        it->second->reconnect(js.job->spec.job_id, [this, p](const StatusOutcome& o) {
          --outstanding_;
          p->outcome.reconnects.push_back(o);
        });
      }
    });
  }

  auto kills = extra_kills_;
  for (const auto& k : script_.kills) kills.emplace_back(k.job, k.at);
  for (const auto& [job, at] : kills) {
    const auto it = jobs_.find(job.str());
    if (it == jobs_.end()) throw std::invalid_argument("kill of unknown job " + job.str());
    ++outstanding_;
    JobState* p = &it->second;
    sim_.at(at, [this, p] {
      const std::string cid = p->job->client.str();
      sim_.record({sim_.now(), TraceEvent::Type::Note, cid, {}, "kill_request", p->job->spec.job_id.str(), {}, 0, 0});
      clients_.at(cid)->kill(p->job->spec.job_id, [this, p, cid](const KillOutcome& o) {
        --outstanding_;
        static constexpr const char* kNames[] = {"killed", "already_terminal", "unknown"};
        sim_.record({sim_.now(), TraceEvent::Type::Note, cid, {}, "kill_result", p->job->spec.job_id.str(),
                     kNames[static_cast<int>(o.result)], 0, 0});
        p->outcome.kill = o;
      });
    });
  }

  ScenarioResult result;
  for (;;) {
    sim_.run_until(script_.horizon, [this] { return quiescent(); });
    if (!quiescent()) break;
    sim_.run_until(std::min(sim_.now() + script_.settle, script_.horizon));
    if (quiescent()) {
      result.settled = true;
      break;
    }
    if (sim_.pending() == 0 || sim_.now() >= script_.horizon) break;
  }

  for (const auto& j : script_.jobs) {
    auto& js = jobs_.at(j.spec.job_id.str());
    auto& o = js.outcome;
    const auto& client = *clients_.at(j.client.str());
    if (const auto* r = client.receiver(j.spec.job_id)) {
      o.status = r->last_known.status;
      o.results = r->inbox.size();
    }
    o.times = client.times(j.spec.job_id);
    result.jobs.push_back(o);
  }
  result.end = sim_.now();
  result.trace = sim_.trace();
  result.trace_text = sim_.trace_text();
  result.reports = reports();
  return result;
}

std::vector<TimingReport> ScenarioRun::reports() const {
  std::vector<TimingReport> out;
  const bool label_jobs = script_.jobs.size() > 1;
  for (const auto& j : script_.jobs) {
    const std::string suffix = label_jobs ? ":" + j.spec.job_id.str() : std::string();
    const auto input = inputs_->get(j.spec.input_ref);
    if (!input) continue;
    const auto cs = std::find_if(script_.clients.begin(), script_.clients.end(),
                                 [&](const auto& c) { return c.id == j.client; });
    TimingModel model;
    model.client_speed = cs->speed;
    model.client_link = cs->link;
    model.server_link = script_.server_link;
    model.cost = script_.cost;
    model.display = script_.display;
    model.file_size = input->size();
    try {
      auto without = run_without_agents(j.spec, model, *input);
      without.scenario += suffix;
      out.push_back(std::move(without));
    } catch (const WorkloadError&) {
      continue;  // the job failed on the node too; nothing to compare
    }

    // with_agents from what actually happened.
    const auto& client = *clients_.at(j.client.str());
    const auto* receiver = client.receiver(j.spec.job_id);
    const JobTimes t = client.times(j.spec.job_id);
    if (!receiver || receiver->inbox.empty() || t.displayed < 0) continue;
    const std::string producer = receiver->inbox.front().node.str();
    const TraceEvent* parse = nullptr;
    const TraceEvent* analyze = nullptr;
    for (const auto& e : sim_.trace()) {
      if (e.type != TraceEvent::Type::Phase || e.job != j.spec.job_id.str() || e.where != producer) continue;
      if (e.at > t.result) break;
      if (e.kind == "parse") parse = &e;
      if (e.kind == "analyze") analyze = &e;
    }
    if (!parse || !analyze) continue;
    TimingReport with{"with_agents" + suffix, {}};
    with.phases.push_back({"migrate", parse->at - parse->duration - t.submitted});
    with.phases.push_back({"parse", parse->duration});
    with.phases.push_back({"analyze", analyze->duration});
    with.phases.push_back({"result_transfer", t.result - analyze->at});
    with.phases.push_back({"display", t.displayed - t.result});
    out.push_back(std::move(with));
  }
  return out;
}

}  // namespace offload
