#include <charconv>
#include <cmath>
#include <memory>

#include <CLI11.hpp>

#include "offload/cli/commands.hpp"

namespace offload::cli {

namespace {

constexpr const char* kConfigHelp =
    "Config file, one `key = value` per line:\n"
    "  id = s1\n"
    "  listen = HOST:PORT\n"
    "  theta_lo = 0.5                (default 0.5)\n"
    "  theta_hi = 0.8                (default 0.8)\n"
    "  heartbeat_interval_ms = 1000  (default 1000)\n"
    "  heartbeat_miss_limit = 3      (default 3)\n"
    "  max_hops = 5                  (default 5)\n"
    "  farm = ID, HOST:PORT[, CAPACITY[, SPEED_FACTOR]]  (defaults 4, 1.0; one line per node)";

/// Every option is read as text and checked by hand, so messages name the
/// flag the way users typed it.
struct Parser {
  CLI::App app{"Offload analysis jobs from a thin client to a server farm using mobile agents.", "offload"};
  std::map<std::string, std::string> v;  // "sub.flag" -> text
  std::map<std::string, CLI::App*> subs;

  CLI::App* sub(const std::string& name, const std::string& about, CLI::App* parent = nullptr) {
    CLI::App* s = (parent ? parent : &app)->add_subcommand(name, about);
    subs[parent ? parent->get_name() + " " + name : name] = s;
    return s;
  }
  void opt(CLI::App* s, const std::string& key, const std::string& flag, const std::string& about) {
    s->add_option(flag, v[key], about);
  }

  Parser() {
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 1 usage error, 2 job failed, 3 unreachable.");

    auto* serve = sub("serve", "Start a server (Main-Container).");
    opt(serve, "serve.config", "--config", "Server config file (FILE)");
    opt(serve, "serve.theta_lo", "--theta-lo", "Override theta_lo (default 0.5)");
    opt(serve, "serve.theta_hi", "--theta-hi", "Override theta_hi (default 0.8)");
    serve->footer(kConfigHelp);

    auto* node = sub("node", "Start a resource node listed in a server config.");
    opt(node, "node.config", "--config", "Server config file naming this node (FILE)");
    opt(node, "node.id", "--id", "This node's id (NODE)");

    auto* submit = sub("submit", "Submit a job; prints its JobId.");
    opt(submit, "submit.server", "--server", "Server endpoints, HOST:PORT[,HOST:PORT...] in registration order");
    opt(submit, "submit.kind", "--kind", "hist1d | hist2d | parsexml");
    opt(submit, "submit.input", "--input", "Input path as seen by the nodes (PATH)");
    opt(submit, "submit.branch", "--branch", "Branch name (NAME); hist2d takes X,Y");
    opt(submit, "submit.nbins", "--nbins", "Bin count (default 10); hist2d takes NX,NY");
    opt(submit, "submit.lo", "--lo", "Lower edge (default 0); hist2d takes XLO,YLO");
    opt(submit, "submit.hi", "--hi", "Upper edge (default 1); hist2d takes XHI,YHI");
    opt(submit, "submit.delivery", "--delivery", "direct | bringback | auto (default auto)");

    auto* status = sub("status", "Print a job's status.");
    opt(status, "status.job", "--job", "Job id (ID)");
    auto* kill = sub("kill", "Kill a job.");
    opt(kill, "kill.job", "--job", "Job id (ID)");
    auto* results = sub("results", "Fetch a job's result.");
    opt(results, "results.job", "--job", "Job id (ID)");
    opt(results, "results.out", "--out", "Where to write the result (PATH)");

    auto* sim = sub("simulate", "Run a scenario script on the virtual clock.");
    opt(sim, "simulate.scenario", "--scenario", "Scenario script (FILE)");
    opt(sim, "simulate.seed", "--seed", "Seed for generated inputs (N)");
    opt(sim, "simulate.out", "--out", "Timing report CSV (PATH)");
    opt(sim, "simulate.trace", "--trace", "Event trace (PATH)");
    opt(sim, "simulate.theta_lo", "--theta-lo", "Override theta_lo (default 0.5)");
    opt(sim, "simulate.theta_hi", "--theta-hi", "Override theta_hi (default 0.8)");

    auto* gen = sub("gendata", "Write generated test data to stdout.");
    gen->require_subcommand(1);
    auto* hier = sub("hier", "HierFile with branches b0..b{N-1}.", gen);
    opt(hier, "hier.branches", "--branches", "Branch count (default 3)");
    opt(hier, "hier.values", "--values", "Values per branch (default 1000)");
    opt(hier, "hier.seed", "--seed", "Seed (default 0)");
    auto* xml = sub("xml", "Event XML document.", gen);
    opt(xml, "xml.events", "--events", "Events (default 10)");
    opt(xml, "xml.drawables", "--drawables", "Drawables per event (default 5)");
    opt(xml, "xml.points", "--points", "Points per drawable (default 4)");
    opt(xml, "xml.seed", "--seed", "Seed (default 0)");
  }

  bool given(const std::string& key) const { return !v.at(key).empty(); }
  const std::string& text(const std::string& key) const { return v.at(key); }
  std::string required(const std::string& key, const std::string& flag) const {
    if (!given(key)) throw UsageError(flag + " required");
    return text(key);
  }
};

std::string flag_name(const std::string& key) {
  std::string f = key.substr(key.find('.') + 1);
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

std::int64_t integer(const Parser& p, const std::string& key, std::int64_t dflt, std::int64_t min) {
  if (!p.given(key)) return dflt;
  const std::string& s = p.text(key);
  std::int64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError(flag_name(key) + " must be integer");
  if (x < min) throw UsageError(flag_name(key) + " must be >= " + std::to_string(min));
  return x;
}

std::uint64_t seed(const Parser& p, const std::string& key) {
  const std::string& s = p.text(key);
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError("seed must be integer");
  return x;
}

double real(const std::string& flag, const std::string& s) {
  double x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x)) throw UsageError(flag + " must be a number");
  return x;
}

std::optional<double> theta(const Parser& p, const std::string& key) {
  if (!p.given(key)) return std::nullopt;
  const double x = real("--" + flag_name(key), p.text(key));
  if (x < 0.0 || x > 1.0) throw UsageError("--" + flag_name(key) + " must lie in [0, 1]");
  return x;
}

std::vector<std::string> commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

template <typename Tag>
Id<Tag> job_id(const Parser& p, const std::string& key) {
  const std::string s = p.required(key, "--job");
  if (!is_valid_id(s)) throw UsageError("--job: invalid id '" + s + "'");
  return Id<Tag>(s);
}

SubmitCommand submit_command(const Parser& p) {
  SubmitCommand c;
  for (const auto& s : commas(p.required("submit.server", "--server"))) {
    if (s.find(':') == std::string::npos || s.back() == ':') throw UsageError("--server expects HOST:PORT, got '" + s + "'");
    c.servers.push_back(s);
  }
  const auto kind = parse_job_kind(p.required("submit.kind", "--kind"));
  if (!kind) throw UsageError("--kind must be hist1d, hist2d or parsexml");
  c.spec.input_ref = p.required("submit.input", "--input");
  if (p.given("submit.delivery")) {
    const auto mode = parse_delivery_mode(p.text("submit.delivery"));
    if (!mode) throw UsageError("--delivery must be direct, bringback or auto");
    c.spec.delivery = *mode;
  }

  const bool axis_flags =
      p.given("submit.branch") || p.given("submit.nbins") || p.given("submit.lo") || p.given("submit.hi");
  const std::size_t axes = *kind == JobKind::Hist1D ? 1 : *kind == JobKind::Hist2D ? 2 : 0;
  if (axes == 0) {
    if (axis_flags) throw UsageError("--branch/--nbins/--lo/--hi do not apply to parsexml");
    c.spec.params = ParseXmlParams{};
    return c;
  }
  auto parts = [&](const std::string& key, const char* dflt) {
    if (!p.given(key)) return std::vector<std::string>(axes, dflt);
    auto v = commas(p.text(key));
    if (v.size() != axes) {
      throw UsageError("--" + flag_name(key) + " takes " + std::to_string(axes) + " comma-separated value(s)");
    }
    return v;
  };
  if (!p.given("submit.branch")) throw UsageError("--branch required");
  const auto branch = parts("submit.branch", "");
  const auto nbins = parts("submit.nbins", "10");
  const auto lo = parts("submit.lo", "0");
  const auto hi = parts("submit.hi", "1");
  std::vector<AxisSpec> ax;
  for (std::size_t i = 0; i < axes; ++i) {
    AxisSpec a;
    a.branch = branch[i];
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(nbins[i].data(), nbins[i].data() + nbins[i].size(), n);
    if (ec != std::errc() || ptr != nbins[i].data() + nbins[i].size()) throw UsageError("nbins must be integer");
    a.nbins = n;
    a.lo = real("--lo", lo[i]);
    a.hi = real("--hi", hi[i]);
    ax.push_back(a);
  }
  if (axes == 1) {
    c.spec.params = Hist1DParams{ax[0]};
  } else {
    c.spec.params = Hist2DParams{ax[0], ax[1]};
  }
  JobSpec probe = c.spec;
  probe.job_id = JobId("probe");
  if (const auto problems = validate_job_spec(probe); !problems.empty()) throw UsageError(problems.front());
  return c;
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
  Parser p;
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    p.app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &p.app;
    while (!target->get_subcommands().empty()) target = target->get_subcommands().front();
    return HelpCommand{target->help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const auto* chosen = p.app.get_subcommands().front();
  const std::string name = chosen->get_name();
  if (name == "serve") {
    auto lo = theta(p, "serve.theta_lo");
    auto hi = theta(p, "serve.theta_hi");
    return ServeCommand{p.required("serve.config", "--config"), lo, hi};
  }
  if (name == "node") {
    const std::string config = p.required("node.config", "--config");
    const std::string id = p.required("node.id", "--id");
    if (!is_valid_id(id)) throw UsageError("--id: invalid id '" + id + "'");
    return NodeCommand{config, NodeId(id)};
  }
  if (name == "submit") return submit_command(p);
  if (name == "status") return StatusCommand{job_id<JobTag>(p, "status.job")};
  if (name == "kill") return KillCommand{job_id<JobTag>(p, "kill.job")};
  if (name == "results") {
    const JobId job = job_id<JobTag>(p, "results.job");
    return ResultsCommand{job, p.required("results.out", "--out")};
  }
  if (name == "simulate") {
    SimulateCommand c;
    if (p.given("simulate.seed")) c.seed = seed(p, "simulate.seed");
    c.theta_lo = theta(p, "simulate.theta_lo");
    c.theta_hi = theta(p, "simulate.theta_hi");
    c.scenario = p.required("simulate.scenario", "--scenario");
    if (!p.given("simulate.seed")) throw UsageError("--seed required");
    c.out = p.required("simulate.out", "--out");
    if (p.given("simulate.trace")) c.trace = p.text("simulate.trace");
    return c;
  }
  // gendata
  const auto* which = chosen->get_subcommands().front();
  if (which->get_name() == "hier") {
    GendataHierCommand c;
    c.branches = integer(p, "hier.branches", c.branches, 1);
    c.values = integer(p, "hier.values", c.values, 0);
    if (p.given("hier.seed")) c.seed = seed(p, "hier.seed");
    return c;
  }
  GendataXmlCommand c;
  c.shape.events = integer(p, "xml.events", c.shape.events, 0);
  c.shape.drawables_per_event = integer(p, "xml.drawables", c.shape.drawables_per_event, 0);
  c.shape.points_per_drawable = integer(p, "xml.points", c.shape.points_per_drawable, 0);
  if (p.given("xml.seed")) c.seed = seed(p, "xml.seed");
  return c;
}

std::string help_text(const std::string& subcommand) {
  Parser p;
  if (subcommand.empty()) return p.app.help();
  const auto it = p.subs.find(subcommand);
  if (it == p.subs.end()) throw std::invalid_argument("no subcommand " + subcommand);
  return it->second->help();
}

}  // namespace offload::cli
