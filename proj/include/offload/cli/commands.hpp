#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "offload/model.hpp"
#include "offload/workloads/gendata.hpp"

namespace offload::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kJobFailed = 2, kUnreachable = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServeCommand {
  std::string config;
  std::optional<double> theta_lo;
  std::optional<double> theta_hi;
};
struct NodeCommand {
  std::string config;
  NodeId id;
};
/// `spec.job_id` is left empty; submit picks one.
struct SubmitCommand {
  std::vector<std::string> servers;
  JobSpec spec;
};
struct StatusCommand {
  JobId job;
};
struct KillCommand {
  JobId job;
};
struct ResultsCommand {
  JobId job;
  std::string out;
};
struct SimulateCommand {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::string> trace;
  std::optional<double> theta_lo;
  std::optional<double> theta_hi;
};
struct GendataHierCommand {
  std::int64_t branches = 3;
  std::int64_t values = 1000;
  std::uint64_t seed = 0;
};
struct GendataXmlCommand {
  XmlShape shape{10, 5, 4};
  std::uint64_t seed = 0;
};
struct HelpCommand {
  std::string text;
};

using Command = std::variant<ServeCommand, NodeCommand, SubmitCommand, StatusCommand, KillCommand, ResultsCommand,
                             SimulateCommand, GendataHierCommand, GendataXmlCommand, HelpCommand>;

/// `args` excludes the program name.  Throws UsageError naming the
/// offending flag.
Command parse_args(const std::vector<std::string>& args);

/// --help text of the program, or of one subcommand ("submit",
/// "gendata hier", ...).
std::string help_text(const std::string& subcommand = {});

/// Runs a parsed command; returns the process exit code.
int run_command(const Command& command, std::ostream& out, std::ostream& err);

/// parse_args + run_command with usage errors mapped to exit code 1.
int main_entry(int argc, char** argv);

}  // namespace offload::cli
