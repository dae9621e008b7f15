#include "offload/model.hpp"

#include <cmath>

#include "offload/detail/overloaded.hpp"

namespace offload {

using detail::Overloaded;

namespace {

void check_axis(const AxisSpec& axis, const std::string& prefix, std::vector<std::string>& out) {
  if (axis.branch.empty()) out.push_back(prefix + "branch non-empty");
  if (axis.nbins < 1) out.push_back(prefix + "nbins >= 1");
  if (!std::isfinite(axis.lo) || !std::isfinite(axis.hi)) {
    out.push_back(prefix + "lo, hi finite");
  }
  if (!(axis.lo < axis.hi)) out.push_back(prefix + "lo < hi");
}

}  // namespace

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= n) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

bool is_valid_id(std::string_view text) {
  if (text.empty() || text.size() > kMaxIdBytes) return false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x20 || c == 0x7F) return false;
  }
  return is_valid_utf8(text);
}

std::string_view to_string(JobKind kind) {
  switch (kind) {
    case JobKind::Hist1D: return "hist1d";
    case JobKind::Hist2D: return "hist2d";
    case JobKind::ParseEventXml: return "parsexml";
  }
  return "?";
}

std::optional<JobKind> parse_job_kind(std::string_view text) {
  if (text == "hist1d") return JobKind::Hist1D;
  if (text == "hist2d") return JobKind::Hist2D;
  if (text == "parsexml") return JobKind::ParseEventXml;
  return std::nullopt;
}

std::string_view to_string(DeliveryMode mode) {
  switch (mode) {
    case DeliveryMode::Direct: return "direct";
    case DeliveryMode::BringBack: return "bringback";
    case DeliveryMode::Auto: return "auto";
  }
  return "?";
}

std::optional<DeliveryMode> parse_delivery_mode(std::string_view text) {
  if (text == "direct") return DeliveryMode::Direct;
  if (text == "bringback") return DeliveryMode::BringBack;
  if (text == "auto") return DeliveryMode::Auto;
  return std::nullopt;
}

std::vector<std::string> validate_job_spec(const JobSpec& spec) {
  std::vector<std::string> out;
  if (spec.job_id.empty()) out.emplace_back("job_id non-empty");
  if (spec.input_ref.empty()) out.emplace_back("input_ref non-empty");
  if (!is_valid_utf8(spec.input_ref)) out.emplace_back("input_ref valid UTF-8");
  std::visit(Overloaded{
                 [&](const Hist1DParams& p) { check_axis(p.axis, "", out); },
                 [&](const Hist2DParams& p) {
                   check_axis(p.x, "x: ", out);
                   check_axis(p.y, "y: ", out);
                 },
                 [](const ParseXmlParams&) {},
             },
             spec.params);
  return out;
}

// ---------------------------------------------------------------------------

bool is_terminal(const JobStatus& s) {
  return std::holds_alternative<status::Completed>(s) || std::holds_alternative<status::Failed>(s) ||
         std::holds_alternative<status::Killed>(s);
}

std::string_view status_name(const JobStatus& s) {
  static constexpr std::string_view kNames[] = {"pending",    "submitted", "migrating", "running",
                                                "relocating", "completed", "failed",    "killed"};
  return kNames[s.index()];
}

std::string to_string(const JobStatus& s) {
  return std::visit(
      Overloaded{
          [](const status::Pending&) -> std::string { return "Pending"; },
          [](const status::Submitted&) -> std::string { return "Submitted"; },
          [](const status::Migrating&) -> std::string { return "Migrating"; },
          [](const status::Running& r) { return "Running(" + r.node.str() + ")"; },
          [](const status::Relocating& r) {
            return "Relocating(" + r.from.str() + "," + r.to.str() + ")";
          },
          [](const status::Completed&) -> std::string { return "Completed"; },
          [](const status::Failed& f) { return "Failed(" + f.reason + ")"; },
          [](const status::Killed&) -> std::string { return "Killed"; },
      },
      s);
}

std::string to_string(const LifecycleEvent& e) {
  return std::visit(
      Overloaded{
          [](const lifecycle::Submit&) -> std::string { return "submit"; },
          [](const lifecycle::MigrateStart&) -> std::string { return "migrate_start"; },
          [](const lifecycle::MigrateDone& m) { return "migrate_done(" + m.node.str() + ")"; },
          [](const lifecycle::Relocate& r) {
            return "relocate(" + r.from.str() + "," + r.to.str() + ")";
          },
          [](const lifecycle::Complete&) -> std::string { return "complete"; },
          [](const lifecycle::Fail& f) { return "fail(" + f.reason + ")"; },
          [](const lifecycle::Kill&) -> std::string { return "kill"; },
      },
      e);
}

IllegalTransition::IllegalTransition(const JobStatus& from, const LifecycleEvent& event)
    : std::logic_error("illegal transition: " + to_string(from) + " + " + to_string(event)) {}

JobStatus advance_status(const JobStatus& current, const LifecycleEvent& event) {
  using namespace status;
  using namespace lifecycle;

  if (std::holds_alternative<lifecycle::Kill>(event)) {
    if (is_terminal(current)) throw IllegalTransition(current, event);
    return Killed{};
  }

  std::optional<JobStatus> next = std::visit(
      Overloaded{
          [](const Pending&, const Submit&) -> std::optional<JobStatus> { return Submitted{}; },
          [](const Submitted&, const MigrateStart&) -> std::optional<JobStatus> {
            return Migrating{};
          },
          [](const Migrating&, const MigrateDone& m) -> std::optional<JobStatus> {
            return Running{m.node};
          },
          [](const Running& r, const Relocate& m) -> std::optional<JobStatus> {
            if (m.from != r.node || m.to == m.from) return std::nullopt;
            return Relocating{m.from, m.to};
          },
          [](const Relocating&, const MigrateDone& m) -> std::optional<JobStatus> {
            return Running{m.node};
          },
          [](const Running&, const Complete&) -> std::optional<JobStatus> { return Completed{}; },
          [](const Submitted&, const Fail& f) -> std::optional<JobStatus> { return Failed{f.reason}; },
          [](const Migrating&, const Fail& f) -> std::optional<JobStatus> { return Failed{f.reason}; },
          [](const Running&, const Fail& f) -> std::optional<JobStatus> { return Failed{f.reason}; },
          [](const auto&, const auto&) -> std::optional<JobStatus> { return std::nullopt; },
      },
      current, event);

  if (!next) throw IllegalTransition(current, event);
  return *next;
}

// ---------------------------------------------------------------------------

std::vector<std::string> validate_load_report(const LoadReport& report) {
  std::vector<std::string> out;
  auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (report.node.empty()) out.emplace_back("node non-empty");
  if (!fraction(report.cpu_util)) out.emplace_back("cpu_util in [0,1]");
  if (!fraction(report.mem_util)) out.emplace_back("mem_util in [0,1]");
  if (report.queue_depth < 0) out.emplace_back("queue_depth >= 0");
  if (report.capacity < 1) out.emplace_back("capacity >= 1");
  return out;
}

std::string_view to_string(LoadStatus s) {
  switch (s) {
    case LoadStatus::Under: return "under";
    case LoadStatus::Normal: return "normal";
    case LoadStatus::Over: return "over";
  }
  return "?";
}

std::vector<std::string> validate_snapshot(const AgentSnapshot& snapshot) {
  std::vector<std::string> out;
  if (snapshot.agent_id.empty()) out.emplace_back("agent_id non-empty");
  if (snapshot.twin_id.empty()) out.emplace_back("twin_id non-empty");
  if (snapshot.agent_id == snapshot.twin_id) out.emplace_back("agent_id != twin_id");
  if (snapshot.client.empty()) out.emplace_back("client non-empty");
  if (snapshot.hop_count != static_cast<std::int64_t>(snapshot.visited.size())) {
    out.emplace_back("hop_count == length(visited)");
  }
  for (auto& v : validate_job_spec(snapshot.job)) out.push_back("job: " + v);
  return out;
}

}  // namespace offload
