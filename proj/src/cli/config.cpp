#include "offload/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace offload::cli {

ConfigError::ConfigError(std::size_t line, const std::string& detail)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + detail : detail),
      line_(line),
      detail_(detail) {}

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

double real(std::size_t line, const std::string& key, const std::string& v) {
  double x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) {
    throw ConfigError(line, key + " must be a number, got '" + v + "'");
  }
  return x;
}

std::int64_t integer(std::size_t line, const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(line, key + " must be an integer, got '" + v + "'");
  }
  return x;
}

template <typename Tag>
Id<Tag> ident(std::size_t line, const std::string& key, const std::string& v) {
  if (!is_valid_id(v)) throw ConfigError(line, key + ": invalid id '" + v + "'");
  return Id<Tag>(v);
}

}  // namespace

void validate_config(const ServerConfig& c) {
  if (c.id.empty()) throw ConfigError(0, "id required");
  if (c.listen.empty()) throw ConfigError(0, "listen required");
  if (!c.thresholds.valid()) throw ConfigError(0, "theta_lo < theta_hi required, both in [0, 1]");
  if (c.timing.heartbeat_interval <= 0) throw ConfigError(0, "heartbeat_interval_ms must be > 0");
  if (c.timing.heartbeat_miss_limit < 1) throw ConfigError(0, "heartbeat_miss_limit must be >= 1");
  if (c.max_hops < 3) throw ConfigError(0, "max_hops must be >= 3");
  if (c.farm.empty()) throw ConfigError(0, "at least one farm entry required");
  std::set<NodeId> seen{c.id};
  for (const auto& f : c.farm) {
    if (!seen.insert(f.id).second) throw ConfigError(0, "duplicate id '" + f.id.str() + "'");
    if (f.capacity < 1) throw ConfigError(0, "farm " + f.id.str() + ": capacity must be >= 1");
    if (!(f.speed_factor >= 1.0)) throw ConfigError(0, "farm " + f.id.str() + ": speed_factor must be >= 1");
  }
}

ServerConfig parse_config(std::string_view text) {
  ServerConfig c;
  std::set<std::string> seen;
  std::size_t theta_line = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(n, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(n, key + ": empty value");
    if (key != "farm" && !seen.insert(key).second) throw ConfigError(n, "duplicate key '" + key + "'");

    if (key == "id") {
      c.id = ident<NodeTag>(n, key, value);
    } else if (key == "listen") {
      c.listen = value;
    } else if (key == "theta_lo") {
      c.thresholds.theta_lo = real(n, key, value);
      theta_line = n;
    } else if (key == "theta_hi") {
      c.thresholds.theta_hi = real(n, key, value);
      theta_line = n;
    } else if (key == "heartbeat_interval_ms") {
      const auto ms = integer(n, key, value);
      if (ms <= 0) throw ConfigError(n, "heartbeat_interval_ms must be > 0");
      c.timing.heartbeat_interval = ms * 1000;
    } else if (key == "heartbeat_miss_limit") {
      c.timing.heartbeat_miss_limit = integer(n, key, value);
      if (c.timing.heartbeat_miss_limit < 1) throw ConfigError(n, "heartbeat_miss_limit must be >= 1");
    } else if (key == "max_hops") {
      c.max_hops = integer(n, key, value);
      if (c.max_hops < 3) throw ConfigError(n, "max_hops must be >= 3");
    } else if (key == "farm") {
      std::vector<std::string> parts;
      std::string_view rest = value;
      for (;;) {
        const auto comma = rest.find(',');
        parts.push_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
      if (parts.size() < 2 || parts.size() > 4) {
        throw ConfigError(n, "farm = id, endpoint[, capacity[, speed_factor]]");
      }
      FarmEntry f;
      f.id = ident<NodeTag>(n, "farm", parts[0]);
      f.endpoint = parts[1];
      if (f.endpoint.empty()) throw ConfigError(n, "farm: empty endpoint");
      if (parts.size() > 2) f.capacity = integer(n, "capacity", parts[2]);
      if (parts.size() > 3) f.speed_factor = real(n, "speed_factor", parts[3]);
      if (f.capacity < 1) throw ConfigError(n, "capacity must be >= 1");
      if (f.speed_factor < 1.0) throw ConfigError(n, "speed_factor must be >= 1");
      for (const auto& other : c.farm) {
        if (other.id == f.id) throw ConfigError(n, "duplicate farm member '" + f.id.str() + "'");
      }
      c.farm.push_back(std::move(f));
    } else {
      throw ConfigError(n, "unknown key '" + key + "'");
    }
  }
  if (!c.thresholds.valid()) {
    throw ConfigError(theta_line, c.thresholds.theta_lo >= c.thresholds.theta_hi ? "theta_lo < theta_hi"
                                                                                  : "thresholds must lie in [0, 1]");
  }
  validate_config(c);
  return c;
}

ServerConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace offload::cli
