#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "offload/runtime/config.hpp"

namespace offload::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }  // 0: whole file
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/**
 * Server config, `key = value` per line, `#` comments:
 *
 *   id = s1
 *   listen = 127.0.0.1:7000
 *   theta_lo = 0.5                  # default 0.5
 *   theta_hi = 0.8                  # default 0.8
 *   heartbeat_interval_ms = 1000    # default 1000
 *   heartbeat_miss_limit = 3        # default 3
 *   max_hops = 5                    # default 5
 *   farm = n1, 127.0.0.1:7101, 4, 1.0   # id, endpoint[, capacity[, speed_factor]]
 *
 * Nodes read the same file and pick their own farm line.
 */
ServerConfig parse_config(std::string_view text);
ServerConfig load_config(const std::filesystem::path& path);

/// Re-checks every invariant; throws ConfigError(0, ...).
void validate_config(const ServerConfig& config);

}  // namespace offload::cli
