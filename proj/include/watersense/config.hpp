// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "watersense/core.hpp"

namespace watersense {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;  // 1-based, 0 for entries that did not come from a file
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
/// Keys may repeat (scene files list several static paths).
std::vector<ConfigEntry> parse_key_values(std::string_view text);
std::vector<ConfigEntry> read_key_value_file(const std::filesystem::path& path);

double parse_real(const ConfigEntry& entry);
std::size_t parse_count(const ConfigEntry& entry);
bool parse_flag(const ConfigEntry& entry);
std::vector<double> parse_real_list(const ConfigEntry& entry, char separator = ',');

/// Applies one SystemConfig key. Returns false when the key is not a SystemConfig field.
bool apply_system_key(SystemConfig& config, const ConfigEntry& entry);

/// Every key understood by apply_system_key.
const std::vector<std::string>& system_config_keys();

}  // namespace watersense
