// SPDX-License-Identifier: Apache-2.0
#include "watersense/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace watersense {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string describe(std::size_t line, const std::string& message) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << message;
    return os.str();
}

using Setter = std::function<void(SystemConfig&, const ConfigEntry&)>;

const std::map<std::string, Setter, std::less<>>& system_setters() {
    static const std::map<std::string, Setter, std::less<>> setters = {
        {"carrier_freq_hz", [](SystemConfig& c, const ConfigEntry& e) { c.carrier_freq_hz = parse_real(e); }},
        {"subcarrier_spacing_hz", [](SystemConfig& c, const ConfigEntry& e) { c.subcarrier_spacing_hz = parse_real(e); }},
        {"num_subcarriers", [](SystemConfig& c, const ConfigEntry& e) { c.num_subcarriers = parse_count(e); }},
        {"num_antennas", [](SystemConfig& c, const ConfigEntry& e) { c.num_antennas = parse_count(e); }},
        {"antenna_spacing", [](SystemConfig& c, const ConfigEntry& e) { c.antenna_spacing = parse_real(e); }},
        {"bs_height_m", [](SystemConfig& c, const ConfigEntry& e) { c.geometry.bs_height_m = parse_real(e); }},
        {"ue_height_m", [](SystemConfig& c, const ConfigEntry& e) { c.geometry.ue_height_m = parse_real(e); }},
        {"horizontal_distance_m",
         [](SystemConfig& c, const ConfigEntry& e) { c.geometry.horizontal_distance_m = parse_real(e); }},
        {"window_duration_s", [](SystemConfig& c, const ConfigEntry& e) { c.window_duration_s = parse_real(e); }},
        {"session_duration_s", [](SystemConfig& c, const ConfigEntry& e) { c.session_duration_s = parse_real(e); }},
        {"gap_duration_s", [](SystemConfig& c, const ConfigEntry& e) { c.gap_duration_s = parse_real(e); }},
        {"intra_session_rate_hz", [](SystemConfig& c, const ConfigEntry& e) { c.intra_session_rate_hz = parse_real(e); }},
    };
    return setters;
}

}  // namespace

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(describe(line, message)), line_(line) {}

std::vector<ConfigEntry> parse_key_values(std::string_view text) {
    std::vector<ConfigEntry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError(line_no, "expected `key = value`");
            const auto key = trim(line.substr(0, eq));
            const auto value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(line_no, "empty key");
            if (value.empty()) throw ConfigError(line_no, "empty value for key '" + std::string(key) + "'");
            entries.push_back({std::string(key), std::string(value), line_no});
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return entries;
}

std::vector<ConfigEntry> read_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_key_values(buffer.str());
}

double parse_real(const ConfigEntry& entry) {
    const std::string_view s = trim(entry.value);
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(entry.line, "'" + entry.key + "' expects a number, got '" + std::string(s) + "'");
    return v;
}

std::size_t parse_count(const ConfigEntry& entry) {
    const std::string_view s = trim(entry.value);
    unsigned long long v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(entry.line, "'" + entry.key + "' expects a nonnegative integer, got '" + std::string(s) + "'");
    }
    return static_cast<std::size_t>(v);
}

bool parse_flag(const ConfigEntry& entry) {
    const std::string& s = entry.value;
    if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "off" || s == "no") return false;
    throw ConfigError(entry.line, "'" + entry.key + "' expects on/off, got '" + s + "'");
}

std::vector<double> parse_real_list(const ConfigEntry& entry, char separator) {
    std::vector<double> out;
    std::string_view rest = entry.value;
    while (true) {
        const auto sep = rest.find(separator);
        ConfigEntry item{entry.key, std::string(trim(rest.substr(0, sep))), entry.line};
        out.push_back(parse_real(item));
        if (sep == std::string_view::npos) break;
        rest = rest.substr(sep + 1);
    }
    return out;
}

bool apply_system_key(SystemConfig& config, const ConfigEntry& entry) {
    const auto& setters = system_setters();
    const auto it = setters.find(entry.key);
    if (it == setters.end()) return false;
    it->second(config, entry);
    return true;
}

const std::vector<std::string>& system_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, setter] : system_setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

}  // namespace watersense
