#include "provenance.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace rfc::cli {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_value(const std::string& v) { return v; }

std::string format_value(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::string format_value(double v) { return format_double(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::pair<std::string, std::string>> Settings::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, value] : entries_) out.emplace_back(key, value());
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ConfigError("cannot read config file '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line_no == 1 && line.rfind("# rfc ", 0) == 0) header = true;
    if (line.rfind("# config.", 0) == 0) {
      line = line.substr(9);
    } else if (header && !line.empty() && line.front() != '#') {
      break;  // data following a provenance header
    } else if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return entries;
}

void apply_config(const Settings& settings, const std::vector<std::pair<std::string, std::string>>& entries) {
  CLI::App* app = settings.command();
  for (const auto& [key, value] : entries) {
    const auto resolved = settings.resolved();
    const bool known = std::any_of(resolved.begin(), resolved.end(), [&](const auto& e) { return e.first == key; });
    if (!known) throw CLI::ConfigError("unknown config key '" + key + "' for command '" + app->get_name() + "'");
    CLI::Option* opt = app->get_option("--" + key);
    if (opt->count() > 0 || value.empty()) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

std::string Provenance::hash() const {
  std::string canonical = command + "\n";
  for (const auto& [key, value] : config) canonical += key + "=" + value + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
  return buf;
}

std::string Provenance::tsv_header() const {
  std::string out = "# rfc " + command + "\n";
  out += "# schema_version=" + std::to_string(schema_version) + "\n";
  out += "# config_hash=" + hash() + "\n";
  out += "# seed=" + std::to_string(seed) + "\n";
  for (const auto& [key, value] : config) out += "# config." + key + "=" + value + "\n";
  return out;
}

nlohmann::json Provenance::to_json() const {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [key, value] : config) cfg[key] = value;
  return {{"command", command},
          {"schema_version", schema_version},
          {"config_hash", hash()},
          {"seed", seed},
          {"config", std::move(cfg)}};
}

}  // namespace rfc::cli
