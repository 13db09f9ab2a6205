#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace rfc::cli {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string format_value(const std::string& v);
std::string format_value(const std::vector<std::string>& v);
std::string format_value(double v);
std::string format_value(std::uint64_t v);

std::uint64_t fnv1a(std::string_view text);

/// Options of one subcommand together with the canonical text of their
/// resolved values.
class Settings {
 public:
  explicit Settings(CLI::App* command) : command_(command) {}

  template <typename T>
  CLI::Option* add(const std::string& key, T& target, const std::string& help) {
    auto* opt = command_->add_option("--" + key, target, help);
    if constexpr (std::is_same_v<T, std::vector<std::string>>) opt->delimiter(',');
    entries_.emplace_back(key, [&target] { return format_value(target); });
    return opt;
  }

  CLI::App* command() const { return command_; }
  std::vector<std::pair<std::string, std::string>> resolved() const;

 private:
  CLI::App* command_;
  std::vector<std::pair<std::string, std::function<std::string()>>> entries_;
};

/// Flat key=value file. Blank lines and '#' comments are skipped, except
/// "# config.key=value" lines, so an output header can be replayed.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Fills options not given on the command line. Throws CLI::ConfigError for
/// unknown keys.
void apply_config(const Settings& settings, const std::vector<std::pair<std::string, std::string>>& entries);

struct Provenance {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  int schema_version = 1;
  std::uint64_t seed = 0;

  std::string hash() const;
  /// "# ..." lines ending with a newline.
  std::string tsv_header() const;
  nlohmann::json to_json() const;
};

}  // namespace rfc::cli
