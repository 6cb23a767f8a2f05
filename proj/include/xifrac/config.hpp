#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xifrac/driver.hpp"

namespace xifrac {

/// Parse or validation failure; `key` and `line` are empty/0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& what);

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Flat `key = value` text. Lines may carry `#` comments; a `[section]`
/// header prefixes the following bare keys with `section.`. Keys absent from
/// the text keep their value from `base`.
SimConfig parse_config(std::string_view text, const SimConfig& base = {});
SimConfig load_config(const std::filesystem::path& path, const SimConfig& base = {});

/// Applies one `key=value` assignment (command-line override) and revalidates.
void apply_override(SimConfig& config, std::string_view assignment);

/// Every key with its current value, one per line, in a form parse_config
/// reads back to an identical SimConfig.
std::string serialize(const SimConfig& config);

/// Shortest decimal form (15-17 significant digits) that reads back exactly.
std::string format_double(double x);

/// All recognized keys, in serialization order.
std::vector<std::string> config_keys();

}  // namespace xifrac
