#pragma once

#include <map>
#include <optional>
#include <string>

#include "elab/analytics.hpp"
#include "elab/campaign.hpp"

namespace elab {

/// Parsed key-value config file: `[section]` headers, `key = value` lines,
/// `#` comments. Section and key lookups are case-sensitive.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<std::string> sections_with_prefix(const std::string& prefix) const;

  const std::map<std::string, std::map<std::string, std::string>>& data() const {
    return data_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

struct ProtocolSettings {
  std::string bind = "127.0.0.1";
  int port = 8080;
};

/// Everything a CLI invocation needs from one config file.
struct LoadedConfig {
  CampaignConfig campaign;
  ProtocolSettings protocol;
  HumanModel human;
  RobotModel robot;
};

/// Builds the campaign configuration from a config file. Surface parameters
/// may be pinned in a [surface] section; otherwise the surface is calibrated
/// from the anchors CSV named by `[lab] anchors_csv`, falling back to the
/// built-in anchor table.
LoadedConfig load_config(const std::string& path);

/// The compiled-in defaults (same values the shipped default config uses).
LoadedConfig default_config();

/// Writes a commented config file with every supported key at its default.
std::string render_default_config();

}  // namespace elab
