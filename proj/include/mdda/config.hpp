#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdda/attacks.hpp"
#include "mdda/baselines.hpp"
#include "mdda/dataset.hpp"
#include "mdda/model.hpp"
#include "mdda/pipeline.hpp"

namespace mdda {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// `key = value` lines; '#' starts a comment; blank lines ignored.
/// Later assignments override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig from_file(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Throws ConfigError naming the first key not in the documented schema.
  void check_known_keys() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Every key accepted by KeyValueConfig::check_known_keys.
const std::set<std::string>& known_config_keys();

std::vector<ScaleFactor> parse_scales(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
/// "a,b,c" or "lo:hi:step" (inclusive, tolerant to rounding).
std::vector<double> parse_real_grid(const std::string& text);
/// "a,b,c" or "lo:hi" (inclusive).
std::vector<int> parse_int_grid(const std::string& text);

// Each overlays the keys present in `kv` onto an existing value. `seed` is a
// master seed and is left to the caller.
void apply_config(const KeyValueConfig& kv, MddaConfig& cfg);
void apply_config(const KeyValueConfig& kv, AttackConfig& cfg);
void apply_config(const KeyValueConfig& kv, TrainConfig& cfg);
void apply_config(const KeyValueConfig& kv, BdrConfig& cfg);

}  // namespace mdda
