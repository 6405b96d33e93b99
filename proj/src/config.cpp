#include "mdda/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mdda/rng.hpp"

namespace mdda {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
}

int to_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig kv;
  std::stringstream ss(text);
  int line_no = 0;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv.entries_[key] = value;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const std::string& KeyValueConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key) const { return to_double(key, get(key)); }
int KeyValueConfig::get_int(const std::string& key) const { return to_int(key, get(key)); }

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      // general
      "seed", "jobs",
      // purification
      "scales", "n_blocks", "sigma2", "tv_gamma", "tv_gamma_coeff", "tv_penalty", "tv_tol", "tv_max_iters",
      "tv_sweeps",
      // attacks
      "attack", "eps", "steps", "step_size", "cw_lambda", "cw_lr", "cw_margin",
      // defenses
      "defense", "bdr_bits",
      // synthetic data and victim model
      "image_size", "n_train", "n_test", "hidden", "epochs", "batch_size", "learning_rate",
      "momentum", "weight_decay",
      // sweep
      "sweep_sigma2", "sweep_blocks"};
  return keys;
}

void KeyValueConfig::check_known_keys() const {
  for (const auto& [key, value] : entries_) {
    if (!known_config_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::vector<ScaleFactor> parse_scales(const std::string& text) {
  std::vector<ScaleFactor> scales;
  for (const auto& part : split(text, ',')) {
    try {
      scales.push_back(ScaleFactor::parse(part));
    } catch (const InvalidScaleError& e) {
      throw ConfigError(e.what());
    }
  }
  if (scales.empty()) throw ConfigError("empty scale list");
  return scales;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  for (const auto& part : split(text, ',')) values.push_back(to_int("list", part));
  return values;
}

std::vector<double> parse_real_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) {
    std::vector<double> values;
    for (const auto& part : split(text, ',')) values.push_back(to_double("grid", part));
    if (values.empty()) throw ConfigError("empty grid");
    return values;
  }
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw ConfigError("grid range must be lo:hi:step");
  const double lo = to_double("grid", parts[0]);
  const double hi = to_double("grid", parts[1]);
  const double step = to_double("grid", parts[2]);
  if (!(step > 0.0) || hi < lo) throw ConfigError("invalid grid bounds: " + text);
  const long count = std::lround(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> values;
  for (long i = 0; i < count; ++i) values.push_back(lo + static_cast<double>(i) * step);
  return values;
}

std::vector<int> parse_int_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) {
    auto values = parse_int_list(text);
    if (values.empty()) throw ConfigError("empty grid");
    return values;
  }
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ConfigError("integer grid range must be lo:hi");
  const int lo = to_int("grid", parts[0]);
  const int hi = to_int("grid", parts[1]);
  if (hi < lo) throw ConfigError("invalid grid bounds: " + text);
  std::vector<int> values;
  for (int v = lo; v <= hi; ++v) values.push_back(v);
  return values;
}

void apply_config(const KeyValueConfig& kv, MddaConfig& cfg) {
  if (kv.has("scales")) cfg.scales = parse_scales(kv.get("scales"));
  if (kv.has("n_blocks")) cfg.n_blocks = kv.get_int("n_blocks");
  if (kv.has("sigma2")) cfg.sigma2 = kv.get_double("sigma2");
  if (kv.has("tv_gamma")) cfg.tv_gamma = kv.get_double("tv_gamma");
  if (kv.has("tv_gamma_coeff")) cfg.tv_gamma_coeff = kv.get_double("tv_gamma_coeff");
  if (kv.has("tv_penalty")) cfg.tv_penalty = kv.get_double("tv_penalty");
  if (kv.has("tv_tol")) cfg.tv_tol = kv.get_double("tv_tol");
  if (kv.has("tv_max_iters")) cfg.tv_max_iters = kv.get_int("tv_max_iters");
  if (kv.has("tv_sweeps")) cfg.tv_sweeps = kv.get_int("tv_sweeps");
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void apply_config(const KeyValueConfig& kv, AttackConfig& cfg) {
  try {
    if (kv.has("attack")) cfg.method = parse_attack_method(kv.get("attack"));
    if (kv.has("eps")) cfg.epsilon = parse_epsilon(kv.get("eps"));
    if (kv.has("steps")) cfg.steps = kv.get_int("steps");
    if (kv.has("step_size")) cfg.step_size = kv.get_double("step_size");
    if (kv.has("cw_lambda")) cfg.cw_lambda = kv.get_double("cw_lambda");
    if (kv.has("cw_lr")) cfg.cw_lr = kv.get_double("cw_lr");
    if (kv.has("cw_margin")) cfg.cw_margin = parse_cw_margin(kv.get("cw_margin"));
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void apply_config(const KeyValueConfig& kv, TrainConfig& cfg) {
  if (kv.has("hidden")) cfg.hidden = parse_int_list(kv.get("hidden"));
  if (kv.has("epochs")) cfg.epochs = kv.get_int("epochs");
  if (kv.has("batch_size")) cfg.batch_size = kv.get_int("batch_size");
  if (kv.has("learning_rate")) cfg.learning_rate = kv.get_double("learning_rate");
  if (kv.has("momentum")) cfg.momentum = kv.get_double("momentum");
  if (kv.has("weight_decay")) cfg.weight_decay = kv.get_double("weight_decay");
}

void apply_config(const KeyValueConfig& kv, BdrConfig& cfg) {
  if (kv.has("bdr_bits")) cfg.bits = kv.get_int("bdr_bits");
  if (cfg.bits < 1 || cfg.bits > 8) throw ConfigError("bdr_bits must be in [1,8]");
}

}  // namespace mdda
