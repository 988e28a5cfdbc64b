#include "tricortex/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace tricortex {

namespace {

enum class KeyType { kBool, kInt, kDouble, kString, kIntList };

struct KeySpec {
  const char* key;
  KeyType type;
  const char* def;
};

// Registry order is the echo order.
constexpr std::array<KeySpec, 44> kKeys{{
    {"data.source", KeyType::kString, "synth"},  // synth | binary
    {"data.path", KeyType::kString, ""},
    {"data.height", KeyType::kInt, "32"},
    {"data.width", KeyType::kInt, "32"},
    {"data.channels", KeyType::kInt, "3"},
    {"data.classes", KeyType::kInt, "10"},
    {"data.synth_n", KeyType::kInt, "1200"},
    {"data.synth_size", KeyType::kInt, "32"},
    {"data.synth_classes", KeyType::kInt, "3"},
    {"data.seed", KeyType::kInt, "42"},
    {"data.val_fraction", KeyType::kDouble, "0.25"},
    {"data.human_probs", KeyType::kString, ""},
    {"model.seed", KeyType::kInt, "1"},
    {"model.state_dim", KeyType::kInt, "128"},
    {"model.memory_len", KeyType::kInt, "10"},
    {"model.query_from_combined", KeyType::kBool, "true"},
    {"model.feature_dim", KeyType::kInt, "64"},
    {"model.backbone_widths", KeyType::kIntList, "16,32"},
    {"model.d_k", KeyType::kInt, "64"},
    {"model.d_v", KeyType::kInt, "64"},
    {"osc.enabled", KeyType::kBool, "true"},
    {"osc.neuromod", KeyType::kBool, "true"},
    {"osc.film", KeyType::kBool, "true"},
    {"osc.attn_mod", KeyType::kBool, "true"},
    {"osc.per_sample", KeyType::kBool, "false"},
    {"osc.lambda", KeyType::kDouble, "0.1"},
    {"osc.kappa_freq", KeyType::kDouble, "0.1"},
    {"osc.kappa_phase", KeyType::kDouble, "0.1"},
    {"osc.kappa_amp", KeyType::kDouble, "0.1"},
    {"osc.beta", KeyType::kDouble, "0.5"},
    {"osc.dt_ms", KeyType::kDouble, "10"},
    {"osc.hidden", KeyType::kInt, "64"},
    {"sda.enabled", KeyType::kBool, "true"},
    {"sda.width", KeyType::kInt, "0"},
    {"sda.dropout", KeyType::kDouble, "0.1"},
    {"sync.n_pairs", KeyType::kInt, "512"},
    {"sync.pair_seed", KeyType::kInt, "7001"},
    {"sync.log_rate_init", KeyType::kDouble, "-2.0"},
    {"policy.epsilon", KeyType::kDouble, "0.01"},
    {"policy.tau", KeyType::kDouble, "0.75"},
    {"policy.window", KeyType::kInt, "2"},
    {"policy.t_min", KeyType::kInt, "5"},
    {"policy.t_max", KeyType::kInt, "50"},
    {"eval.certainty", KeyType::kString, "stop"},  // stop | final
}};

constexpr std::array<KeySpec, 6> kTrainKeys{{
    {"train.epochs", KeyType::kInt, "20"},
    {"train.batch_size", KeyType::kInt, "64"},
    {"train.lr", KeyType::kDouble, "0.001"},
    {"train.schedule", KeyType::kString, "cosine"},
    {"train.grad_clip", KeyType::kDouble, "0"},
    {"train.seed", KeyType::kInt, "1"},
}};

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : kKeys) {
    if (key == s.key) return &s;
  }
  for (const auto& s : kTrainKeys) {
    if (key == s.key) return &s;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("key " + key + ": '" + v + "' is not a boolean");
}

int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": '" + v + "' is not an integer");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": '" + v + "' is not a number");
  }
}

std::vector<int64_t> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int64_t> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_int(trim(cell), key));
  return out;
}

void validate_value(const KeySpec& spec, const std::string& value) {
  switch (spec.type) {
    case KeyType::kBool: parse_bool(value, spec.key); break;
    case KeyType::kInt: parse_int(value, spec.key); break;
    case KeyType::kDouble: parse_double(value, spec.key); break;
    case KeyType::kIntList: parse_int_list(value, spec.key); break;
    case KeyType::kString: break;
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& s : kKeys) values_[s.key] = s.def;
  for (const auto& s : kTrainKeys) values_[s.key] = s.def;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path);
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text,
                                             const std::string& origin) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ConfigError("unknown config key '" + key + "'");
  validate_value(*spec, value);
  values_[key] = value;
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  return parse_bool(values_.at(key), key);
}

int64_t ExperimentConfig::get_int(const std::string& key) const {
  return parse_int(values_.at(key), key);
}

double ExperimentConfig::get_double(const std::string& key) const {
  return parse_double(values_.at(key), key);
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::vector<int64_t> ExperimentConfig::get_int_list(const std::string& key) const {
  return parse_int_list(values_.at(key), key);
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  for (const auto& s : kKeys) os << s.key << " = " << values_.at(s.key) << "\n";
  for (const auto& s : kTrainKeys) {
    os << s.key << " = " << values_.at(s.key) << "\n";
  }
  return os.str();
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries()
    const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : kKeys) out.emplace_back(s.key, values_.at(s.key));
  for (const auto& s : kTrainKeys) out.emplace_back(s.key, values_.at(s.key));
  return out;
}

int64_t ExperimentConfig::data_classes() const {
  std::string source = get_string("data.source");
  if (source == "synth") return get_int("data.synth_classes");
  if (source == "binary") return get_int("data.classes");
  throw ConfigError("data.source must be 'synth' or 'binary', got '" + source +
                    "'");
}

ModelConfig ExperimentConfig::model_config(int64_t classes) const {
  ModelConfig m;
  m.state_dim = get_int("model.state_dim");
  m.classes = classes;
  m.in_channels =
      get_string("data.source") == "synth" ? 3 : get_int("data.channels");
  m.memory_len = get_int("model.memory_len");
  m.query_from_combined = get_bool("model.query_from_combined");
  m.seed = static_cast<uint64_t>(get_int("model.seed"));
  m.perception.feature_dim = get_int("model.feature_dim");
  m.perception.widths = get_int_list("model.backbone_widths");
  m.perception.d_k = get_int("model.d_k");
  m.perception.d_v = get_int("model.d_v");
  m.osc.enabled = get_bool("osc.enabled");
  m.osc.neuromod = get_bool("osc.neuromod");
  m.osc.film = get_bool("osc.film");
  m.osc.attn_mod = get_bool("osc.attn_mod");
  m.osc.per_sample = get_bool("osc.per_sample");
  m.osc.lambda = get_double("osc.lambda");
  m.osc.kappa_freq = get_double("osc.kappa_freq");
  m.osc.kappa_phase = get_double("osc.kappa_phase");
  m.osc.kappa_amp = get_double("osc.kappa_amp");
  m.osc.beta = get_double("osc.beta");
  m.osc.dt_ms = get_double("osc.dt_ms");
  m.osc.hidden = get_int("osc.hidden");
  m.sda.enabled = get_bool("sda.enabled");
  m.sda.width = get_int("sda.width");
  m.sda.dropout = get_double("sda.dropout");
  m.sync.n_pairs = get_int("sync.n_pairs");
  m.sync.pair_seed = static_cast<uint64_t>(get_int("sync.pair_seed"));
  m.sync.log_rate_init = get_double("sync.log_rate_init");
  m.policy = stop_policy();
  return m;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.epochs = get_int("train.epochs");
  t.batch_size = get_int("train.batch_size");
  t.lr = get_double("train.lr");
  t.schedule = get_string("train.schedule");
  t.grad_clip = get_double("train.grad_clip");
  t.seed = static_cast<uint64_t>(get_int("train.seed"));
  if (t.schedule != "cosine" && t.schedule != "constant") {
    throw ConfigError("train.schedule must be 'cosine' or 'constant'");
  }
  return t;
}

StopPolicy ExperimentConfig::stop_policy() const {
  StopPolicy p;
  p.epsilon = get_double("policy.epsilon");
  p.tau = get_double("policy.tau");
  p.window = get_int("policy.window");
  p.t_min = get_int("policy.t_min");
  p.t_max = get_int("policy.t_max");
  p.validate();
  return p;
}

BinaryLayout ExperimentConfig::binary_layout() const {
  BinaryLayout l;
  l.height = get_int("data.height");
  l.width = get_int("data.width");
  l.channels = get_int("data.channels");
  l.classes = get_int("data.classes");
  return l;
}

}  // namespace tricortex
