#pragma once

#include <map>
#include <string>
#include <vector>

#include "tricortex/data.hpp"
#include "tricortex/model.hpp"
#include "tricortex/training.hpp"

namespace tricortex {

/// Unknown keys, unparsable values, inconsistent settings.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat dotted-key experiment configuration. One `key = value` per line,
/// `#` comments. Every key must be registered; unknown keys are rejected
/// so typos cannot silently fall back to defaults.
class ExperimentConfig {
 public:
  ExperimentConfig();  // all defaults

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_text(const std::string& text,
                                    const std::string& origin = "<text>");

  /// Validates the key and that the value parses at its declared type.
  void set(const std::string& key, const std::string& value);

  bool get_bool(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<int64_t> get_int_list(const std::string& key) const;

  /// Canonical text form in registry order; parsing it back reproduces
  /// this configuration exactly.
  std::string echo() const;

  /// Keys in registry order with current values.
  std::vector<std::pair<std::string, std::string>> entries() const;

  // ---- typed bundles ----
  /// classes: resolved class count of the dataset in play.
  ModelConfig model_config(int64_t classes) const;
  TrainConfig train_config() const;
  StopPolicy stop_policy() const;
  BinaryLayout binary_layout() const;

  /// Number of classes implied by the data source settings.
  int64_t data_classes() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tricortex
