#pragma once

#include <map>
#include <string>

#include "tricortex/nn.hpp"

namespace tricortex {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
  int64_t format_version = 1;
  uint64_t seed = 0;
  int64_t epoch = 0;
  std::string config_text;  // resolved experiment config, round-trippable
  std::map<std::string, double> metrics;
};

/// One file: magic, JSON header (metadata plus a name -> offset/shape
/// index), then the raw little-endian 64-bit float blob. Doubles are
/// written byte-for-byte, so load(save(m)) is bit-exact.
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamRegistry& params);

/// Reads metadata only (to rebuild the model from its config first).
CheckpointMeta peek_checkpoint(const std::string& path);

/// Loads parameters by name into an existing registry; every name must
/// match with an identical shape, nothing extra on either side.
CheckpointMeta load_checkpoint(const std::string& path, ParamRegistry& params);

}  // namespace tricortex
