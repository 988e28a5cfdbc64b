#pragma once

#include <memory>
#include <vector>

#include "tricortex/control.hpp"
#include "tricortex/executive.hpp"
#include "tricortex/oscillators.hpp"
#include "tricortex/perception.hpp"
#include "tricortex/synchrony.hpp"

namespace tricortex {

struct ModelConfig {
  int64_t state_dim = 128;  // D
  int64_t classes = 10;
  int64_t in_channels = 3;
  int64_t memory_len = 10;  // activation memory M
  bool query_from_combined = true;
  uint64_t seed = 1;
  PerceptionConfig perception;
  OscConfig osc;
  SdaConfig sda;
  SyncConfig sync;
  StopPolicy policy;
};

struct RunOptions {
  /// Gate samples per tick (inference). The computed trajectory is the
  /// same as a full-T run; per-sample outputs freeze at the stop tick and
  /// the loop ends once every sample has stopped. Off: everyone runs T.
  bool gate = false;
  /// Non-null enables pathway dropout (training).
  Rng* dropout_rng = nullptr;
  /// When given, per-tick cross-entropy losses are produced (training).
  const std::vector<int64_t>* labels = nullptr;
  /// Overrides the model's stop policy for this run.
  const StopPolicy* policy = nullptr;
};

struct ForwardResult {
  RunTrace trace;
  std::vector<Tensor> tick_losses;  // one [B] tensor per computed tick
};

/// The assembled tick-based architecture: perceptual encoder, oscillator
/// bank with neuromodulation, attention + synaptic pathway executive, and
/// synchronization readout.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  /// Full forward over internal ticks. Record-on-tape iff a tape scope is
  /// active in the caller.
  ForwardResult run(const Tensor& pixels, const RunOptions& opts = {}) const;

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& params() { return reg_; }
  const ParamRegistry& params() const { return reg_; }
  const OscillatorBank& bank() const { return bank_; }
  const SyncHead& sync_head() const { return sync_; }
  const PerceptionEncoder& perception() const { return perception_; }

 private:
  Model(const ModelConfig& cfg, Rng rng);

  ModelConfig cfg_;
  ParamRegistry reg_;
  PerceptionEncoder perception_;
  Tensor w_q_;  // [D, d_k]
  OscillatorBank bank_;
  ModulationNet gamma_;
  ComplexityNet omega_;
  SynapsePathways pathways_;
  FilmModulator film_;
  SyncHead sync_;
  Tensor z0_;  // [D] learnable initial state
};

}  // namespace tricortex
