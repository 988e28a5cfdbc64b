#pragma once

#include <vector>

#include "tricortex/nn.hpp"
#include "tricortex/tensor.hpp"

namespace tricortex {

struct SyncConfig {
  int64_t n_pairs = 512;       // N_s sampled (i,j) pairs
  uint64_t pair_seed = 7001;   // fixed at init so checkpoints stay portable
  double log_rate_init = -2.0; // decay rates start at exp(-2)
};

/// Sampled neuron pairs, i <= j, self-pairs allowed, no duplicates.
struct SyncPairs {
  std::vector<int64_t> first;
  std::vector<int64_t> second;
  int64_t size() const { return static_cast<int64_t>(first.size()); }
};

/// Uniform draw of n_pairs from the D(D+1)/2 unordered pairs without
/// replacement; deterministic per seed.
SyncPairs sample_pairs(int64_t dim, int64_t n_pairs, uint64_t seed);

/// Synchronization representation and output head. Per-pair entries are
/// maintained incrementally, O(1) per tick:
///   S_ij = (sum_tau w_tau z_i z_j) / sqrt(sum_tau w_tau) * |mean_tau e^{i dphi}|
/// with w_tau = exp(-r_ij (t - tau)); the phase factor averages uniformly
/// over ticks and is 1 when no phase history is supplied.
class SyncHead {
 public:
  SyncHead(ParamRegistry& reg, int64_t dim, int64_t classes,
           const SyncConfig& cfg, Rng& rng);

  struct Accum {
    Tensor weighted_prod;  // [B, Ns]
    Tensor weight_sum;     // [Ns]
    Tensor phase_re;       // [G, Ns]; undefined when phases are not tracked
    Tensor phase_im;       // [G, Ns]
    int64_t ticks = 0;
  };

  Accum initial_accum(int64_t batch) const;

  /// Folds one tick of combined state (and oscillator phases, when
  /// given) into the accumulators.
  void update(Accum& acc, const Tensor& z_combined, const Tensor* phases) const;

  /// S values for the sampled pairs, [B, Ns].
  Tensor representation(const Accum& acc) const;

  /// Phase weights |mean e^{i dphi}| in [0,1], [G, Ns]; all ones when no
  /// phase history was folded.
  Tensor phase_weights(const Accum& acc) const;

  /// y = W_out S_out, [B, classes].
  Tensor logits(const Tensor& s) const;

  const SyncPairs& pairs() const { return pairs_; }
  /// r_ij >= 0, stored as exp of a free parameter.
  Tensor rates() const;
  const Tensor& out_weight() const { return w_out_; }

 private:
  SyncPairs pairs_;
  Tensor log_rate_;  // [Ns] learnable
  Tensor w_out_;     // [classes, Ns] learnable
};

}  // namespace tricortex
