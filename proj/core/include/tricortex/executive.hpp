#pragma once

#include <deque>

#include "tricortex/nn.hpp"
#include "tricortex/perception.hpp"
#include "tricortex/tensor.hpp"

namespace tricortex {

struct SdaConfig {
  bool enabled = true;
  int64_t width = 0;      // deep pathway top width; 0 means 2*D
  double dropout = 0.1;
};

struct TickState {
  Tensor z;           // [B, D] raw internal state
  Tensor z_combined;  // [B, D] oscillation-augmented state
  Tensor o;           // [B, d_v] attention output of this tick
  int64_t tick = 0;   // 1-based once the loop runs
};

/// Ring buffer of the last M activation vectors; recorded for trace
/// export, not consumed by the update path.
class ActivationMemory {
 public:
  explicit ActivationMemory(int64_t capacity);
  void push(Tensor a);
  int64_t size() const { return static_cast<int64_t>(items_.size()); }
  int64_t capacity() const { return cap_; }
  /// Oldest to newest.
  std::vector<Tensor> window() const;
  Tensor newest() const;

 private:
  int64_t cap_;
  std::deque<Tensor> items_;
};

struct AttentionResult {
  Tensor output;   // [B, d_v]
  Tensor weights;  // [B, N] softmax rows, retained for traces
};

/// Scaled dot-product attention of one query row per sample over the
/// perceptual key/value grid. `temp` optionally scales the logits
/// (attention modulation); pass nullptr for plain attention.
AttentionResult attend(const Tensor& q, const KvPair& kv, const Tensor* temp);

/// Complexity estimation over pooled features: alpha = sigmoid(MLP(pool)),
/// zero-initialized head so alpha starts at exactly 0.5.
class ComplexityNet {
 public:
  ComplexityNet(ParamRegistry& reg, const std::string& name, int64_t d,
                Rng& rng);
  /// pooled [B, d] -> alpha [B] in (0, 1)
  Tensor operator()(const Tensor& pooled) const;

 private:
  Linear l1_, l2_;
};

/// Deep (U-shaped, skip-connected) and shallow update pathways mixed by
/// the complexity coefficient.
class SynapsePathways {
 public:
  SynapsePathways(ParamRegistry& reg, const std::string& name, int64_t in_dim,
                  int64_t state_dim, const SdaConfig& cfg, Rng& rng);

  /// x = concat(z_combined, o). Gains, when given, multiply the first
  /// hidden layer of each pathway. `drop_rng` non-null enables dropout.
  Tensor deep(const Tensor& x, const Tensor* gain, Rng* drop_rng) const;
  Tensor shallow(const Tensor& x, const Tensor* gain, Rng* drop_rng) const;

  /// alpha [B] in (0,1): alpha*deep + (1-alpha)*shallow, row-wise.
  static Tensor mix(const Tensor& deep_out, const Tensor& shallow_out,
                    const Tensor& alpha);

  int64_t deep_hidden() const { return width_; }
  int64_t shallow_hidden() const { return state_dim_; }

 private:
  int64_t width_;
  int64_t state_dim_;
  double dropout_;
  Linear d0_, d1_, d2_, d3_;
  LayerNormAffine dn0_, dn1_, dn2_;
  Linear s0_, s1_;
  LayerNormAffine sn_;
};

/// z' = z + a (residual on the raw state).
Tensor update_state(const Tensor& z, const Tensor& a);

}  // namespace tricortex
