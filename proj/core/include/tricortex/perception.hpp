#pragma once

#include <vector>

#include "tricortex/nn.hpp"
#include "tricortex/tensor.hpp"

namespace tricortex {

struct PerceptionConfig {
  int64_t feature_dim = 64;             // d: channels of the final block
  std::vector<int64_t> widths = {16, 32};  // hidden block widths; each block halves H,W
  int64_t d_k = 64;
  int64_t d_v = 64;
};

struct FeatureMap {
  Tensor features;  // [B, h, w, d]
  Tensor flat;      // [B, N, d], N = h*w
  Tensor pooled;    // [B, d], spatial mean
  int64_t h = 0, w = 0;
};

struct KvPair {
  Tensor keys;    // [B, N, d_k]
  Tensor values;  // [B, N, d_v]
};

/// Fixed 2-D sinusoidal embedding, [h, w, d]; the first d/2 channels
/// encode the row index, the rest the column. d must be even.
Tensor positional_embedding(int64_t h, int64_t w, int64_t d);

/// Reduced convolutional encoder: stride-2 conv blocks (conv -> relu ->
/// layernorm over channels), widths... -> feature_dim, then positional
/// embedding and key/value projections.
class PerceptionEncoder {
 public:
  PerceptionEncoder(ParamRegistry& reg, const PerceptionConfig& cfg,
                    int64_t in_channels, Rng& rng);

  /// pixels [B, H, W, C]; H and W must survive one halving per block.
  FeatureMap encode(const Tensor& pixels) const;
  KvPair project_kv(const FeatureMap& fmap) const;

  const PerceptionConfig& config() const { return cfg_; }

 private:
  struct Block {
    Tensor kernel;  // [3, 3, Cin, Cout]
    Tensor bias;    // [Cout]
    LayerNormAffine norm;
  };
  PerceptionConfig cfg_;
  std::vector<Block> blocks_;
  Tensor w_k_;  // [d, d_k]
  Tensor w_v_;  // [d, d_v]
};

}  // namespace tricortex
