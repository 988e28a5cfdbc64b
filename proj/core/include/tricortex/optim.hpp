#pragma once

#include <vector>

#include "tricortex/nn.hpp"

namespace tricortex {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam with bias-corrected moments over a parameter registry.
class Adam {
 public:
  explicit Adam(ParamRegistry& params, AdamConfig cfg = {});

  /// Applies one update from the accumulated gradients and clears them.
  /// Returns false (and mutates nothing) when any gradient is non-finite.
  bool step(double lr);

  int64_t steps_taken() const { return t_; }

 private:
  ParamRegistry& params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

/// lr0 * (1 + cos(pi * step / total)) / 2; step must lie in [0, total].
double cosine_lr(int64_t step, int64_t total_steps, double lr0);

/// Scales all gradients so the global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_grad_norm(ParamRegistry& params, double max_norm);

}  // namespace tricortex
