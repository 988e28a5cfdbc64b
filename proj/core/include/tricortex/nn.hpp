#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tricortex/ops.hpp"
#include "tricortex/rng.hpp"
#include "tricortex/tensor.hpp"

namespace tricortex {

/// Named learnable tensors in registration order. Registration order is
/// the optimizer's iteration order, so it is part of run determinism.
class ParamRegistry {
 public:
  Tensor add(const std::string& name, Tensor t);
  const std::vector<std::pair<std::string, Tensor>>& items() const {
    return items_;
  }
  Tensor find(const std::string& name) const;
  int64_t total_size() const;
  void zero_grads();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

enum class Init { kHe, kXavier, kZero };

Tensor init_tensor(ParamRegistry& reg, const std::string& name, Shape shape,
                   Init init, int64_t fan_in, Rng& rng);

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out]; undefined when bias-free

  Linear() = default;
  Linear(ParamRegistry& reg, const std::string& name, int64_t in, int64_t out,
         Rng& rng, Init init = Init::kHe, bool bias = true);

  /// x [..., in] -> [..., out]
  Tensor operator()(const Tensor& x) const;
};

/// layernorm followed by a learned per-channel affine.
struct LayerNormAffine {
  Tensor gain;  // [d], init 1
  Tensor bias;  // [d], init 0

  LayerNormAffine() = default;
  LayerNormAffine(ParamRegistry& reg, const std::string& name, int64_t d);

  Tensor operator()(const Tensor& x) const;
};

}  // namespace tricortex
