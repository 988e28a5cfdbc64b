#pragma once

#include <functional>
#include <span>
#include <string>

#include "tricortex/tensor.hpp"

namespace tricortex {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int64_t worst_component = -1;
  std::string worst_param;
  /// Set when the central second difference blows up at some component,
  /// i.e. f has a slope discontinuity there and the comparison is void.
  bool kink_detected = false;
  int64_t kink_component = -1;
};

/// Central finite-difference check of reverse-mode gradients. `f` must
/// re-evaluate the scalar loss from the current contents of `x` (and of
/// any other leaves it closes over). Relative error per component is
/// |analytic - fd| / max(1, |analytic|).
GradCheckResult grad_check(const std::function<Tensor()>& f, Tensor x, double h);

/// Same check across a set of named parameters, one backward pass total.
/// `max_components` < 0 checks every component; otherwise a deterministic
/// subsample per parameter.
GradCheckResult grad_check_params(
    const std::function<Tensor()>& f,
    std::span<const std::pair<std::string, Tensor>> params, double h,
    int64_t max_components = -1);

}  // namespace tricortex
