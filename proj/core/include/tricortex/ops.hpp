#pragma once

#include <vector>

#include "tricortex/tensor.hpp"

namespace tricortex {

// Elementwise with right-aligned broadcasting (a dim must equal b dim or
// either must be 1). Gradients are reduced back over broadcast axes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, double c);
Tensor mul(const Tensor& a, double c);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor sin_op(const Tensor& x);
Tensor cos_op(const Tensor& x);
Tensor exp_op(const Tensor& x);
Tensor sqrt_op(const Tensor& x);
Tensor neg(const Tensor& x);

/// Wraps values into [0, 2pi). The shift is locally constant, so the
/// gradient passes through unchanged.
Tensor wrap_2pi(const Tensor& x);

/// matmul supports [m,k]x[k,n], batched [b,m,k]x[b,k,n], and a batched
/// left with shared right [b,m,k]x[k,n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// [m,k] x [n,k]^T -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// NHWC convolution, kernel [kh,kw,Cin,Cout], zero padding. Implemented
/// as im2col followed by one matmul.
Tensor conv2d(const Tensor& x, const Tensor& w, int64_t stride, int64_t pad);

/// Softmax over the last axis, max-subtracted.
Tensor softmax(const Tensor& x);

/// Normalizes the last axis to zero mean, unit variance (no affine).
Tensor layernorm(const Tensor& x, double eps = 1e-5);

/// Per-sample softmax cross-entropy: logits [B,C], labels in [0,C).
/// Returns losses [B].
Tensor cross_entropy(const Tensor& logits, const std::vector<int64_t>& labels);

Tensor concat(const Tensor& a, const Tensor& b);  // last axis
Tensor reshape(const Tensor& x, Shape shape);

Tensor reduce_sum(const Tensor& x, int64_t axis, bool keepdims = false);
Tensor reduce_mean(const Tensor& x, int64_t axis, bool keepdims = false);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

/// out[..., j] = x[..., idx[j]] along the last axis.
Tensor gather_last(const Tensor& x, const std::vector<int64_t>& idx);

/// Keeps each component with probability 1-p and rescales by 1/(1-p).
/// p == 0 is the identity and consumes no randomness.
class Rng;
Tensor dropout(const Tensor& x, double p, Rng& rng);

/// Runs the reverse sweep on the active tape. The loss must be scalar.
void backward(const Tensor& loss);

// ---- value-space helpers (no tape participation) ----

/// Stable softmax of one logit row.
std::vector<double> softmax_values(std::span<const double> logits);
/// Shannon entropy in nats of a probability row; 0 ln 0 := 0.
double entropy_nats(std::span<const double> probs);
int64_t argmax(std::span<const double> v);
bool all_finite(std::span<const double> v);

}  // namespace tricortex
