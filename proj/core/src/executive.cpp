#include "tricortex/executive.hpp"

#include <cmath>

namespace tricortex {

ActivationMemory::ActivationMemory(int64_t capacity) : cap_(capacity) {
  if (capacity < 1) {
    throw std::invalid_argument("activation memory capacity must be >= 1");
  }
}

void ActivationMemory::push(Tensor a) {
  items_.push_back(std::move(a));
  while (static_cast<int64_t>(items_.size()) > cap_) items_.pop_front();
}

std::vector<Tensor> ActivationMemory::window() const {
  return {items_.begin(), items_.end()};
}

Tensor ActivationMemory::newest() const {
  if (items_.empty()) {
    throw std::out_of_range("activation memory is empty");
  }
  return items_.back();
}

AttentionResult attend(const Tensor& q, const KvPair& kv, const Tensor* temp) {
  const Shape& sq = q.shape();
  const Shape& sk = kv.keys.shape();
  if (sq.size() != 2 || sk.size() != 3 || sq[1] != sk[2]) {
    throw ShapeError("attend: query " + shape_str(sq) + " vs keys " +
                     shape_str(sk) + " (d_q must equal d_k)");
  }
  if (sk[1] == 0) throw ShapeError("attend: empty key/value grid");
  int64_t batch = sq[0], d_k = sq[1], n = sk[1];
  Tensor scores = reshape(matmul(kv.keys, reshape(q, {batch, d_k, 1})),
                          {batch, n});  // [B, N]
  scores = mul(scores, 1.0 / std::sqrt(static_cast<double>(d_k)));
  if (temp) scores = mul(scores, *temp);
  Tensor weights = softmax(scores);
  Tensor out = reshape(matmul(reshape(weights, {batch, 1, n}), kv.values),
                       {batch, kv.values.dim(2)});
  return {out, weights};
}

ComplexityNet::ComplexityNet(ParamRegistry& reg, const std::string& name,
                             int64_t d, Rng& rng)
    : l1_(reg, name + ".l1", d, 32, rng, Init::kHe),
      l2_(reg, name + ".l2", 32, 1, rng, Init::kZero) {}

Tensor ComplexityNet::operator()(const Tensor& pooled) const {
  Tensor a = sigmoid(l2_(relu(l1_(pooled))));  // [B, 1]
  return reshape(a, {pooled.dim(0)});
}

SynapsePathways::SynapsePathways(ParamRegistry& reg, const std::string& name,
                                 int64_t in_dim, int64_t state_dim,
                                 const SdaConfig& cfg, Rng& rng)
    : width_(cfg.width > 0 ? cfg.width : 2 * state_dim),
      state_dim_(state_dim),
      dropout_(cfg.dropout),
      d0_(reg, name + ".deep0", in_dim, width_, rng),
      d1_(reg, name + ".deep1", width_, width_ / 2, rng),
      d2_(reg, name + ".deep2", width_ / 2, width_, rng),
      d3_(reg, name + ".deep3", width_, state_dim, rng, Init::kXavier),
      dn0_(reg, name + ".deep_norm0", width_),
      dn1_(reg, name + ".deep_norm1", width_ / 2),
      dn2_(reg, name + ".deep_norm2", width_),
      s0_(reg, name + ".shallow0", in_dim, state_dim, rng),
      s1_(reg, name + ".shallow1", state_dim, state_dim, rng, Init::kXavier),
      sn_(reg, name + ".shallow_norm", state_dim) {}

Tensor SynapsePathways::deep(const Tensor& x, const Tensor* gain,
                             Rng* drop_rng) const {
  Tensor h1 = dn0_(relu(d0_(x)));  // down, width w
  if (gain) h1 = mul(h1, *gain);
  if (drop_rng) h1 = dropout(h1, dropout_, *drop_rng);
  Tensor h2 = dn1_(relu(d1_(h1)));  // bottleneck, w/2
  if (drop_rng) h2 = dropout(h2, dropout_, *drop_rng);
  Tensor h3 = dn2_(relu(d2_(h2)));  // up, back to w
  h3 = add(h3, h1);                 // skip between mirror levels
  if (drop_rng) h3 = dropout(h3, dropout_, *drop_rng);
  return d3_(h3);
}

Tensor SynapsePathways::shallow(const Tensor& x, const Tensor* gain,
                                Rng* drop_rng) const {
  Tensor h = sn_(relu(s0_(x)));
  if (gain) h = mul(h, *gain);
  if (drop_rng) h = dropout(h, dropout_, *drop_rng);
  return s1_(h);
}

Tensor SynapsePathways::mix(const Tensor& deep_out, const Tensor& shallow_out,
                            const Tensor& alpha) {
  if (alpha.ndim() != 1 || alpha.dim(0) != deep_out.dim(0)) {
    throw ShapeError("mix: alpha " + shape_str(alpha.shape()) +
                     " does not match batch of " +
                     shape_str(deep_out.shape()));
  }
  for (double a : alpha.values()) {
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument("mix: alpha must lie strictly in (0,1), got " +
                                  std::to_string(a));
    }
  }
  Tensor a2 = reshape(alpha, {alpha.dim(0), 1});
  return add(mul(a2, deep_out), mul(sub(Tensor::scalar(1.0), a2), shallow_out));
}

Tensor update_state(const Tensor& z, const Tensor& a) {
  if (z.shape() != a.shape()) {
    throw ShapeError("update_state: " + shape_str(z.shape()) + " vs " +
                     shape_str(a.shape()));
  }
  return add(z, a);
}

}  // namespace tricortex
