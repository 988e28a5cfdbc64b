#include "tricortex/synchrony.hpp"

#include <cmath>
#include <stdexcept>

namespace tricortex {

SyncPairs sample_pairs(int64_t dim, int64_t n_pairs, uint64_t seed) {
  int64_t all = dim * (dim + 1) / 2;
  if (n_pairs < 1 || n_pairs > all) {
    throw std::invalid_argument("sample_pairs: need 1 <= n_pairs <= D(D+1)/2 = " +
                                std::to_string(all) + ", got " +
                                std::to_string(n_pairs));
  }
  std::vector<int64_t> flat(all);
  for (int64_t k = 0; k < all; ++k) flat[k] = k;
  Rng rng(seed);
  rng.shuffle(flat);
  SyncPairs p;
  p.first.reserve(n_pairs);
  p.second.reserve(n_pairs);
  for (int64_t k = 0; k < n_pairs; ++k) {
    // unrank the k-th unordered pair (i <= j)
    int64_t idx = flat[k];
    int64_t i = 0;
    int64_t row = dim;
    while (idx >= row) {
      idx -= row;
      --row;
      ++i;
    }
    p.first.push_back(i);
    p.second.push_back(i + idx);
  }
  return p;
}

SyncHead::SyncHead(ParamRegistry& reg, int64_t dim, int64_t classes,
                   const SyncConfig& cfg, Rng& rng)
    : pairs_(sample_pairs(dim, cfg.n_pairs, cfg.pair_seed)) {
  log_rate_ =
      reg.add("sync.log_rate", Tensor::full({cfg.n_pairs}, cfg.log_rate_init));
  std::vector<double> w(classes * cfg.n_pairs);
  double std = std::sqrt(1.0 / static_cast<double>(cfg.n_pairs));
  for (double& v : w) v = rng.normal(0.0, std);
  w_out_ = reg.add("sync.w_out", Tensor::from({classes, cfg.n_pairs}, std::move(w)));
}

Tensor SyncHead::rates() const { return exp_op(log_rate_); }

SyncHead::Accum SyncHead::initial_accum(int64_t batch) const {
  Accum a;
  a.weighted_prod = Tensor::zeros({batch, pairs_.size()});
  a.weight_sum = Tensor::zeros({pairs_.size()});
  a.ticks = 0;
  return a;
}

void SyncHead::update(Accum& acc, const Tensor& z_combined,
                      const Tensor* phases) const {
  if (z_combined.ndim() != 2) {
    throw ShapeError("sync update: expected [B,D] state, got " +
                     shape_str(z_combined.shape()));
  }
  Tensor zi = gather_last(z_combined, pairs_.first);
  Tensor zj = gather_last(z_combined, pairs_.second);
  Tensor decay = exp_op(neg(rates()));  // [Ns]
  acc.weighted_prod = add(mul(acc.weighted_prod, decay), mul(zi, zj));
  acc.weight_sum = add(mul(acc.weight_sum, decay), 1.0);
  if (phases) {
    Tensor pi = gather_last(*phases, pairs_.first);
    Tensor pj = gather_last(*phases, pairs_.second);
    Tensor dphi = sub(pi, pj);  // [G, Ns]
    if (acc.ticks == 0) {
      acc.phase_re = cos_op(dphi);
      acc.phase_im = sin_op(dphi);
    } else {
      acc.phase_re = add(acc.phase_re, cos_op(dphi));
      acc.phase_im = add(acc.phase_im, sin_op(dphi));
    }
  }
  ++acc.ticks;
}

Tensor SyncHead::phase_weights(const Accum& acc) const {
  if (!acc.phase_re.defined()) {
    return Tensor::full({1, pairs_.size()}, 1.0);
  }
  // tiny bias keeps sqrt differentiable when the phasor sum cancels
  Tensor norm2 = add(add(mul(acc.phase_re, acc.phase_re),
                         mul(acc.phase_im, acc.phase_im)),
                     1e-300);
  return mul(sqrt_op(norm2), 1.0 / static_cast<double>(acc.ticks));
}

Tensor SyncHead::representation(const Accum& acc) const {
  if (acc.ticks == 0) {
    throw std::logic_error("sync representation requested before any tick");
  }
  Tensor s = div(acc.weighted_prod, sqrt_op(acc.weight_sum));
  if (acc.phase_re.defined()) {
    s = mul(s, phase_weights(acc));
  }
  return s;
}

Tensor SyncHead::logits(const Tensor& s) const {
  if (s.ndim() != 2 || s.dim(1) != pairs_.size()) {
    throw ShapeError("sync logits: representation " + shape_str(s.shape()) +
                     " does not match " + std::to_string(pairs_.size()) +
                     " pairs");
  }
  return matmul_nt(s, w_out_);
}

}  // namespace tricortex
