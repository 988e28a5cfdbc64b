#include "tricortex/perception.hpp"

#include <cmath>

namespace tricortex {

Tensor positional_embedding(int64_t h, int64_t w, int64_t d) {
  if (d % 2 != 0) {
    throw ShapeError("positional_embedding: channel count must be even, got " +
                     std::to_string(d));
  }
  int64_t half = d / 2;
  std::vector<double> vals(h * w * d);
  auto fill = [&](int64_t base, int64_t pos, double* out) {
    for (int64_t k = 0; k < half; ++k) {
      double rate = std::pow(10000.0, -2.0 * (k / 2) / static_cast<double>(half));
      double angle = pos * rate;
      out[base + k] = (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  };
  for (int64_t r = 0; r < h; ++r) {
    for (int64_t c = 0; c < w; ++c) {
      double* cell = vals.data() + (r * w + c) * d;
      fill(0, r, cell);
      fill(half, c, cell);
    }
  }
  return Tensor::from({h, w, d}, std::move(vals));
}

PerceptionEncoder::PerceptionEncoder(ParamRegistry& reg,
                                     const PerceptionConfig& cfg,
                                     int64_t in_channels, Rng& rng)
    : cfg_(cfg) {
  std::vector<int64_t> outs = cfg.widths;
  outs.push_back(cfg.feature_dim);
  int64_t cin = in_channels;
  for (size_t i = 0; i < outs.size(); ++i) {
    std::string name = "perception.block" + std::to_string(i);
    Block b;
    b.kernel = init_tensor(reg, name + ".kernel", {3, 3, cin, outs[i]}, Init::kHe,
                           9 * cin, rng);
    b.bias = reg.add(name + ".bias", Tensor::zeros({outs[i]}));
    b.norm = LayerNormAffine(reg, name + ".norm", outs[i]);
    blocks_.push_back(std::move(b));
    cin = outs[i];
  }
  w_k_ = init_tensor(reg, "perception.w_k", {cfg.feature_dim, cfg.d_k},
                     Init::kXavier, cfg.feature_dim, rng);
  w_v_ = init_tensor(reg, "perception.w_v", {cfg.feature_dim, cfg.d_v},
                     Init::kXavier, cfg.feature_dim, rng);
}

FeatureMap PerceptionEncoder::encode(const Tensor& pixels) const {
  if (pixels.ndim() != 4) {
    throw ShapeError("encode: expected [B,H,W,C], got " +
                     shape_str(pixels.shape()));
  }
  if (!all_finite(pixels.values())) {
    throw NumericalError("encode: non-finite pixel values");
  }
  int64_t min_side = 1;
  for (size_t i = 0; i < blocks_.size(); ++i) min_side *= 2;
  if (pixels.dim(1) < min_side || pixels.dim(2) < min_side) {
    throw ShapeError("encode: spatial dims " + shape_str(pixels.shape()) +
                     " too small for " + std::to_string(blocks_.size()) +
                     " stride-2 blocks (need >= " + std::to_string(min_side) +
                     ")");
  }
  Tensor x = pixels;
  for (const Block& b : blocks_) {
    x = conv2d(x, b.kernel, /*stride=*/2, /*pad=*/1);
    x = add(x, b.bias);
    x = relu(x);
    x = b.norm(x);  // per-position normalization over channels
  }
  FeatureMap fm;
  fm.h = x.dim(1);
  fm.w = x.dim(2);
  Tensor pos = positional_embedding(fm.h, fm.w, cfg_.feature_dim);
  fm.features = add(x, pos);
  int64_t batch = x.dim(0);
  fm.flat = reshape(fm.features, {batch, fm.h * fm.w, cfg_.feature_dim});
  fm.pooled = reduce_mean(fm.flat, 1);
  return fm;
}

KvPair PerceptionEncoder::project_kv(const FeatureMap& fmap) const {
  return KvPair{matmul(fmap.flat, w_k_), matmul(fmap.flat, w_v_)};
}

}  // namespace tricortex
