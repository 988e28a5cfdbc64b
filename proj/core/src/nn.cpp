#include "tricortex/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace tricortex {

Tensor ParamRegistry::add(const std::string& name, Tensor t) {
  for (const auto& [n, _] : items_) {
    if (n == name) throw std::logic_error("duplicate parameter name: " + name);
  }
  t.set_requires_grad(true);
  items_.emplace_back(name, t);
  return t;
}

Tensor ParamRegistry::find(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named " + name);
}

int64_t ParamRegistry::total_size() const {
  int64_t n = 0;
  for (const auto& [_, t] : items_) n += t.numel();
  return n;
}

void ParamRegistry::zero_grads() {
  for (auto& [_, t] : items_) t.zero_grad();
}

Tensor init_tensor(ParamRegistry& reg, const std::string& name, Shape shape,
                   Init init, int64_t fan_in, Rng& rng) {
  int64_t n = shape_numel(shape);
  std::vector<double> vals(n, 0.0);
  if (init != Init::kZero) {
    double std =
        init == Init::kHe ? std::sqrt(2.0 / fan_in) : std::sqrt(1.0 / fan_in);
    for (double& v : vals) v = rng.normal(0.0, std);
  }
  return reg.add(name, Tensor::from(std::move(shape), std::move(vals)));
}

Linear::Linear(ParamRegistry& reg, const std::string& name, int64_t in,
               int64_t out, Rng& rng, Init init, bool bias) {
  w = init_tensor(reg, name + ".w", {in, out}, init, in, rng);
  if (bias) b = reg.add(name + ".b", Tensor::zeros({out}));
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x, w);
  if (b.defined()) y = add(y, b);
  return y;
}

LayerNormAffine::LayerNormAffine(ParamRegistry& reg, const std::string& name,
                                 int64_t d) {
  gain = reg.add(name + ".gain", Tensor::full({d}, 1.0));
  bias = reg.add(name + ".bias", Tensor::zeros({d}));
}

Tensor LayerNormAffine::operator()(const Tensor& x) const {
  return add(mul(layernorm(x), gain), bias);
}

}  // namespace tricortex
