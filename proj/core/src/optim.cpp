#include "tricortex/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tricortex {

Adam::Adam(ParamRegistry& params, AdamConfig cfg) : params_(params), cfg_(cfg) {
  for (const auto& [_, t] : params_.items()) {
    m_.emplace_back(t.numel(), 0.0);
    v_.emplace_back(t.numel(), 0.0);
  }
}

bool Adam::step(double lr) {
  for (auto& [_, t] : params_.items()) {
    Tensor p = t;
    if (p.has_grad() && !all_finite(p.grad())) return false;
  }
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.items().size(); ++i) {
    Tensor p = params_.items()[i].second;
    auto& vals = p.raw_values();
    std::span<const double> g = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < vals.size(); ++j) {
      double gj = g.empty() ? 0.0 : g[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      vals[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p.zero_grad();
  }
  return true;
}

double cosine_lr(int64_t step, int64_t total_steps, double lr0) {
  if (step < 0 || step > total_steps) {
    throw std::invalid_argument("cosine_lr: step " + std::to_string(step) +
                                " outside [0, " + std::to_string(total_steps) +
                                "]");
  }
  double frac = total_steps == 0
                    ? 0.0
                    : static_cast<double>(step) / static_cast<double>(total_steps);
  return lr0 * (1.0 + std::cos(std::numbers::pi * frac)) / 2.0;
}

double clip_grad_norm(ParamRegistry& params, double max_norm) {
  double sq = 0;
  for (auto& [_, t] : params.items()) {
    Tensor p = t;
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double scale = max_norm / norm;
    for (auto& [_, t] : params.items()) {
      Tensor p = t;
      if (!p.has_grad()) continue;
      for (double& g : p.grad_buffer()) g *= scale;
    }
  }
  return norm;
}

}  // namespace tricortex
