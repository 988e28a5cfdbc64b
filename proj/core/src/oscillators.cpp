#include "tricortex/oscillators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tricortex {

std::array<double, 2> band_range_hz(Band band) {
  switch (band) {
    case Band::kGamma: return {40.0, 100.0};
    case Band::kBeta: return {13.0, 30.0};
    case Band::kAlpha: return {8.0, 12.0};
    case Band::kTheta: return {4.0, 7.0};
  }
  throw std::logic_error("unknown band");
}

OscillatorBank::OscillatorBank(ParamRegistry& reg, int64_t dim, uint64_t seed,
                               double dt_ms)
    : dim_(dim) {
  if (dim < 4) {
    throw std::invalid_argument("oscillator bank needs D >= 4, got " +
                                std::to_string(dim));
  }
  Rng rng(seed);
  bands_.resize(dim);
  std::vector<double> freq(dim);
  double dt_s = dt_ms / 1000.0;
  for (int64_t d = 0; d < dim; ++d) {
    Band band = static_cast<Band>(d % 4);  // round-robin keeps populations even
    bands_[d] = band;
    auto [lo, hi] = band_range_hz(band);
    freq[d] = rng.uniform(lo, hi) * dt_s;  // Hz -> cycles/tick
  }
  base_freq_ = Tensor::from({dim}, std::move(freq));
  freq_offset_ = reg.add("osc.freq_offset", Tensor::zeros({dim}));
  init_phase_ = reg.add("osc.init_phase", Tensor::zeros({dim}));
  init_amplitude_ = reg.add("osc.init_amplitude", Tensor::full({dim}, 1.0));
}

BankState OscillatorBank::initial_state(int64_t groups) const {
  Tensor tile = Tensor::zeros({groups, 1});
  BankState s;
  s.phase = wrap_2pi(add(tile, init_phase_));
  s.amplitude = relu(add(tile, init_amplitude_));
  return s;
}

BankState OscillatorBank::advance(const BankState& s,
                                  const ModulationSignals* mods,
                                  double kappa_freq, double kappa_phase,
                                  double kappa_amp) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Tensor omega = add(base_freq_, freq_offset_);  // [D]
  BankState next;
  if (mods) {
    if (!all_finite(mods->dfreq.values()) || !all_finite(mods->dphase.values()) ||
        !all_finite(mods->damp.values())) {
      throw NumericalError("oscillator advance: non-finite modulation signals");
    }
    Tensor omega_eff = mul(omega, add(mul(mods->dfreq, kappa_freq), 1.0));
    next.phase = wrap_2pi(add(add(s.phase, mul(omega_eff, two_pi)),
                              mul(mods->dphase, kappa_phase)));
    next.amplitude = relu(mul(s.amplitude, add(mul(mods->damp, kappa_amp), 1.0)));
  } else {
    next.phase = wrap_2pi(add(s.phase, mul(omega, two_pi)));
    next.amplitude = s.amplitude;
  }
  return next;
}

Tensor OscillatorBank::oscillatory_state(const BankState& s) const {
  return mul(s.amplitude, sin_op(s.phase));
}

Tensor combine_state(const Tensor& z, const Tensor& z_osc, double lambda) {
  if (lambda == 0.0) return z;
  return add(z, mul(z_osc, lambda));
}

ModulationNet::ModulationNet(ParamRegistry& reg, const std::string& name,
                             int64_t d_v, int64_t hidden, int64_t dim, Rng& rng)
    : l1_(reg, name + ".l1", d_v, hidden, rng, Init::kHe),
      l2_(reg, name + ".l2", hidden, 3 * dim, rng, Init::kZero),
      dim_(dim) {}

ModulationSignals ModulationNet::operator()(const Tensor& o,
                                            bool per_sample) const {
  if (!all_finite(o.values())) {
    throw NumericalError("modulation net: non-finite attention output");
  }
  Tensor raw = tanh_op(l2_(relu(l1_(o))));  // [B, 3D]
  Tensor applied = per_sample ? raw : reduce_mean(raw, 0, /*keepdims=*/true);
  std::vector<int64_t> idx(dim_);
  ModulationSignals m;
  for (int64_t k = 0; k < dim_; ++k) idx[k] = k;
  m.dfreq = gather_last(applied, idx);
  for (int64_t k = 0; k < dim_; ++k) idx[k] = dim_ + k;
  m.dphase = gather_last(applied, idx);
  for (int64_t k = 0; k < dim_; ++k) idx[k] = 2 * dim_ + k;
  m.damp = gather_last(applied, idx);
  m.raw = raw;
  return m;
}

FilmModulator::FilmModulator(ParamRegistry& reg, const std::string& name,
                             int64_t dim, int64_t deep_hidden,
                             int64_t shallow_hidden, Rng& rng)
    : g_deep_(reg, name + ".deep", 3 * dim, deep_hidden, rng, Init::kZero),
      g_shallow_(reg, name + ".shallow", 3 * dim, shallow_hidden, rng,
                 Init::kZero) {}

Tensor FilmModulator::deep_gain(const Tensor& raw) const {
  return add(tanh_op(g_deep_(raw)), 1.0);
}

Tensor FilmModulator::shallow_gain(const Tensor& raw) const {
  return add(tanh_op(g_shallow_(raw)), 1.0);
}

double phase_coherence(std::span<const double> phases) {
  if (phases.empty()) {
    throw std::invalid_argument("phase_coherence: empty phase vector");
  }
  double re = 0, im = 0;
  for (double p : phases) {
    re += std::cos(p);
    im += std::sin(p);
  }
  double n = static_cast<double>(phases.size());
  return std::sqrt(re * re + im * im) / n;
}

double entropy_certainty(std::span<const double> probs) {
  if (probs.size() < 2) {
    throw std::invalid_argument("entropy_certainty: need at least 2 classes");
  }
  double sum = 0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("entropy_certainty: negative probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "entropy_certainty: probabilities sum to " + std::to_string(sum));
  }
  double h = 0;
  for (double p : probs) {
    if (p > 0) h -= p * std::log(p);
  }
  double c = 1.0 - h / std::log(static_cast<double>(probs.size()));
  return std::min(1.0, std::max(0.0, c));
}

CertaintyRecord total_certainty(double c_entropy, double c_phase, double beta) {
  if (beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("total_certainty: beta must lie in [0,1]");
  }
  CertaintyRecord r;
  r.entropy_certainty = c_entropy;
  r.phase_certainty = c_phase;
  r.beta = beta;
  r.total = beta * c_entropy + (1.0 - beta) * c_phase;
  return r;
}

}  // namespace tricortex
