#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "tricortex/nn.hpp"
#include "tricortex/tensor.hpp"

namespace tricortex {

struct OscConfig {
  bool enabled = true;
  bool neuromod = true;        // modulation of the bank via the generation net
  bool film = true;            // gain modulation of the synaptic pathways
  bool attn_mod = true;        // attention logit temperature
  bool per_sample = false;     // one bank per batch row instead of shared
  double lambda = 0.1;         // oscillation influence on the state
  double kappa_freq = 0.1;
  double kappa_phase = 0.1;
  double kappa_amp = 0.1;
  double beta = 0.5;           // certainty blend weight
  double dt_ms = 10.0;         // tick duration used to map Hz bands
  int64_t hidden = 64;         // modulation net hidden width
};

enum class Band : uint8_t { kGamma = 0, kBeta = 1, kAlpha = 2, kTheta = 3 };

/// Band frequency ranges in Hz: gamma 40-100, beta 13-30, alpha 8-12,
/// theta 4-7.
std::array<double, 2> band_range_hz(Band band);

/// Mutable per-run oscillator state; `groups` is 1 for a shared bank or
/// the batch size for per-sample banks.
struct BankState {
  Tensor phase;      // [G, D], wrapped to [0, 2pi)
  Tensor amplitude;  // [G, D], >= 0
};

struct ModulationSignals {
  Tensor dfreq;   // [G, D]
  Tensor dphase;  // [G, D]
  Tensor damp;    // [G, D]
  Tensor raw;     // [B, 3D] tanh outputs before batch averaging
};

/// Per-neuron oscillators with round-robin band assignment. Base
/// frequencies are fixed buffers; the offsets, initial phases, and
/// initial amplitudes are learnable.
class OscillatorBank {
 public:
  /// D >= 4 so every band is populated.
  OscillatorBank(ParamRegistry& reg, int64_t dim, uint64_t seed, double dt_ms);

  BankState initial_state(int64_t groups) const;

  /// One tick of phase accumulation. `mods` may be null (no modulation):
  /// phase advances by 2pi*(base+offset) and amplitude is carried over.
  BankState advance(const BankState& s, const ModulationSignals* mods,
                    double kappa_freq, double kappa_phase,
                    double kappa_amp) const;

  /// z_osc = A * sin(phase), [G, D]
  Tensor oscillatory_state(const BankState& s) const;

  int64_t dim() const { return dim_; }
  const std::vector<Band>& bands() const { return bands_; }
  const Tensor& base_freq() const { return base_freq_; }  // cycles/tick
  const Tensor& freq_offset() const { return freq_offset_; }
  const Tensor& init_phase() const { return init_phase_; }
  const Tensor& init_amplitude() const { return init_amplitude_; }

 private:
  int64_t dim_;
  std::vector<Band> bands_;
  Tensor base_freq_;       // constant [D]
  Tensor freq_offset_;     // learnable [D], init 0
  Tensor init_phase_;      // learnable [D], init 0 (synchronized start)
  Tensor init_amplitude_;  // learnable [D], init 1
};

/// z_combined = z + lambda * z_osc (z_osc broadcast over the batch when
/// the bank is shared).
Tensor combine_state(const Tensor& z, const Tensor& z_osc, double lambda);

/// Modulation generation net: attention output -> tanh-squashed
/// (dfreq, dphase, damp). The final layer starts at zero, so signals are
/// zero until trained.
class ModulationNet {
 public:
  ModulationNet(ParamRegistry& reg, const std::string& name, int64_t d_v,
                int64_t hidden, int64_t dim, Rng& rng);

  /// o [B, d_v] -> signals; batch-averaged unless per_sample.
  ModulationSignals operator()(const Tensor& o, bool per_sample) const;

 private:
  Linear l1_, l2_;
  int64_t dim_;
};

/// Gain vectors for the first hidden layer of the synaptic pathways,
/// derived from the raw modulation signals (gain = 1 + tanh(W m), zero
/// initialized so gains start at exactly 1).
class FilmModulator {
 public:
  FilmModulator(ParamRegistry& reg, const std::string& name, int64_t dim,
                int64_t deep_hidden, int64_t shallow_hidden, Rng& rng);

  Tensor deep_gain(const Tensor& raw) const;     // [B, deep_hidden]
  Tensor shallow_gain(const Tensor& raw) const;  // [B, shallow_hidden]

 private:
  Linear g_deep_, g_shallow_;
};

// ---- certainty measures (value-space; used for gating and selection) ----

/// |mean_d e^{i phase_d}|, in [0, 1].
double phase_coherence(std::span<const double> phases);

/// 1 - H(p)/ln(C); rejects rows that are not distributions.
double entropy_certainty(std::span<const double> probs);

struct CertaintyRecord {
  double entropy_certainty = 0.0;
  double phase_certainty = 0.0;
  double total = 0.0;
  double beta = 0.5;
};

/// beta * C_entropy + (1-beta) * C_phase; beta must lie in [0, 1].
CertaintyRecord total_certainty(double c_entropy, double c_phase, double beta);

}  // namespace tricortex
