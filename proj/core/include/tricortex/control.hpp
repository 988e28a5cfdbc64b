#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tricortex/tensor.hpp"

namespace tricortex {

struct StopPolicy {
  double epsilon = 0.01;  // entropy-change threshold
  double tau = 0.75;      // certainty threshold (strict inequality)
  int64_t window = 2;     // k ticks
  int64_t t_min = 5;
  int64_t t_max = 50;

  void validate() const;
};

/// Shannon entropy in nats of a probability row; rejects non-distributions.
double entropy(std::span<const double> probs);

/// |H^t - H^{t-k}| / k over the running entropy history (H^1..H^t).
/// Empty until k+1 values exist.
std::optional<double> entropy_change(std::span<const double> history, int64_t k);

/// Gate: dh < epsilon AND c_total > tau AND t >= t_min.
bool should_stop(double dh, double c_total, int64_t t, const StopPolicy& policy);

/// Everything observable about one tick of a run, per sample.
struct TickTrace {
  int64_t tick = 0;                 // 1-based
  std::vector<double> logits;       // [B*C]
  std::vector<double> probs;        // [B*C]
  std::vector<double> entropy;      // [B]
  std::vector<double> delta_h;      // [B]; meaningful iff delta_ready
  std::vector<uint8_t> delta_ready; // [B]
  std::vector<double> c_entropy;    // [B]
  std::vector<double> c_phase;      // [B] (bank value replicated when shared)
  std::vector<double> c_total;      // [B]
  std::vector<uint8_t> active;      // [B] sample still running at this tick
  std::vector<uint8_t> stop_fired;  // [B] gate fired at this tick
  std::vector<double> attention;    // [B*N] softmax rows
  std::vector<double> activation;   // [B*D] a^t
  double coherence = 0.0;           // bank phase coherence (group mean)
};

struct RunTrace {
  int64_t batch = 0;
  int64_t classes = 0;
  int64_t state_dim = 0;
  int64_t positions = 0;   // N attention positions
  int64_t t_max = 0;
  int64_t ticks_run = 0;   // ticks actually computed (loop may end early)
  std::vector<TickTrace> ticks;
  // Frozen at each sample's stop tick:
  std::vector<int64_t> stop_tick;      // [B], in [t_min, t_max]
  std::vector<int64_t> prediction;     // [B]
  std::vector<double> stop_certainty;  // [B] C_total at the stop tick
  std::vector<double> stop_logits;     // [B*C] logits at the stop tick

  double mean_stop_ticks() const;
  double accuracy(std::span<const int64_t> labels) const;
  double mean_stop_certainty() const;
};

}  // namespace tricortex
