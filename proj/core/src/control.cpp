#include "tricortex/control.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tricortex {

void StopPolicy::validate() const {
  if (t_min < 1 || t_min > t_max) {
    throw std::invalid_argument("stop policy: need 1 <= t_min <= t_max, got " +
                                std::to_string(t_min) + ".." +
                                std::to_string(t_max));
  }
  if (window < 1) throw std::invalid_argument("stop policy: window must be >= 1");
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("stop policy: epsilon must be > 0");
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("stop policy: tau must lie in (0,1)");
  }
}

double entropy(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("entropy: empty distribution");
  double sum = 0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("entropy: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("entropy: probabilities sum to " +
                                std::to_string(sum));
  }
  double h = 0;
  for (double p : probs) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

std::optional<double> entropy_change(std::span<const double> history, int64_t k) {
  if (k < 1) throw std::invalid_argument("entropy_change: k must be >= 1");
  int64_t t = static_cast<int64_t>(history.size());
  if (t < k + 1) return std::nullopt;
  return std::abs(history[t - 1] - history[t - 1 - k]) / static_cast<double>(k);
}

bool should_stop(double dh, double c_total, int64_t t, const StopPolicy& policy) {
  if (!std::isfinite(dh) || !std::isfinite(c_total)) {
    throw NumericalError("should_stop: non-finite gate inputs");
  }
  return dh < policy.epsilon && c_total > policy.tau && t >= policy.t_min;
}

double RunTrace::mean_stop_ticks() const {
  double s = 0;
  for (int64_t t : stop_tick) s += static_cast<double>(t);
  return stop_tick.empty() ? 0.0 : s / static_cast<double>(stop_tick.size());
}

double RunTrace::accuracy(std::span<const int64_t> labels) const {
  if (labels.size() != prediction.size()) {
    throw std::invalid_argument("accuracy: label count mismatch");
  }
  if (labels.empty()) return 0.0;
  double hit = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (prediction[i] == labels[i]) hit += 1.0;
  }
  return hit / static_cast<double>(labels.size());
}

double RunTrace::mean_stop_certainty() const {
  double s = 0;
  for (double c : stop_certainty) s += c;
  return stop_certainty.empty() ? 0.0
                                : s / static_cast<double>(stop_certainty.size());
}

}  // namespace tricortex
