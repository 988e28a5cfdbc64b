#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tricortex/data.hpp"
#include "tricortex/model.hpp"
#include "tricortex/optim.hpp"

namespace tricortex {

struct TrainConfig {
  int64_t epochs = 20;
  int64_t batch_size = 64;
  double lr = 1e-3;
  std::string schedule = "cosine";  // cosine | constant
  double grad_clip = 0.0;           // max L2 norm; 0 disables
  uint64_t seed = 1;
};

/// Per-sample cross-entropy at one tick; logits [C] or [1,C].
Tensor tick_loss(const Tensor& logits, int64_t label);

struct LossPoints {
  std::vector<int64_t> t_min_loss;  // [B] t1 = argmin_t L_t (earliest tie)
  std::vector<int64_t> t_max_cert;  // [B] t2 = argmax_t C_total (earliest tie)
};

/// Selection indices of the dual-point loss over a full-T trace.
LossPoints select_loss_points(const std::vector<Tensor>& tick_losses,
                              const std::vector<TickTrace>& ticks);

/// L = mean_b (L_{t1,b} + L_{t2,b}) / 2. Gradients flow through the two
/// selected tick losses only; the indices themselves are fixed.
Tensor aggregate_loss(const std::vector<Tensor>& tick_losses,
                      const LossPoints& points);

struct EvalStats {
  double accuracy = 0.0;
  double mean_stop_ticks = 0.0;
  double mean_certainty = 0.0;
  int64_t samples = 0;
  std::vector<int64_t> stop_tick;
  std::vector<int64_t> prediction;
  std::vector<int64_t> label;
  std::vector<double> certainty;       // C_total at the stop tick
  std::vector<double> final_certainty; // C_total at the last computed tick
};

/// Batched inference over a dataset; gate enables per-sample early exit.
EvalStats evaluate(const Model& model, const Dataset& ds, int64_t batch_size,
                   bool gate, const StopPolicy* policy = nullptr);

struct EpochStats {
  int64_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double val_mean_certainty = 0.0;
  double val_mean_stop_ticks = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  bool aborted_on_nan = false;
  int64_t steps = 0;
  int64_t skipped_steps = 0;  // non-finite gradients
};

/// Full-tick training with the dual-point loss. On a NaN loss the run
/// aborts and parameters roll back to the end of the last good epoch.
/// `on_epoch`, when set, observes each epoch's stats as they are made.
TrainResult train(Model& model, const TrainConfig& cfg, const Dataset& train_ds,
                  const Dataset& val_ds,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace tricortex
