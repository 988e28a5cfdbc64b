#include "tricortex/training.hpp"

#include <cmath>

namespace tricortex {

Tensor tick_loss(const Tensor& logits, int64_t label) {
  Tensor row = logits.ndim() == 1 ? reshape(logits, {1, logits.dim(0)}) : logits;
  if (row.ndim() != 2 || row.dim(0) != 1) {
    throw ShapeError("tick_loss: expected one logit row, got " +
                     shape_str(logits.shape()));
  }
  return reshape(cross_entropy(row, {label}), {});
}

LossPoints select_loss_points(const std::vector<Tensor>& tick_losses,
                              const std::vector<TickTrace>& ticks) {
  if (tick_losses.empty() || tick_losses.size() != ticks.size()) {
    throw std::invalid_argument("select_loss_points: need one loss per tick");
  }
  int64_t batch = tick_losses[0].dim(0);
  int64_t t_count = static_cast<int64_t>(tick_losses.size());
  LossPoints pts;
  pts.t_min_loss.assign(batch, 0);
  pts.t_max_cert.assign(batch, 0);
  for (int64_t b = 0; b < batch; ++b) {
    double best_loss = tick_losses[0].values()[b];
    double best_cert = ticks[0].c_total[b];
    for (int64_t t = 1; t < t_count; ++t) {
      double lt = tick_losses[t].values()[b];
      if (lt < best_loss) {  // strict: ties keep the earliest tick
        best_loss = lt;
        pts.t_min_loss[b] = t;
      }
      double ct = ticks[t].c_total[b];
      if (ct > best_cert) {
        best_cert = ct;
        pts.t_max_cert[b] = t;
      }
    }
  }
  return pts;
}

Tensor aggregate_loss(const std::vector<Tensor>& tick_losses,
                      const LossPoints& points) {
  int64_t batch = tick_losses[0].dim(0);
  int64_t t_count = static_cast<int64_t>(tick_losses.size());
  double w = 1.0 / (2.0 * static_cast<double>(batch));
  Tensor total;
  for (int64_t t = 0; t < t_count; ++t) {
    std::vector<double> mask(batch, 0.0);
    bool any = false;
    for (int64_t b = 0; b < batch; ++b) {
      double hits = (points.t_min_loss[b] == t ? 1.0 : 0.0) +
                    (points.t_max_cert[b] == t ? 1.0 : 0.0);
      if (hits > 0) {
        mask[b] = hits * w;
        any = true;
      }
    }
    if (!any) continue;
    Tensor term = sum_all(mul(tick_losses[t], Tensor::from({batch}, mask)));
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

EvalStats evaluate(const Model& model, const Dataset& ds, int64_t batch_size,
                   bool gate, const StopPolicy* policy) {
  NoGradScope off;
  EvalStats stats;
  stats.samples = ds.size();
  int64_t n = ds.size();
  for (int64_t start = 0; start < n; start += batch_size) {
    int64_t count = std::min(batch_size, n - start);
    std::vector<int64_t> idx(count);
    for (int64_t i = 0; i < count; ++i) idx[i] = start + i;
    Tensor pixels = batch_pixels(ds, idx);
    RunOptions opts;
    opts.gate = gate;
    opts.policy = policy;
    ForwardResult fwd = model.run(pixels, opts);
    const RunTrace& tr = fwd.trace;
    for (int64_t b = 0; b < count; ++b) {
      stats.stop_tick.push_back(tr.stop_tick[b]);
      stats.prediction.push_back(tr.prediction[b]);
      stats.label.push_back(ds.labels[start + b]);
      stats.certainty.push_back(tr.stop_certainty[b]);
      stats.final_certainty.push_back(tr.ticks.back().c_total[b]);
    }
  }
  double hits = 0, ticks = 0, cert = 0;
  for (int64_t i = 0; i < n; ++i) {
    if (stats.prediction[i] == stats.label[i]) hits += 1.0;
    ticks += static_cast<double>(stats.stop_tick[i]);
    cert += stats.certainty[i];
  }
  if (n > 0) {
    stats.accuracy = hits / static_cast<double>(n);
    stats.mean_stop_ticks = ticks / static_cast<double>(n);
    stats.mean_certainty = cert / static_cast<double>(n);
  }
  return stats;
}

namespace {

std::vector<std::vector<double>> snapshot_params(const ParamRegistry& reg) {
  std::vector<std::vector<double>> snap;
  for (const auto& [_, t] : reg.items()) {
    snap.emplace_back(t.values().begin(), t.values().end());
  }
  return snap;
}

void restore_params(ParamRegistry& reg, const std::vector<std::vector<double>>& snap) {
  for (size_t i = 0; i < reg.items().size(); ++i) {
    Tensor t = reg.items()[i].second;
    t.raw_values() = snap[i];
  }
}

}  // namespace

TrainResult train(Model& model, const TrainConfig& cfg, const Dataset& train_ds,
                  const Dataset& val_ds,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  if (cfg.schedule != "cosine" && cfg.schedule != "constant") {
    throw std::invalid_argument("train: unknown schedule '" + cfg.schedule + "'");
  }
  Adam adam(model.params());
  Rng run_rng(cfg.seed);
  Rng order_rng = run_rng.fork("batch_order");
  Rng dropout_rng = run_rng.fork("dropout");

  TrainResult result;
  int64_t batches_per_epoch =
      (train_ds.size() + cfg.batch_size - 1) / cfg.batch_size;
  int64_t total_steps = cfg.epochs * batches_per_epoch;
  std::vector<std::vector<double>> last_good = snapshot_params(model.params());

  std::vector<int64_t> order(train_ds.size());
  for (int64_t i = 0; i < train_ds.size(); ++i) order[i] = i;

  int64_t step = 0;
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0;
    int64_t train_hits = 0;
    for (int64_t start = 0; start < train_ds.size(); start += cfg.batch_size) {
      int64_t count = std::min(cfg.batch_size, train_ds.size() - start);
      std::span<const int64_t> idx(order.data() + start, count);
      Tensor pixels = batch_pixels(train_ds, idx);
      std::vector<int64_t> labels = batch_labels(train_ds, idx);

      double lr = cfg.schedule == "cosine" ? cosine_lr(step, total_steps, cfg.lr)
                                           : cfg.lr;
      double loss_value;
      {
        TapeScope tape;
        RunOptions opts;
        opts.labels = &labels;
        opts.dropout_rng = &dropout_rng;
        ForwardResult fwd = model.run(pixels, opts);
        LossPoints pts = select_loss_points(fwd.tick_losses, fwd.trace.ticks);
        Tensor loss = aggregate_loss(fwd.tick_losses, pts);
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
          restore_params(model.params(), last_good);
          result.aborted_on_nan = true;
          return result;
        }
        for (int64_t b = 0; b < count; ++b) {
          if (fwd.trace.prediction[b] == labels[b]) ++train_hits;
        }
        backward(loss);
      }
      if (cfg.grad_clip > 0.0) clip_grad_norm(model.params(), cfg.grad_clip);
      if (!adam.step(lr)) {
        ++result.skipped_steps;
        model.params().zero_grads();
      }
      epoch_loss += loss_value * static_cast<double>(count);
      ++step;
      ++result.steps;
    }

    EvalStats val = evaluate(model, val_ds, cfg.batch_size, /*gate=*/true);
    EpochStats es;
    es.epoch = epoch;
    es.lr = cfg.schedule == "cosine" ? cosine_lr(step, total_steps, cfg.lr)
                                     : cfg.lr;
    es.train_loss = epoch_loss / static_cast<double>(train_ds.size());
    es.train_accuracy =
        static_cast<double>(train_hits) / static_cast<double>(train_ds.size());
    es.val_accuracy = val.accuracy;
    es.val_mean_certainty = val.mean_certainty;
    es.val_mean_stop_ticks = val.mean_stop_ticks;
    result.history.push_back(es);
    if (on_epoch) on_epoch(es);
    last_good = snapshot_params(model.params());
  }
  return result;
}

}  // namespace tricortex
