#include "tricortex/model.hpp"

#include <cmath>
#include <string>

namespace tricortex {

namespace {

Tensor broadcast_rows(const Tensor& row, int64_t batch) {
  return add(Tensor::zeros({batch, 1}), row);
}

std::vector<double> init_z0(int64_t dim, Rng& rng) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal(0.0, 0.02);
  return v;
}

}  // namespace

Model::Model(const ModelConfig& cfg) : Model(cfg, Rng(cfg.seed)) {}

Model::Model(const ModelConfig& cfg, Rng rng)
    : cfg_(cfg),
      perception_(reg_, cfg.perception, cfg.in_channels, rng),
      w_q_(init_tensor(reg_, "executive.w_q", {cfg.state_dim, cfg.perception.d_k},
                       Init::kXavier, cfg.state_dim, rng)),
      bank_(reg_, cfg.state_dim, Rng::mix(cfg.seed, 0xba2d5), cfg.osc.dt_ms),
      gamma_(reg_, "osc.gamma", cfg.perception.d_v, cfg.osc.hidden, cfg.state_dim,
             rng),
      omega_(reg_, "executive.omega", cfg.perception.feature_dim, rng),
      pathways_(reg_, "executive.pathways",
                cfg.state_dim + cfg.perception.d_v, cfg.state_dim, cfg.sda, rng),
      film_(reg_, "osc.film", cfg.state_dim, pathways_.deep_hidden(),
            pathways_.shallow_hidden(), rng),
      sync_(reg_, cfg.state_dim, cfg.classes, cfg.sync, rng),
      z0_(reg_.add("executive.z0",
                   Tensor::from({cfg.state_dim}, init_z0(cfg.state_dim, rng)))) {
  cfg_.policy.validate();
}

ForwardResult Model::run(const Tensor& pixels, const RunOptions& opts) const {
  const StopPolicy& policy = opts.policy ? *opts.policy : cfg_.policy;
  policy.validate();
  const OscConfig& osc = cfg_.osc;
  int64_t batch = pixels.dim(0);
  int64_t dim = cfg_.state_dim;
  int64_t classes = cfg_.classes;
  int64_t groups = (osc.enabled && osc.per_sample) ? batch : 1;

  FeatureMap fmap = perception_.encode(pixels);
  KvPair kv = perception_.project_kv(fmap);
  Tensor alpha;
  if (cfg_.sda.enabled) alpha = omega_(fmap.pooled);

  Tensor z = broadcast_rows(z0_, batch);  // [B, D]
  BankState bank_state;
  if (osc.enabled) bank_state = bank_.initial_state(groups);
  SyncHead::Accum accum = sync_.initial_accum(batch);
  ActivationMemory memory(cfg_.memory_len);

  ForwardResult result;
  RunTrace& trace = result.trace;
  trace.batch = batch;
  trace.classes = classes;
  trace.state_dim = dim;
  trace.positions = fmap.h * fmap.w;
  trace.t_max = policy.t_max;
  trace.stop_tick.assign(batch, policy.t_max);
  trace.prediction.assign(batch, -1);
  trace.stop_certainty.assign(batch, 0.0);
  trace.stop_logits.assign(batch * classes, 0.0);

  std::vector<std::vector<double>> entropy_hist(batch);
  std::vector<uint8_t> active(batch, 1);
  bool have_mods = false;
  ModulationSignals mods;  // signals generated last tick (applied to the bank)

  for (int64_t t = 1; t <= policy.t_max; ++t) {
    // State for this tick comes from the bank as of the last advance.
    Tensor z_comb = z;
    Tensor phases_t;
    if (osc.enabled) {
      Tensor z_osc = bank_.oscillatory_state(bank_state);
      z_comb = combine_state(z, z_osc, osc.lambda);
      phases_t = bank_state.phase;
    }

    Tensor q = matmul(cfg_.query_from_combined ? z_comb : z, w_q_);
    Tensor temp;
    bool use_temp = osc.enabled && osc.neuromod && osc.attn_mod && have_mods;
    if (use_temp) temp = add(reduce_mean(mods.damp, -1, /*keepdims=*/true), 1.0);
    AttentionResult att = attend(q, kv, use_temp ? &temp : nullptr);

    ModulationSignals new_mods;
    bool gen_mods = osc.enabled && osc.neuromod;
    if (gen_mods) new_mods = gamma_(att.output, osc.per_sample);

    Tensor x = concat(z_comb, att.output);
    Tensor gain_deep, gain_shallow;
    bool use_film = gen_mods && osc.film;
    if (use_film) {
      gain_deep = film_.deep_gain(new_mods.raw);
      gain_shallow = film_.shallow_gain(new_mods.raw);
    }
    Tensor a;
    if (cfg_.sda.enabled) {
      Tensor deep_out =
          pathways_.deep(x, use_film ? &gain_deep : nullptr, opts.dropout_rng);
      Tensor shallow_out = pathways_.shallow(
          x, use_film ? &gain_shallow : nullptr, opts.dropout_rng);
      a = SynapsePathways::mix(deep_out, shallow_out, alpha);
    } else {
      a = pathways_.shallow(x, use_film ? &gain_shallow : nullptr,
                            opts.dropout_rng);
    }
    Tensor z_next = update_state(z, a);
    memory.push(a);

    sync_.update(accum, z_comb, osc.enabled ? &phases_t : nullptr);
    Tensor s_rep = sync_.representation(accum);
    Tensor logits = sync_.logits(s_rep);  // [B, C]

    if (!all_finite(z_next.values())) {
      throw NumericalError("tick " + std::to_string(t) +
                           ": non-finite internal state");
    }
    if (!all_finite(logits.values())) {
      throw NumericalError("tick " + std::to_string(t) + ": non-finite logits");
    }

    if (opts.labels) {
      result.tick_losses.push_back(cross_entropy(logits, *opts.labels));
    }

    // ---- value-space observables and gating ----
    TickTrace tk;
    tk.tick = t;
    tk.logits.assign(logits.values().begin(), logits.values().end());
    tk.probs.resize(batch * classes);
    tk.entropy.resize(batch);
    tk.delta_h.assign(batch, 0.0);
    tk.delta_ready.assign(batch, 0);
    tk.c_entropy.resize(batch);
    tk.c_phase.assign(batch, 0.0);
    tk.c_total.resize(batch);
    tk.active = active;
    tk.stop_fired.assign(batch, 0);
    tk.attention.assign(att.weights.values().begin(),
                        att.weights.values().end());
    tk.activation.assign(a.values().begin(), a.values().end());

    std::vector<double> group_coherence(groups, 0.0);
    if (osc.enabled) {
      auto ph = phases_t.values();
      for (int64_t g = 0; g < groups; ++g) {
        group_coherence[g] =
            phase_coherence(std::span(ph.data() + g * dim, dim));
      }
      double m = 0;
      for (double c : group_coherence) m += c;
      tk.coherence = m / static_cast<double>(groups);
    }

    for (int64_t b = 0; b < batch; ++b) {
      std::span<const double> row(tk.logits.data() + b * classes, classes);
      std::vector<double> probs = softmax_values(row);
      std::copy(probs.begin(), probs.end(), tk.probs.begin() + b * classes);
      double h = entropy_nats(probs);
      tk.entropy[b] = h;
      entropy_hist[b].push_back(h);
      double ce = entropy_certainty(probs);
      tk.c_entropy[b] = ce;
      double ct = ce;
      if (osc.enabled) {
        double cp = group_coherence[osc.per_sample ? b : 0];
        tk.c_phase[b] = cp;
        ct = total_certainty(ce, cp, osc.beta).total;
      }
      tk.c_total[b] = ct;
      auto dh = entropy_change(entropy_hist[b], policy.window);
      if (dh) {
        tk.delta_h[b] = *dh;
        tk.delta_ready[b] = 1;
      }
      bool is_last = (t == policy.t_max);
      if (active[b]) {
        // The gate predicate is always recorded; it stops the sample only
        // in gated runs.
        bool fire = dh && should_stop(*dh, ct, t, policy);
        if (fire) tk.stop_fired[b] = 1;
        if ((opts.gate && fire) || is_last) {
          trace.stop_tick[b] = t;
          trace.prediction[b] = argmax(probs);
          trace.stop_certainty[b] = ct;
          std::copy(row.begin(), row.end(),
                    trace.stop_logits.begin() + b * classes);
          active[b] = 0;
        }
      }
    }
    trace.ticks.push_back(std::move(tk));
    trace.ticks_run = t;

    bool any_active = false;
    for (uint8_t f : active) any_active |= (f != 0);
    if (opts.gate && !any_active) break;

    // ---- end of tick: modulate and advance the bank, commit the state ----
    if (osc.enabled) {
      bank_state = bank_.advance(bank_state, gen_mods ? &new_mods : nullptr,
                                 osc.kappa_freq, osc.kappa_phase, osc.kappa_amp);
    }
    if (gen_mods) {
      mods = new_mods;
      have_mods = true;
    }
    z = z_next;
  }
  return result;
}

}  // namespace tricortex
