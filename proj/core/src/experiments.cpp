#include "tricortex/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tricortex/training.hpp"

namespace tricortex {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void csv_header(std::ofstream& out, const std::string& kind, uint64_t seed) {
  out << "# tricortex-" << kind << " v1 seed=" << seed << "\n";
}

}  // namespace

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw DataError("cannot create directory " + path + ": " + ec.message());
}

DataBundle build_datasets(const ExperimentConfig& cfg) {
  std::string source = cfg.get_string("data.source");
  Dataset full;
  if (source == "synth") {
    full = synth_shapes(cfg.get_int("data.synth_n"),
                        cfg.get_int("data.synth_size"),
                        cfg.get_int("data.synth_classes"),
                        static_cast<uint64_t>(cfg.get_int("data.seed")));
  } else if (source == "binary") {
    std::string path = cfg.get_string("data.path");
    if (path.empty()) {
      throw DataError(
          "data.source = binary requires data.path; expected records of one "
          "label byte followed by channel-planar pixel bytes");
    }
    full = load_binary_images(path, cfg.binary_layout());
  } else {
    throw ConfigError("data.source must be 'synth' or 'binary', got '" + source +
                      "'");
  }
  auto [train, val] =
      split_dataset(full, cfg.get_double("data.val_fraction"),
                    static_cast<uint64_t>(cfg.get_int("data.seed")) + 1);
  return {std::move(train), std::move(val)};
}

Dataset build_eval_dataset(const ExperimentConfig& cfg) {
  Dataset ds;
  if (cfg.get_string("data.source") == "binary") {
    std::string path = cfg.get_string("data.path");
    if (path.empty()) throw DataError("data.source = binary requires data.path");
    ds = load_binary_images(path, cfg.binary_layout());
  } else {
    ds = build_datasets(cfg).val;
  }
  std::string hp = cfg.get_string("data.human_probs");
  if (!hp.empty()) ds = load_human_probs(hp, std::move(ds));
  return ds;
}

std::unique_ptr<Model> build_model(const ExperimentConfig& cfg) {
  return std::make_unique<Model>(cfg.model_config(cfg.data_classes()));
}

LoadedModel load_model(
    const std::string& checkpoint_path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  CheckpointMeta meta = peek_checkpoint(checkpoint_path);
  ExperimentConfig cfg =
      ExperimentConfig::from_text(meta.config_text, checkpoint_path);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  LoadedModel lm{build_model(cfg), std::move(cfg), {}};
  lm.meta = load_checkpoint(checkpoint_path, lm.model->params());
  return lm;
}

TrainRunSummary run_training(const ExperimentConfig& cfg, uint64_t seed,
                             const std::string& out_dir) {
  ensure_dir(out_dir);
  ExperimentConfig run_cfg = cfg;
  run_cfg.set("train.seed", std::to_string(seed));
  {
    auto out = open_out(out_dir + "/config.resolved.cfg");
    out << run_cfg.echo();
  }
  DataBundle data = build_datasets(run_cfg);
  std::unique_ptr<Model> model = build_model(run_cfg);
  TrainConfig tc = run_cfg.train_config();
  tc.seed = seed;

  auto metrics = open_out(out_dir + "/metrics.jsonl");
  {
    nlohmann::json meta;
    meta["type"] = "meta";
    meta["format_version"] = 1;
    meta["seed"] = seed;
    meta["train_samples"] = data.train.size();
    meta["val_samples"] = data.val.size();
    meta["param_count"] = model->params().total_size();
    metrics << meta.dump() << "\n";
  }
  TrainResult tr =
      train(*model, tc, data.train, data.val, [&](const EpochStats& es) {
        nlohmann::json j;
        j["type"] = "epoch";
        j["epoch"] = es.epoch;
        j["lr"] = es.lr;
        j["train_loss"] = es.train_loss;
        j["train_accuracy"] = es.train_accuracy;
        j["val_accuracy"] = es.val_accuracy;
        j["val_mean_certainty"] = es.val_mean_certainty;
        j["val_mean_stop_ticks"] = es.val_mean_stop_ticks;
        metrics << j.dump() << "\n";
      });

  TrainRunSummary summary;
  summary.seed = seed;
  summary.aborted_on_nan = tr.aborted_on_nan;
  if (!tr.history.empty()) {
    const EpochStats& last = tr.history.back();
    summary.val_accuracy = last.val_accuracy;
    summary.val_mean_stop_ticks = last.val_mean_stop_ticks;
    summary.val_mean_certainty = last.val_mean_certainty;
  }
  summary.checkpoint_path = out_dir + "/checkpoint.bin";
  CheckpointMeta meta;
  meta.seed = seed;
  meta.epoch = static_cast<int64_t>(tr.history.size());
  meta.config_text = run_cfg.echo();
  meta.metrics["val_accuracy"] = summary.val_accuracy;
  meta.metrics["val_mean_stop_ticks"] = summary.val_mean_stop_ticks;
  save_checkpoint(summary.checkpoint_path, meta, model->params());
  if (tr.aborted_on_nan) {
    throw NumericalError("training aborted on non-finite loss; last good epoch " +
                         std::to_string(meta.epoch) + " checkpointed at " +
                         summary.checkpoint_path);
  }
  return summary;
}

std::vector<TrainRunSummary> run_training_seeds(const ExperimentConfig& cfg,
                                                const std::vector<uint64_t>& seeds,
                                                const std::string& out_dir) {
  ensure_dir(out_dir);
  std::vector<TrainRunSummary> runs;
  for (uint64_t s : seeds) {
    runs.push_back(run_training(cfg, s, out_dir + "/seed_" + std::to_string(s)));
  }
  double mean = 0, mean_ticks = 0;
  for (const auto& r : runs) {
    mean += r.val_accuracy;
    mean_ticks += r.val_mean_stop_ticks;
  }
  mean /= static_cast<double>(runs.size());
  mean_ticks /= static_cast<double>(runs.size());
  double var = 0;
  for (const auto& r : runs) {
    var += (r.val_accuracy - mean) * (r.val_accuracy - mean);
  }
  double std_acc = runs.size() > 1 ? std::sqrt(var / (runs.size() - 1)) : 0.0;

  nlohmann::json j;
  j["type"] = "seed_summary";
  j["format_version"] = 1;
  j["seeds"] = seeds;
  j["val_accuracy_mean"] = mean;
  j["val_accuracy_std"] = std_acc;
  j["val_mean_stop_ticks"] = mean_ticks;
  auto out = open_out(out_dir + "/summary.json");
  out << j.dump(2) << "\n";
  return runs;
}

EvalStats run_eval(const Model& model, const ExperimentConfig& cfg,
                   const Dataset& ds, const std::string& out_dir, bool gate) {
  ensure_dir(out_dir);
  StopPolicy policy = cfg.stop_policy();
  if (model.config().classes != ds.class_count) {
    throw DataError("eval: checkpoint has " +
                    std::to_string(model.config().classes) +
                    " classes, dataset has " + std::to_string(ds.class_count));
  }
  EvalStats stats = evaluate(model, ds, cfg.get_int("train.batch_size"), gate,
                             &policy);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("train.seed"));
  auto out = open_out(out_dir + "/eval_samples.csv");
  csv_header(out, "eval", seed);
  out << "sample,label,prediction,correct,stop_tick,certainty\n";
  for (int64_t i = 0; i < stats.samples; ++i) {
    out << i << ',' << stats.label[i] << ',' << stats.prediction[i] << ','
        << (stats.label[i] == stats.prediction[i] ? 1 : 0) << ','
        << stats.stop_tick[i] << ',' << fmt_double(stats.certainty[i]) << "\n";
  }
  nlohmann::json j;
  j["type"] = "eval_summary";
  j["format_version"] = 1;
  j["seed"] = seed;
  j["gate"] = gate;
  j["accuracy"] = stats.accuracy;
  j["mean_stop_ticks"] = stats.mean_stop_ticks;
  j["mean_certainty"] = stats.mean_certainty;
  auto js = open_out(out_dir + "/eval_summary.json");
  js << j.dump(2) << "\n";
  return stats;
}

std::vector<NoiseRow> run_noise_sweep(const Model& model,
                                      const ExperimentConfig& cfg,
                                      const Dataset& clean,
                                      const std::vector<double>& sigmas,
                                      const std::string& out_dir) {
  ensure_dir(out_dir);
  for (double s : sigmas) {
    if (s < 0) throw ConfigError("noise sweep: negative sigma");
  }
  StopPolicy policy = cfg.stop_policy();
  uint64_t base_seed = static_cast<uint64_t>(cfg.get_int("data.seed"));
  std::vector<NoiseRow> rows;
  for (size_t i = 0; i < sigmas.size(); ++i) {
    Dataset noised =
        add_gaussian_noise(clean, sigmas[i], Rng::mix(base_seed, 77 + i));
    EvalStats st = evaluate(model, noised, cfg.get_int("train.batch_size"),
                            /*gate=*/true, &policy);
    rows.push_back({sigmas[i], st.accuracy, st.mean_stop_ticks,
                    st.mean_certainty});
  }
  auto out = open_out(out_dir + "/noise_sweep.csv");
  csv_header(out, "noise-sweep", base_seed);
  out << "sigma,accuracy,mean_stop_ticks,mean_certainty\n";
  for (const NoiseRow& r : rows) {
    out << fmt_double(r.sigma) << ',' << fmt_double(r.accuracy) << ','
        << fmt_double(r.mean_stop_ticks) << ',' << fmt_double(r.mean_certainty)
        << "\n";
  }
  return rows;
}

GridAxis parse_grid_axis(const std::string& spec) {
  size_t eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("grid axis '" + spec + "' must look like key=v1,v2");
  }
  GridAxis axis;
  axis.key = spec.substr(0, eq);
  std::string rest = spec.substr(eq + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    size_t comma = rest.find(',', pos);
    std::string v = rest.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!v.empty()) axis.values.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (axis.values.empty()) {
    throw ConfigError("grid axis '" + spec + "' has no values");
  }
  ExperimentConfig probe;
  for (const std::string& v : axis.values) probe.set(axis.key, v);  // validates
  return axis;
}

std::vector<AblationCell> run_ablation(const ExperimentConfig& base,
                                       const std::vector<GridAxis>& grid,
                                       const std::vector<uint64_t>& seeds,
                                       const std::string& out_dir) {
  if (grid.empty()) throw ConfigError("ablation grid is empty");
  ensure_dir(out_dir);
  std::vector<std::vector<std::pair<std::string, std::string>>> cells{{}};
  for (const GridAxis& axis : grid) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& cell : cells) {
      for (const std::string& v : axis.values) {
        auto extended = cell;
        extended.emplace_back(axis.key, v);
        next.push_back(std::move(extended));
      }
    }
    cells = std::move(next);
  }

  std::vector<AblationCell> results;
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    ExperimentConfig cfg = base;
    std::string cell_name = "cell" + std::to_string(ci);
    for (const auto& [k, v] : cells[ci]) cfg.set(k, v);
    std::vector<double> accs, ticks;
    for (uint64_t s : seeds) {
      TrainRunSummary sum = run_training(
          cfg, s, out_dir + "/" + cell_name + "/seed_" + std::to_string(s));
      accs.push_back(sum.val_accuracy);
      ticks.push_back(sum.val_mean_stop_ticks);
    }
    AblationCell cell;
    cell.assignment = cells[ci];
    for (double a : accs) cell.mean_accuracy += a;
    cell.mean_accuracy /= static_cast<double>(accs.size());
    for (double t : ticks) cell.mean_stop_ticks += t;
    cell.mean_stop_ticks /= static_cast<double>(ticks.size());
    double var = 0;
    for (double a : accs) {
      var += (a - cell.mean_accuracy) * (a - cell.mean_accuracy);
    }
    cell.std_accuracy = accs.size() > 1 ? std::sqrt(var / (accs.size() - 1)) : 0.0;
    results.push_back(std::move(cell));
  }

  auto out = open_out(out_dir + "/ablation.csv");
  csv_header(out, "ablate", seeds.empty() ? 0 : seeds[0]);
  out << "cell,assignment,mean_accuracy,std_accuracy,mean_stop_ticks\n";
  for (size_t i = 0; i < results.size(); ++i) {
    std::string assign;
    for (const auto& [k, v] : results[i].assignment) {
      if (!assign.empty()) assign += ' ';
      assign += k + "=" + v;
    }
    out << i << ',' << assign << ',' << fmt_double(results[i].mean_accuracy)
        << ',' << fmt_double(results[i].std_accuracy) << ','
        << fmt_double(results[i].mean_stop_ticks) << "\n";
  }
  return results;
}

void run_trace_export(const Model& model, const ExperimentConfig& cfg,
                      const Dataset& ds, const std::vector<int64_t>& samples,
                      const std::string& out_dir) {
  ensure_dir(out_dir);
  for (int64_t s : samples) {
    if (s < 0 || s >= ds.size()) {
      throw DataError("trace: sample index " + std::to_string(s) +
                      " outside dataset of " + std::to_string(ds.size()));
    }
  }
  NoGradScope off;
  StopPolicy policy = cfg.stop_policy();
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("train.seed"));
  Tensor pixels = batch_pixels(ds, samples);
  RunOptions opts;
  opts.policy = &policy;  // gate off: full-length traces with gate markers
  ForwardResult fwd = model.run(pixels, opts);
  const RunTrace& tr = fwd.trace;

  for (size_t si = 0; si < samples.size(); ++si) {
    std::string stem = out_dir + "/trace_sample" + std::to_string(samples[si]);
    auto state = open_out(stem + "_state.csv");
    csv_header(state, "trace-state", seed);
    state << "tick,entropy,delta_h,delta_ready,c_entropy,c_phase,c_total,"
             "coherence,stop_fired,active";
    for (int64_t c = 0; c < tr.classes; ++c) state << ",logit_" << c;
    state << "\n";
    auto attn = open_out(stem + "_attention.csv");
    csv_header(attn, "trace-attention", seed);
    attn << "tick";
    for (int64_t p = 0; p < tr.positions; ++p) attn << ",w_" << p;
    attn << "\n";
    auto act = open_out(stem + "_activation.csv");
    csv_header(act, "trace-activation", seed);
    act << "tick";
    for (int64_t d = 0; d < tr.state_dim; ++d) act << ",abs_a_" << d;
    act << "\n";

    for (const TickTrace& tk : tr.ticks) {
      int64_t b = static_cast<int64_t>(si);
      state << tk.tick << ',' << fmt_double(tk.entropy[b]) << ','
            << fmt_double(tk.delta_h[b]) << ',' << int(tk.delta_ready[b]) << ','
            << fmt_double(tk.c_entropy[b]) << ',' << fmt_double(tk.c_phase[b])
            << ',' << fmt_double(tk.c_total[b]) << ','
            << fmt_double(tk.coherence) << ',' << int(tk.stop_fired[b]) << ','
            << int(tk.active[b]);
      for (int64_t c = 0; c < tr.classes; ++c) {
        state << ',' << fmt_double(tk.logits[b * tr.classes + c]);
      }
      state << "\n";
      attn << tk.tick;
      for (int64_t p = 0; p < tr.positions; ++p) {
        attn << ',' << fmt_double(tk.attention[b * tr.positions + p]);
      }
      attn << "\n";
      act << tk.tick;
      for (int64_t d = 0; d < tr.state_dim; ++d) {
        act << ',' << fmt_double(std::abs(tk.activation[b * tr.state_dim + d]));
      }
      act << "\n";
    }
  }
}

HumanAlignResult run_human_align(const Model& model, const ExperimentConfig& cfg,
                                 const Dataset& ds, const std::string& out_dir) {
  if (!ds.human_probs.defined()) {
    throw DataError("human-align: dataset has no human probability rows");
  }
  ensure_dir(out_dir);
  StopPolicy policy = cfg.stop_policy();
  EvalStats st = evaluate(model, ds, cfg.get_int("train.batch_size"),
                          /*gate=*/true, &policy);
  bool use_final = cfg.get_string("eval.certainty") == "final";
  std::vector<double> certainty =
      use_final ? st.final_certainty : st.certainty;
  std::vector<double> agreement(ds.size());
  auto hp = ds.human_probs.values();
  for (int64_t i = 0; i < ds.size(); ++i) {
    double m = 0;
    for (int64_t c = 0; c < ds.class_count; ++c) {
      m = std::max(m, hp[i * ds.class_count + c]);
    }
    agreement[i] = m;
  }
  auto r = pearson(certainty, agreement);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("train.seed"));
  auto out = open_out(out_dir + "/human_align.csv");
  csv_header(out, "human-align", seed);
  out << "sample,model_certainty,human_agreement\n";
  for (int64_t i = 0; i < ds.size(); ++i) {
    out << i << ',' << fmt_double(certainty[i]) << ','
        << fmt_double(agreement[i]) << "\n";
  }
  nlohmann::json j;
  j["type"] = "human_align";
  j["format_version"] = 1;
  j["seed"] = seed;
  j["samples"] = ds.size();
  j["certainty_source"] = use_final ? "final" : "stop";
  if (r) {
    j["pearson_r"] = *r;
  } else {
    j["pearson_r"] = nullptr;
    j["note"] = "undefined: zero variance";
  }
  auto js = open_out(out_dir + "/human_align.json");
  js << j.dump(2) << "\n";
  HumanAlignResult res;
  res.defined = r.has_value();
  res.r = r.value_or(0.0);
  res.samples = ds.size();
  return res;
}

}  // namespace tricortex
