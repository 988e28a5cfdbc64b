#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tricortex/checkpoint.hpp"
#include "tricortex/config.hpp"

namespace tricortex {

/// CLI exit codes, usable by scripts to branch on the failure class.
struct ExitCodes {
  static constexpr int kOk = 0;
  static constexpr int kConfig = 2;
  static constexpr int kData = 3;
  static constexpr int kNumeric = 4;
};

struct DataBundle {
  Dataset train;
  Dataset val;
};

/// Materializes the configured data source and splits it.
DataBundle build_datasets(const ExperimentConfig& cfg);

/// The set evaluation-style commands run on: the whole file for binary
/// sources, the validation split for synthetic ones. Attaches
/// data.human_probs when configured (row count must match this set).
Dataset build_eval_dataset(const ExperimentConfig& cfg);

std::unique_ptr<Model> build_model(const ExperimentConfig& cfg);

/// Rebuilds the model recorded in a checkpoint (its resolved config) and
/// loads the weights. Overrides apply after the stored config is parsed.
struct LoadedModel {
  std::unique_ptr<Model> model;
  ExperimentConfig config;
  CheckpointMeta meta;
};
LoadedModel load_model(const std::string& checkpoint_path,
                       const std::vector<std::pair<std::string, std::string>>&
                           overrides = {});

// ---- commands ----

struct TrainRunSummary {
  uint64_t seed = 0;
  double val_accuracy = 0.0;
  double val_mean_stop_ticks = 0.0;
  double val_mean_certainty = 0.0;
  bool aborted_on_nan = false;
  std::string checkpoint_path;
};

/// One training run: writes config.resolved.cfg, metrics.jsonl, and
/// checkpoint.bin under out_dir.
TrainRunSummary run_training(const ExperimentConfig& cfg, uint64_t seed,
                             const std::string& out_dir);

/// Replicate protocol: one run per seed under out_dir/seed_<s>/ plus a
/// mean +/- std summary.json.
std::vector<TrainRunSummary> run_training_seeds(const ExperimentConfig& cfg,
                                                const std::vector<uint64_t>& seeds,
                                                const std::string& out_dir);

/// Evaluation on the config's validation split; writes per-sample CSV.
EvalStats run_eval(const Model& model, const ExperimentConfig& cfg,
                   const Dataset& ds, const std::string& out_dir, bool gate);

struct NoiseRow {
  double sigma = 0.0;
  double accuracy = 0.0;
  double mean_stop_ticks = 0.0;
  double mean_certainty = 0.0;
};
std::vector<NoiseRow> run_noise_sweep(const Model& model,
                                      const ExperimentConfig& cfg,
                                      const Dataset& clean,
                                      const std::vector<double>& sigmas,
                                      const std::string& out_dir);

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};
struct AblationCell {
  std::vector<std::pair<std::string, std::string>> assignment;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_stop_ticks = 0.0;
};
/// Trains every grid cell with the shared seed list; writes a comparison
/// table CSV and returns the rows.
std::vector<AblationCell> run_ablation(const ExperimentConfig& base,
                                       const std::vector<GridAxis>& grid,
                                       const std::vector<uint64_t>& seeds,
                                       const std::string& out_dir);

/// Per-tick trace files for chosen samples: run state + certainty,
/// attention rows, activation magnitudes.
void run_trace_export(const Model& model, const ExperimentConfig& cfg,
                      const Dataset& ds, const std::vector<int64_t>& samples,
                      const std::string& out_dir);

struct HumanAlignResult {
  double r = 0.0;
  bool defined = false;
  int64_t samples = 0;
};
/// Model certainty vs per-sample human agreement, Pearson r plus a
/// scatter CSV.
HumanAlignResult run_human_align(const Model& model, const ExperimentConfig& cfg,
                                 const Dataset& ds, const std::string& out_dir);

/// `key=v1,v2,...` -> axis; validates the key against the registry.
GridAxis parse_grid_axis(const std::string& spec);

void ensure_dir(const std::string& path);

}  // namespace tricortex
