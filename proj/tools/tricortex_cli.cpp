// Experiment CLI: train / eval / noise-sweep / ablate / trace / human-align.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tricortex/experiments.hpp"
#include "tricortex/training.hpp"

namespace tcx = tricortex;

namespace {

std::vector<std::pair<std::string, std::string>> parse_sets(
    const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& s : sets) {
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw tcx::ConfigError("--set expects key=value, got '" + s + "'");
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

std::vector<uint64_t> parse_seeds(const std::string& spec) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) seeds.push_back(std::stoull(cell));
  }
  if (seeds.empty()) throw tcx::ConfigError("--seeds has no values");
  return seeds;
}

std::vector<double> parse_doubles(const std::string& spec) {
  std::vector<double> vals;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) vals.push_back(std::stod(cell));
  }
  return vals;
}

std::vector<int64_t> parse_ints(const std::string& spec) {
  std::vector<int64_t> vals;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) vals.push_back(std::stoll(cell));
  }
  return vals;
}

std::string default_out(const std::string& command) {
  const char* root = std::getenv("TRICORTEX_OUT");
  return std::string(root ? root : "runs") + "/" + command;
}

tcx::ExperimentConfig load_config(const std::string& path,
                                  const std::vector<std::string>& sets) {
  tcx::ExperimentConfig cfg = path.empty()
                                  ? tcx::ExperimentConfig()
                                  : tcx::ExperimentConfig::from_file(path);
  for (const auto& [k, v] : parse_sets(sets)) cfg.set(k, v);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tricortex: tick-based tripartite architecture experiments"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir, seeds_spec = "1";
  std::string sigmas_spec = "0,0.1,0.25,0.5", samples_spec = "0";
  std::vector<std::string> sets, grid_specs;
  bool no_gate = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--set", sets, "override config key (key=value)");
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "config file");
  train->add_option("--seeds", seeds_spec, "comma-separated training seeds");
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval->add_flag("--no-gate", no_gate, "fixed-T evaluation (no early exit)");
  add_common(eval);

  CLI::App* sweep = app.add_subcommand("noise-sweep",
                                       "accuracy/steps under Gaussian noise");
  sweep->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  sweep->add_option("--sigmas", sigmas_spec, "comma-separated noise levels");
  add_common(sweep);

  CLI::App* ablate = app.add_subcommand("ablate", "train a config grid");
  ablate->add_option("--config", config_path, "base config file");
  ablate->add_option("--grid", grid_specs, "grid axis key=v1,v2")->required();
  ablate->add_option("--seeds", seeds_spec, "shared seeds per cell");
  add_common(ablate);

  CLI::App* trace = app.add_subcommand("trace", "per-tick trace export");
  trace->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  trace->add_option("--samples", samples_spec, "comma-separated sample indices");
  add_common(trace);

  CLI::App* halign = app.add_subcommand(
      "human-align", "model certainty vs human agreement");
  halign->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  add_common(halign);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (out_dir.empty()) out_dir = default_out("train");
      tcx::ExperimentConfig cfg = load_config(config_path, sets);
      std::vector<uint64_t> seeds = parse_seeds(seeds_spec);
      if (seeds.size() == 1) {
        tcx::TrainRunSummary s = tcx::run_training(cfg, seeds[0], out_dir);
        std::cout << "val_accuracy=" << s.val_accuracy
                  << " mean_stop_ticks=" << s.val_mean_stop_ticks
                  << " checkpoint=" << s.checkpoint_path << "\n";
      } else {
        auto runs = tcx::run_training_seeds(cfg, seeds, out_dir);
        double mean = 0;
        for (const auto& r : runs) mean += r.val_accuracy;
        std::cout << "seeds=" << runs.size()
                  << " mean_val_accuracy=" << mean / runs.size() << " summary="
                  << out_dir << "/summary.json\n";
      }
    } else if (eval->parsed()) {
      if (out_dir.empty()) out_dir = default_out("eval");
      tcx::LoadedModel lm = tcx::load_model(checkpoint_path, parse_sets(sets));
      tcx::Dataset ds = tcx::build_eval_dataset(lm.config);
      tcx::EvalStats st =
          tcx::run_eval(*lm.model, lm.config, ds, out_dir, !no_gate);
      std::cout << "accuracy=" << st.accuracy
                << " mean_stop_ticks=" << st.mean_stop_ticks
                << " mean_certainty=" << st.mean_certainty << "\n";
    } else if (sweep->parsed()) {
      if (out_dir.empty()) out_dir = default_out("noise-sweep");
      tcx::LoadedModel lm = tcx::load_model(checkpoint_path, parse_sets(sets));
      tcx::Dataset ds = tcx::build_eval_dataset(lm.config);
      auto rows = tcx::run_noise_sweep(*lm.model, lm.config, ds,
                                       parse_doubles(sigmas_spec), out_dir);
      for (const auto& r : rows) {
        std::cout << "sigma=" << r.sigma << " accuracy=" << r.accuracy
                  << " mean_stop_ticks=" << r.mean_stop_ticks << "\n";
      }
    } else if (ablate->parsed()) {
      if (out_dir.empty()) out_dir = default_out("ablate");
      tcx::ExperimentConfig cfg = load_config(config_path, sets);
      std::vector<tcx::GridAxis> grid;
      for (const std::string& g : grid_specs) {
        grid.push_back(tcx::parse_grid_axis(g));
      }
      auto cells =
          tcx::run_ablation(cfg, grid, parse_seeds(seeds_spec), out_dir);
      for (size_t i = 0; i < cells.size(); ++i) {
        std::cout << "cell" << i << " accuracy=" << cells[i].mean_accuracy
                  << "+/-" << cells[i].std_accuracy
                  << " mean_stop_ticks=" << cells[i].mean_stop_ticks << "\n";
      }
    } else if (trace->parsed()) {
      if (out_dir.empty()) out_dir = default_out("trace");
      tcx::LoadedModel lm = tcx::load_model(checkpoint_path, parse_sets(sets));
      tcx::Dataset ds = tcx::build_eval_dataset(lm.config);
      tcx::run_trace_export(*lm.model, lm.config, ds, parse_ints(samples_spec),
                            out_dir);
      std::cout << "traces written to " << out_dir << "\n";
    } else if (halign->parsed()) {
      if (out_dir.empty()) out_dir = default_out("human-align");
      tcx::LoadedModel lm = tcx::load_model(checkpoint_path, parse_sets(sets));
      tcx::Dataset ds = tcx::build_eval_dataset(lm.config);
      tcx::HumanAlignResult res =
          tcx::run_human_align(*lm.model, lm.config, ds, out_dir);
      if (res.defined) {
        std::cout << "pearson_r=" << res.r << " samples=" << res.samples << "\n";
      } else {
        std::cout << "pearson_r=undefined (zero variance) samples="
                  << res.samples << "\n";
      }
    }
  } catch (const tcx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return tcx::ExitCodes::kConfig;
  } catch (const tcx::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return tcx::ExitCodes::kData;
  } catch (const tcx::CheckpointError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return tcx::ExitCodes::kData;
  } catch (const tcx::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return tcx::ExitCodes::kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return tcx::ExitCodes::kOk;
}
