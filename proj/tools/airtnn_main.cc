// airtnn: dataset generation, training, evaluation and sweeps for
// topological neural networks over noisy fading links.
//
// Usage:
//   airtnn gen-data --config exp.cfg --out data/
//   airtnn train --arch airtnn --delta 1 --snr-db 20 --seed 7 --out run/
//   airtnn eval --checkpoint run/checkpoint.txt --data data/dataset.txt
//   airtnn sweep --config configs/paper_fig2.cfg
//   airtnn verify
//
// Every subcommand reads an optional flat config file first; flags and
// --set key=value overrides are applied on top of it.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "airtnn/error.h"
#include "airtnn/harness.h"
#include "airtnn/text_io.h"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> seed, out, arch, delta, snr_db, taps, layers,
      epochs, eval_realizations, data, checkpoint;
  std::vector<std::string> sets;
};

void AddCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Flat key = value config file");
  cmd->add_option("--seed", f.seed, "Master seed (comma list for sweeps)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--arch", f.arch, "airtnn | airgnn | tnn | gnn");
  cmd->add_option("--delta", f.delta, "Rayleigh fading scale");
  cmd->add_option("--snr-db", f.snr_db, "Per-round receiver SNR in dB (inf: no noise)");
  cmd->add_option("--taps", f.taps, "Filter taps P");
  cmd->add_option("--layers", f.layers, "Filter layers L");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--eval-realizations", f.eval_realizations,
                  "Channel draws per test sample");
  cmd->add_option("--data", f.data, "Dataset file (generated when absent)");
  cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint file");
  cmd->add_option("--set", f.sets, "Override any config key: key=value");
}

airtnn::ExperimentConfig BuildConfig(const CommonFlags& f) {
  airtnn::ExperimentConfig cfg;
  if (!f.config.empty()) {
    if (!fs::exists(f.config)) {
      throw airtnn::ConfigError("config file '" + f.config + "' does not exist");
    }
    airtnn::ApplyConfigFile(cfg, f.config);
  }
  auto set = [&cfg](const char* key, const std::optional<std::string>& v) {
    if (v) airtnn::ApplySetting(cfg, key, *v);
  };
  set("seed", f.seed);
  set("out", f.out);
  set("arch", f.arch);
  set("delta", f.delta);
  set("snr_db", f.snr_db);
  set("taps", f.taps);
  set("layers", f.layers);
  set("epochs", f.epochs);
  set("eval_realizations", f.eval_realizations);
  set("data", f.data);
  set("checkpoint", f.checkpoint);
  for (const std::string& kv : f.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw airtnn::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    airtnn::ApplySetting(cfg, std::string(airtnn::Trim(kv.substr(0, eq))),
                         std::string(airtnn::Trim(kv.substr(eq + 1))));
  }
  return cfg;
}

fs::path OutDir(const airtnn::ExperimentConfig& cfg) {
  fs::path dir = cfg.out_dir.empty() ? fs::path(".") : fs::path(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

airtnn::Dataset DatasetFor(const airtnn::ExperimentConfig& cfg) {
  if (!cfg.data_path.empty()) return airtnn::LoadDataset(cfg.data_path);
  airtnn::DatasetConfig d = cfg.dataset;
  d.seed = airtnn::DatasetSeed(cfg.seeds.front());
  return airtnn::Generate(d);
}

int GenData(const airtnn::ExperimentConfig& cfg) {
  cfg.dataset.Validate();
  airtnn::Dataset ds = DatasetFor(cfg);
  const fs::path path = OutDir(cfg) / "dataset.txt";
  airtnn::SaveDataset(path.string(), ds);
  airtnn::SaveComplex((OutDir(cfg) / "complex.txt").string(), ds.complex);
  std::cout << "wrote " << path.string() << " (N0=" << ds.complex.n0()
            << " N1=" << ds.complex.n1() << " N2=" << ds.complex.n2()
            << ", " << ds.train.size() << "/" << ds.val.size() << "/"
            << ds.test.size() << " samples)\n";
  return 0;
}

int TrainCommand(const airtnn::ExperimentConfig& cfg) {
  airtnn::Dataset ds = DatasetFor(cfg);
  airtnn::ModelSpec spec = cfg.model;
  spec.arch = cfg.arch;
  spec.n_classes = ds.config.n_classes;
  airtnn::TrainConfig tcfg = cfg.train;
  tcfg.seed = airtnn::TrainSeed(cfg.seeds.front());
  tcfg.channel = cfg.channel;
  auto topo = airtnn::ModelTopology::For(ds.complex, spec);
  airtnn::TrainResult result = airtnn::Train(spec, topo, ds.train, ds.val, tcfg);
  const fs::path dir = OutDir(cfg);
  airtnn::SaveCheckpoint((dir / "checkpoint.txt").string(), spec, topo.n_cells,
                         result.params);
  std::ofstream hist(dir / "history.csv");
  airtnn::WriteHistoryCsv(hist, result.history);
  const auto& last = result.history.back();
  std::cout << airtnn::ArchName(spec.arch) << " trained for " << tcfg.epochs
            << " epochs; last " << last.split << " loss "
            << airtnn::FormatDouble(last.loss) << " accuracy "
            << airtnn::FormatDouble(last.accuracy) << '\n';
  return 0;
}

int EvalCommand(const airtnn::ExperimentConfig& cfg) {
  if (cfg.checkpoint_path.empty()) {
    throw airtnn::ConfigError("eval needs --checkpoint");
  }
  airtnn::Checkpoint ck = airtnn::LoadCheckpoint(cfg.checkpoint_path);
  airtnn::Dataset ds = DatasetFor(cfg);
  if (ds.complex.n1() != ck.n_cells) {
    throw airtnn::ConfigError("checkpoint and dataset disagree on the number of edges");
  }
  auto topo = airtnn::ModelTopology::For(ds.complex, ck.spec);
  airtnn::EvalResult r =
      airtnn::Evaluate(ck.spec, ck.params, topo, ds.test, cfg.channel,
                       cfg.eval_realizations, airtnn::EvalSeed(cfg.seeds.front()));
  std::cout << "accuracy " << airtnn::FormatDouble(r.mean) << " std "
            << airtnn::FormatDouble(r.stddev) << '\n';
  return 0;
}

int SweepCommand(const airtnn::ExperimentConfig& cfg) {
  airtnn::ExperimentConfig c = cfg;
  if (c.out_dir.empty()) c.out_dir = ".";
  airtnn::SweepResult r = airtnn::RunSweep(c);
  std::cout << "wrote " << r.rows.size() << " rows to "
            << (fs::path(c.out_dir) / c.results_file).string() << '\n';
  return 0;
}

int VerifyCommand(const airtnn::ExperimentConfig& cfg) {
  bool ok = true;
  for (const auto& r : airtnn::RunVerify(cfg.seeds.front())) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological neural networks over noisy fading links"};
  app.require_subcommand(1);
  CommonFlags flags;
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const airtnn::ExperimentConfig&);
  };
  const std::vector<Entry> entries = {
      {"gen-data", "Generate and save a dataset", GenData},
      {"train", "Train one model, write checkpoint and history", TrainCommand},
      {"eval", "Evaluate a checkpoint on the test split", EvalCommand},
      {"sweep", "Run a delta or SNR sweep over all models", SweepCommand},
      {"verify", "Run the built-in invariant and oracle checks", VerifyCommand},
  };
  std::vector<CLI::App*> commands;
  for (const auto& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    AddCommon(cmd, flags);
    commands.push_back(cmd);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    const airtnn::ExperimentConfig cfg = BuildConfig(flags);
    for (size_t i = 0; i < entries.size(); ++i) {
      if (commands[i]->parsed()) return entries[i].run(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "airtnn: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
