#ifndef AIRTNN_HARNESS_H_
#define AIRTNN_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "airtnn/channel.h"
#include "airtnn/dataset.h"
#include "airtnn/nn.h"

namespace airtnn {

const char* Version();

enum class SweepAxis { kDelta, kSnr };

// Everything a run needs. Every field has a flat config key, see
// ApplySetting() and the README for the list.
struct ExperimentConfig {
  DatasetConfig dataset;
  ModelSpec model;            // architecture-independent fields
  TrainConfig train;          // train.channel is unused; see `channel`
  // Fixed channel outside the swept axis. Experiments measure noise against
  // unit power: the signals here have mean square near 1e-2, and a per-round
  // empirical reference leaves the channel almost harmless at 20 dB.
  ChannelConfig channel = {.snr_reference = SnrReference::kUnitPower};
  SweepAxis axis = SweepAxis::kDelta;
  // Empty: the default grid of `axis`, see Grid().
  std::vector<double> grid;
  std::vector<Arch> models = {Arch::kAirTNN, Arch::kAirGNN, Arch::kTNN, Arch::kGNN};
  // false: Air models are trained once at `freeze_at` and evaluated everywhere.
  bool retrain_per_point = true;
  double freeze_at = 1.0;
  int eval_realizations = 20;
  std::vector<uint64_t> seeds = {0};
  std::string out_dir;
  std::string results_file = "results.csv";
  // Used by the single-model subcommands.
  Arch arch = Arch::kAirTNN;
  std::string data_path;
  std::string checkpoint_path;

  void Validate() const;
  std::vector<double> Grid() const;
  // Channel of a sweep point.
  ChannelConfig ChannelAt(double sweep_value) const;
};

// Sets one key; ConfigError for unknown keys or bad values.
void ApplySetting(ExperimentConfig& cfg, const std::string& key,
                  const std::string& value);

// Flat "key = value" lines, '#' starts a comment.
std::vector<std::pair<std::string, std::string>> ParseConfigText(std::istream& in);
void ApplyConfigFile(ExperimentConfig& cfg, const std::string& path);

// Every key with its current value, in a stable order, suitable for
// feeding back through ApplySetting().
std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const ExperimentConfig& cfg);

const char* AxisName(SweepAxis axis);

struct SweepRow {
  std::string model;
  std::string regime;  // "air", "ideal" or "noisy_test"
  std::string axis;
  double sweep_value = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  uint64_t seed = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// model,regime,sweep_axis,sweep_value,accuracy_mean,accuracy_std,seed
void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows);

// Per seed: one dataset, TNN/GNN trained once on ideal links, Air models
// trained per sweep point (or once when frozen); every requested curve is
// evaluated at every sweep value. With a non-empty out_dir, writes
// `results_file` and manifest.txt there. If training aborts, the rows computed
// so far are flushed, the manifest records the failure and the error is
// rethrown.
SweepResult RunSweep(const ExperimentConfig& cfg);

// Seeds derived from a master seed for each stage of a run.
uint64_t DatasetSeed(uint64_t master);
uint64_t TrainSeed(uint64_t master);
uint64_t EvalSeed(uint64_t master);

struct CheckReport {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast built-in invariant and oracle checks (the `verify` subcommand).
std::vector<CheckReport> RunVerify(uint64_t seed);

}  // namespace airtnn

#endif  // AIRTNN_HARNESS_H_
