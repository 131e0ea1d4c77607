#include "airtnn/harness.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "airtnn/error.h"
#include "airtnn/text_io.h"

#ifndef AIRTNN_VERSION
#define AIRTNN_VERSION "unknown"
#endif

namespace airtnn {

const char* Version() { return AIRTNN_VERSION; }

const char* AxisName(SweepAxis axis) {
  return axis == SweepAxis::kDelta ? "delta" : "snr";
}

uint64_t DatasetSeed(uint64_t master) { return DeriveSeed(master, {TagOf("dataset")}); }
uint64_t TrainSeed(uint64_t master) { return DeriveSeed(master, {TagOf("train")}); }
uint64_t EvalSeed(uint64_t master) { return DeriveSeed(master, {TagOf("eval")}); }

std::vector<double> ExperimentConfig::Grid() const {
  if (!grid.empty()) return grid;
  if (axis == SweepAxis::kDelta) return {0.5, 0.75, 1.0, 1.25, 1.5, 2.0};
  return {0.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0};
}

void ExperimentConfig::Validate() const {
  dataset.Validate();
  model.Validate();
  train.Validate();
  channel.Validate();
  for (double v : Grid()) {
    if (std::isnan(v)) throw ConfigError("sweep grid holds NaN");
    if (axis == SweepAxis::kDelta && !(v > 0.0 && std::isfinite(v))) {
      throw ConfigError("delta grid values must be finite and positive");
    }
  }
  const double fixed = axis == SweepAxis::kDelta ? channel.snr_db : channel.fading_scale;
  if (axis == SweepAxis::kDelta ? std::isnan(fixed) : !std::isfinite(fixed)) {
    throw ConfigError("fixed counterpart of the sweep must be finite");
  }
  if (models.empty()) throw ConfigError("no models selected");
  if (eval_realizations < 1) throw ConfigError("eval_realizations must be >= 1");
  if (seeds.empty()) throw ConfigError("no seeds given");
  if (model.n_classes != dataset.n_classes) {
    throw ConfigError("model and dataset disagree on the number of classes");
  }
}

ChannelConfig ExperimentConfig::ChannelAt(double sweep_value) const {
  ChannelConfig c = channel;
  if (axis == SweepAxis::kDelta) {
    c.fading_scale = sweep_value;
  } else {
    c.snr_db = sweep_value;
  }
  return c;
}

namespace {

std::string LowerCase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool ParseBool(const std::string& key, const std::string& v) {
  const std::string s = LowerCase(v);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + v + "'");
}

int ToInt(const std::string& key, const std::string& v) {
  try {
    return static_cast<int>(ParseInt(v));
  } catch (const ParseError&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
}

double ToDouble(const std::string& key, const std::string& v) {
  try {
    return ParseDouble(v);
  } catch (const ParseError&) {
    throw ConfigError("'" + key + "' expects a real number, got '" + v + "'");
  }
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += FormatDouble(v[i]);
  }
  return out;
}

template <typename T>
std::string JoinInts(const std::vector<T>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

void ApplySetting(ExperimentConfig& cfg, const std::string& key,
                  const std::string& value) {
  DatasetConfig& d = cfg.dataset;
  ModelSpec& m = cfg.model;
  TrainConfig& t = cfg.train;
  ChannelConfig& c = cfg.channel;
  const std::string& v = value;
  if (key == "n_nodes") d.n_nodes = ToInt(key, v);
  else if (key == "n_communities") d.n_communities = ToInt(key, v);
  else if (key == "p_intra") d.p_intra = ToDouble(key, v);
  else if (key == "p_inter") d.p_inter = ToDouble(key, v);
  else if (key == "n_train") d.n_train = ToInt(key, v);
  else if (key == "n_val") d.n_val = ToInt(key, v);
  else if (key == "n_test") d.n_test = ToInt(key, v);
  else if (key == "spikes") d.spikes = ToInt(key, v);
  else if (key == "spike_variance") d.spike_variance = ToDouble(key, v);
  else if (key == "tau_max") d.tau_max = ToInt(key, v);
  else if (key == "diffusion_snr_db") d.diffusion_snr_db = ToDouble(key, v);
  else if (key == "diffusion_kind") d.diffusion_kind = ParseShiftKind(v);
  else if (key == "n_classes") {
    d.n_classes = ToInt(key, v);
    m.n_classes = d.n_classes;
  } else if (key == "layers") m.n_layers = ToInt(key, v);
  else if (key == "taps") m.taps = ToInt(key, v);
  else if (key == "hidden") {
    m.hidden.clear();
    for (const auto& h : SplitList(v)) m.hidden.push_back(ToInt(key, h));
  } else if (key == "pooling") m.pooling = ParsePooling(v);
  else if (key == "readout_hidden") m.readout_hidden = ToInt(key, v);
  else if (key == "nonlinearity") m.nonlinearity = ParseNonlinearity(v);
  else if (key == "laplacian_shifts") m.laplacian_shifts = ParseBool(key, v);
  else if (key == "normalize_shifts") m.normalize_shifts = ParseBool(key, v);
  else if (key == "epochs") t.epochs = ToInt(key, v);
  else if (key == "batch_size") t.batch_size = ToInt(key, v);
  else if (key == "lr") t.adam.step_size = ToDouble(key, v);
  else if (key == "beta1") t.adam.beta1 = ToDouble(key, v);
  else if (key == "beta2") t.adam.beta2 = ToDouble(key, v);
  else if (key == "adam_epsilon") t.adam.epsilon = ToDouble(key, v);
  else if (key == "delta") c.fading_scale = ToDouble(key, v);
  else if (key == "snr_db") c.snr_db = ToDouble(key, v);
  else if (key == "snr_reference") {
    const std::string s = LowerCase(v);
    if (s == "unit") c.snr_reference = SnrReference::kUnitPower;
    else if (s == "empirical") c.snr_reference = SnrReference::kEmpiricalSignalPower;
    else throw ConfigError("snr_reference must be 'unit' or 'empirical'");
  } else if (key == "ideal") c.ideal = ParseBool(key, v);
  else if (key == "sweep_axis") {
    const std::string s = LowerCase(v);
    if (s == "delta") cfg.axis = SweepAxis::kDelta;
    else if (s == "snr") cfg.axis = SweepAxis::kSnr;
    else throw ConfigError("sweep_axis must be 'delta' or 'snr'");
  } else if (key == "grid") {
    cfg.grid.clear();
    for (const auto& g : SplitList(v)) cfg.grid.push_back(ToDouble(key, g));
  } else if (key == "models") {
    cfg.models.clear();
    for (const auto& a : SplitList(v)) cfg.models.push_back(ParseArch(a));
  } else if (key == "retrain_per_point") cfg.retrain_per_point = ParseBool(key, v);
  else if (key == "freeze_at") cfg.freeze_at = ToDouble(key, v);
  else if (key == "eval_realizations") cfg.eval_realizations = ToInt(key, v);
  else if (key == "seed") {
    cfg.seeds.clear();
    for (const auto& s : SplitList(v)) {
      try {
        cfg.seeds.push_back(ParseUint(s));
      } catch (const ParseError&) {
        throw ConfigError("'seed' expects unsigned integers, got '" + s + "'");
      }
    }
  } else if (key == "out") cfg.out_dir = v;
  else if (key == "results_file") cfg.results_file = v;
  else if (key == "arch") cfg.arch = ParseArch(v);
  else if (key == "data") cfg.data_path = v;
  else if (key == "checkpoint") cfg.checkpoint_path = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ParseConfigText(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = Trim(s);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", n);
    std::string key(Trim(s.substr(0, eq)));
    std::string value(Trim(s.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", n);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void ApplyConfigFile(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  for (const auto& [k, v] : ParseConfigText(in)) ApplySetting(cfg, k, v);
}

std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const ExperimentConfig& cfg) {
  const DatasetConfig& d = cfg.dataset;
  const ModelSpec& m = cfg.model;
  const TrainConfig& t = cfg.train;
  const ChannelConfig& c = cfg.channel;
  std::vector<std::string> models;
  for (Arch a : cfg.models) models.push_back(ArchName(a));
  std::string model_list;
  for (size_t i = 0; i < models.size(); ++i) model_list += (i ? "," : "") + models[i];
  return {
      {"n_nodes", std::to_string(d.n_nodes)},
      {"n_communities", std::to_string(d.n_communities)},
      {"p_intra", FormatDouble(d.p_intra)},
      {"p_inter", FormatDouble(d.p_inter)},
      {"n_train", std::to_string(d.n_train)},
      {"n_val", std::to_string(d.n_val)},
      {"n_test", std::to_string(d.n_test)},
      {"spikes", std::to_string(d.spikes)},
      {"spike_variance", FormatDouble(d.spike_variance)},
      {"tau_max", std::to_string(d.tau_max)},
      {"diffusion_snr_db", FormatDouble(d.diffusion_snr_db)},
      {"diffusion_kind", ShiftKindName(d.diffusion_kind)},
      {"n_classes", std::to_string(d.n_classes)},
      {"layers", std::to_string(m.n_layers)},
      {"taps", std::to_string(m.taps)},
      {"hidden", JoinInts(m.hidden)},
      {"pooling", PoolingName(m.pooling)},
      {"readout_hidden", std::to_string(m.readout_hidden)},
      {"nonlinearity", NonlinearityName(m.nonlinearity)},
      {"laplacian_shifts", m.laplacian_shifts ? "true" : "false"},
      {"normalize_shifts", m.normalize_shifts ? "true" : "false"},
      {"epochs", std::to_string(t.epochs)},
      {"batch_size", std::to_string(t.batch_size)},
      {"lr", FormatDouble(t.adam.step_size)},
      {"beta1", FormatDouble(t.adam.beta1)},
      {"beta2", FormatDouble(t.adam.beta2)},
      {"adam_epsilon", FormatDouble(t.adam.epsilon)},
      {"delta", FormatDouble(c.fading_scale)},
      {"snr_db", FormatDouble(c.snr_db)},
      {"snr_reference",
       c.snr_reference == SnrReference::kUnitPower ? "unit" : "empirical"},
      {"ideal", c.ideal ? "true" : "false"},
      {"sweep_axis", AxisName(cfg.axis)},
      {"grid", JoinDoubles(cfg.Grid())},
      {"models", model_list},
      {"retrain_per_point", cfg.retrain_per_point ? "true" : "false"},
      {"freeze_at", FormatDouble(cfg.freeze_at)},
      {"eval_realizations", std::to_string(cfg.eval_realizations)},
      {"seed", JoinInts(cfg.seeds)},
      {"arch", ArchName(cfg.arch)},
      {"results_file", cfg.results_file},
  };
}

void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "model,regime,sweep_axis,sweep_value,accuracy_mean,accuracy_std,seed\n";
  for (const SweepRow& r : rows) {
    out << r.model << ',' << r.regime << ',' << r.axis << ','
        << FormatDouble(r.sweep_value) << ',' << FormatDouble(r.accuracy_mean)
        << ',' << FormatDouble(r.accuracy_std) << ',' << r.seed << '\n';
  }
}

namespace {

void WriteManifest(const std::filesystem::path& path, const ExperimentConfig& cfg,
                   const std::string& status, const std::string& message) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest '" + path.string() + "'");
  out << "# airtnn sweep manifest\n";
  out << "# version = " << Version() << '\n';
  out << "# status = " << status << '\n';
  if (!message.empty()) out << "# error = " << message << '\n';
  for (uint64_t s : cfg.seeds) {
    out << "# seed " << s << ": dataset=" << DatasetSeed(s)
        << " train=" << TrainSeed(s) << " eval=" << EvalSeed(s) << '\n';
  }
  out << "# outputs = " << cfg.results_file << '\n';
  for (const auto& [k, v] : ConfigEntries(cfg)) out << k << " = " << v << '\n';
}

void Flush(const ExperimentConfig& cfg, const std::vector<SweepRow>& rows,
           const std::string& status, const std::string& message) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / cfg.results_file);
  if (!csv) throw Error("cannot write " + cfg.results_file + " in '" + cfg.out_dir + "'");
  WriteSweepCsv(csv, rows);
  WriteManifest(dir / "manifest.txt", cfg, status, message);
}

}  // namespace

SweepResult RunSweep(const ExperimentConfig& cfg) {
  cfg.Validate();
  SweepResult result;
  auto want = [&](Arch a) {
    return std::find(cfg.models.begin(), cfg.models.end(), a) != cfg.models.end();
  };
  const std::string axis = AxisName(cfg.axis);
  const std::vector<double> grid = cfg.Grid();
  try {
    for (uint64_t seed : cfg.seeds) {
      DatasetConfig dcfg = cfg.dataset;
      dcfg.seed = DatasetSeed(seed);
      const Dataset ds = Generate(dcfg);
      const ModelTopology topo =
          ModelTopology::For(ds.complex, cfg.model);
      TrainConfig tcfg = cfg.train;
      tcfg.seed = TrainSeed(seed);
      const uint64_t eval_seed = EvalSeed(seed);
      auto row = [&](Arch a, const char* regime, double value, const EvalResult& e) {
        result.rows.push_back(
            {ArchName(a), regime, axis, value, e.mean, e.stddev, seed});
      };

      for (Arch a : {Arch::kAirTNN, Arch::kAirGNN}) {
        if (!want(a)) continue;
        ModelSpec spec = cfg.model;
        spec.arch = a;
        ModelParams frozen;
        if (!cfg.retrain_per_point) {
          tcfg.channel = cfg.ChannelAt(cfg.freeze_at);
          frozen = Train(spec, topo, ds.train, {}, tcfg).params;
        }
        for (double v : grid) {
          const ChannelConfig ch = cfg.ChannelAt(v);
          ModelParams params;
          if (cfg.retrain_per_point) {
            tcfg.channel = ch;
            params = Train(spec, topo, ds.train, {}, tcfg).params;
          }
          const ModelParams& p = cfg.retrain_per_point ? params : frozen;
          row(a, "air", v,
              Evaluate(spec, p, topo, ds.test, ch, cfg.eval_realizations, eval_seed));
        }
      }

      for (Arch a : {Arch::kTNN, Arch::kGNN}) {
        if (!want(a)) continue;
        ModelSpec spec = cfg.model;
        spec.arch = a;
        tcfg.channel = ChannelConfig::Ideal();
        const ModelParams params = Train(spec, topo, ds.train, {}, tcfg).params;
        const EvalResult ideal = Evaluate(spec, params, topo, ds.test,
                                          ChannelConfig::Ideal(), 1, eval_seed);
        for (double v : grid) row(a, "ideal", v, ideal);
        for (double v : grid) {
          row(a, "noisy_test", v,
              Evaluate(spec, params, topo, ds.test, cfg.ChannelAt(v),
                       cfg.eval_realizations, eval_seed));
        }
      }
    }
  } catch (const std::exception& e) {
    Flush(cfg, result.rows, "failed", e.what());
    throw;
  }
  Flush(cfg, result.rows, "ok", "");
  return result;
}

}  // namespace airtnn
