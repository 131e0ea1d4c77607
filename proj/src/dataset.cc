#include "airtnn/dataset.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "airtnn/error.h"
#include "airtnn/text_io.h"

namespace airtnn {

void DatasetConfig::Validate() const {
  if (n_nodes < 1 || n_communities < 1 || n_nodes % n_communities != 0) {
    throw ConfigError("n_nodes must be a positive multiple of n_communities");
  }
  if (!(0.0 <= p_inter && p_inter <= p_intra && p_intra <= 1.0)) {
    throw ConfigError("need 0 <= p_inter <= p_intra <= 1");
  }
  if (n_train < 0 || n_val < 0 || n_test < 0) {
    throw ConfigError("split sizes must be non-negative");
  }
  if (spikes < 1) throw ConfigError("need at least one spike per sample");
  if (!(spike_variance > 0.0)) throw ConfigError("spike variance must be positive");
  if (tau_max < 1) throw ConfigError("tau_max must be at least 1");
  if (n_classes != n_communities && n_classes != n_communities + 1) {
    throw ConfigError("n_classes must be n_communities or n_communities + 1");
  }
  if (diffusion_kind != ShiftKind::kLowerAdjacency &&
      diffusion_kind != ShiftKind::kLowerLaplacian) {
    throw ConfigError("diffusion must use a lower shift operator");
  }
}

Eigen::VectorXd BaseSignal(const CellComplex2& complex, Rng& rng) {
  const double sd = std::sqrt(1.0 / std::max(1, complex.n1()));
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd x0(complex.n0());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = normal(rng);
  Eigen::VectorXd x2(complex.n2());
  for (Eigen::Index i = 0; i < x2.size(); ++i) x2(i) = normal(rng);
  Eigen::VectorXd x1 = complex.b1().transpose().cast<double>() * x0;
  if (complex.n2() > 0) x1 += complex.b2().cast<double>() * x2;
  return x1;
}

Eigen::VectorXd InjectSpikes(const std::vector<int>& edge_class, int cls,
                             int count, double variance, Rng& rng) {
  std::vector<int> candidates;
  for (int e = 0; e < static_cast<int>(edge_class.size()); ++e) {
    if (edge_class[e] == cls) candidates.push_back(e);
  }
  if (count < 1 || static_cast<int>(candidates.size()) < count) {
    throw ConfigError("class " + std::to_string(cls) + " has " +
                      std::to_string(candidates.size()) + " edges, need " +
                      std::to_string(count));
  }
  Eigen::VectorXd spikes = Eigen::VectorXd::Zero(edge_class.size());
  std::normal_distribution<double> intensity(0.0, std::sqrt(variance));
  // Partial Fisher-Yates: the first `count` slots are a uniform draw
  // without replacement.
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<int> pick(k, static_cast<int>(candidates.size()) - 1);
    std::swap(candidates[k], candidates[pick(rng)]);
    spikes(candidates[k]) = intensity(rng);
  }
  return spikes;
}

Eigen::VectorXd InjectSpikes(const CellComplex2& complex, int cls, int count,
                             double variance, Rng& rng) {
  return InjectSpikes(EdgePartition(complex), cls, count, variance, rng);
}

Diffuser::Diffuser(const CellComplex2& complex, ShiftKind kind) {
  ShiftOperator s = MakeShiftOperator(complex, kind);
  const double lambda = SpectralNorm(s);
  op_ = lambda > 0.0 ? Eigen::MatrixXd(s.matrix / lambda) : s.matrix;
}

Eigen::VectorXd Diffuser::Apply(const Eigen::VectorXd& v, int tau, double snr_db,
                                Rng& rng) const {
  if (tau < 0) throw ContractError("negative diffusion order");
  Eigen::VectorXd x = v;
  for (int t = 0; t < tau; ++t) x = op_ * x;
  if (snr_db == std::numeric_limits<double>::infinity() || x.size() == 0) return x;
  const double power = x.squaredNorm() / static_cast<double>(x.size());
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  if (sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, sigma);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += normal(rng);
  }
  return x;
}

Eigen::VectorXd Diffuse(const CellComplex2& complex, const Eigen::VectorXd& v,
                        int tau, double snr_db, ShiftKind kind, Rng& rng) {
  return Diffuser(complex, kind).Apply(v, tau, snr_db, rng);
}

namespace {

std::vector<SourceLocSample> GenerateSplit(const DatasetConfig& cfg,
                                           const CellComplex2& complex,
                                           const std::vector<int>& edge_class,
                                           const Diffuser& diffuser, int split_id,
                                           int count) {
  std::vector<SourceLocSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng = MakeRng(cfg.seed, {TagOf("sample"), static_cast<uint64_t>(split_id),
                                 static_cast<uint64_t>(i)});
    SourceLocSample s;
    s.label = std::uniform_int_distribution<int>(0, cfg.n_classes - 1)(rng);
    s.tau = std::uniform_int_distribution<int>(1, cfg.tau_max)(rng);
    Eigen::VectorXd v = BaseSignal(complex, rng);
    v += InjectSpikes(edge_class, s.label, cfg.spikes, cfg.spike_variance, rng);
    s.x = diffuser.Apply(v, s.tau, cfg.diffusion_snr_db, rng);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

Dataset Generate(const DatasetConfig& config) {
  config.Validate();
  Dataset ds;
  ds.config = config;
  Rng graph_rng = MakeRng(config.seed, {TagOf("complex")});
  ds.complex = LiftToComplex(SbmGenerate(config.n_nodes, config.n_communities,
                                         config.p_intra, config.p_inter, graph_rng));
  const std::vector<int> edge_class = EdgePartition(ds.complex);
  std::vector<int> sizes(config.n_communities + 1, 0);
  for (int c : edge_class) ++sizes[c];
  for (int c = 0; c < config.n_classes; ++c) {
    if (sizes[c] < config.spikes) {
      throw ConfigError("class " + std::to_string(c) + " has only " +
                        std::to_string(sizes[c]) + " edges, fewer than " +
                        std::to_string(config.spikes) + " spikes");
    }
  }
  const Diffuser diffuser(ds.complex, config.diffusion_kind);
  ds.train = GenerateSplit(config, ds.complex, edge_class, diffuser, 0, config.n_train);
  ds.val = GenerateSplit(config, ds.complex, edge_class, diffuser, 1, config.n_val);
  ds.test = GenerateSplit(config, ds.complex, edge_class, diffuser, 2, config.n_test);
  return ds;
}

namespace {

void WriteSplit(std::ostream& out, const char* name,
                const std::vector<SourceLocSample>& samples) {
  out << "split " << name << ' ' << samples.size() << '\n';
  for (const auto& s : samples) {
    out << "sample " << s.label << ' ' << s.tau;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) out << ' ' << FormatDouble(s.x(i));
    out << '\n';
  }
}

std::vector<SourceLocSample> ReadSplit(LineReader& reader, std::string_view name,
                                       int n_cells, int n_classes) {
  auto t = reader.Expect("split");
  if (t.size() != 3 || t[1] != name) {
    throw ParseError("expected split '" + std::string(name) + "'", reader.line());
  }
  const int64_t count = ParseInt(t[2], reader.line());
  if (count < 0) throw ParseError("negative split size", reader.line());
  std::vector<SourceLocSample> out;
  out.reserve(count);
  for (int64_t i = 0; i < count; ++i) {
    auto v = reader.Expect("sample");
    if (static_cast<int>(v.size()) != 3 + n_cells) {
      throw ParseError("sample must hold label, tau and " +
                           std::to_string(n_cells) + " values",
                       reader.line());
    }
    SourceLocSample s;
    s.label = static_cast<int>(ParseInt(v[1], reader.line()));
    s.tau = static_cast<int>(ParseInt(v[2], reader.line()));
    if (s.label < 0 || s.label >= n_classes) {
      throw ParseError("label out of range", reader.line());
    }
    s.x.resize(n_cells);
    for (int k = 0; k < n_cells; ++k) s.x(k) = ParseDouble(v[3 + k], reader.line());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void WriteDataset(std::ostream& out, const Dataset& ds) {
  const DatasetConfig& c = ds.config;
  out << "airtnn-dataset 1\n";
  out << "config n_nodes " << c.n_nodes << '\n';
  out << "config n_communities " << c.n_communities << '\n';
  out << "config p_intra " << FormatDouble(c.p_intra) << '\n';
  out << "config p_inter " << FormatDouble(c.p_inter) << '\n';
  out << "config n_train " << c.n_train << '\n';
  out << "config n_val " << c.n_val << '\n';
  out << "config n_test " << c.n_test << '\n';
  out << "config spikes " << c.spikes << '\n';
  out << "config spike_variance " << FormatDouble(c.spike_variance) << '\n';
  out << "config tau_max " << c.tau_max << '\n';
  out << "config diffusion_snr_db " << FormatDouble(c.diffusion_snr_db) << '\n';
  out << "config diffusion_kind " << ShiftKindName(c.diffusion_kind) << '\n';
  out << "config n_classes " << c.n_classes << '\n';
  out << "config seed " << c.seed << '\n';
  WriteComplex(out, ds.complex);
  WriteSplit(out, "train", ds.train);
  WriteSplit(out, "val", ds.val);
  WriteSplit(out, "test", ds.test);
  out << "end-dataset\n";
}

Dataset ReadDataset(std::istream& in) {
  LineReader reader(in);
  auto header = reader.Expect("airtnn-dataset");
  if (header.size() != 2) throw ParseError("bad dataset header", reader.line());
  if (header[1] != "1") {
    throw UnsupportedVersionError(
        "unsupported dataset format version " + std::string(header[1]),
        reader.line());
  }
  Dataset ds;
  DatasetConfig& c = ds.config;
  const std::vector<std::string> keys = {
      "n_nodes", "n_communities", "p_intra", "p_inter", "n_train",
      "n_val", "n_test", "spikes", "spike_variance", "tau_max",
      "diffusion_snr_db", "diffusion_kind", "n_classes", "seed"};
  for (const std::string& key : keys) {
    auto t = reader.Expect("config");
    if (t.size() != 3 || t[1] != key) {
      throw ParseError("expected config entry '" + key + "'", reader.line());
    }
    const int line = reader.line();
    std::string_view v = t[2];
    if (key == "n_nodes") c.n_nodes = static_cast<int>(ParseInt(v, line));
    else if (key == "n_communities") c.n_communities = static_cast<int>(ParseInt(v, line));
    else if (key == "p_intra") c.p_intra = ParseDouble(v, line);
    else if (key == "p_inter") c.p_inter = ParseDouble(v, line);
    else if (key == "n_train") c.n_train = static_cast<int>(ParseInt(v, line));
    else if (key == "n_val") c.n_val = static_cast<int>(ParseInt(v, line));
    else if (key == "n_test") c.n_test = static_cast<int>(ParseInt(v, line));
    else if (key == "spikes") c.spikes = static_cast<int>(ParseInt(v, line));
    else if (key == "spike_variance") c.spike_variance = ParseDouble(v, line);
    else if (key == "tau_max") c.tau_max = static_cast<int>(ParseInt(v, line));
    else if (key == "diffusion_snr_db") c.diffusion_snr_db = ParseDouble(v, line);
    else if (key == "diffusion_kind") {
      try {
        c.diffusion_kind = ParseShiftKind(std::string(v));
      } catch (const ConfigError& e) {
        throw ParseError(e.what(), line);
      }
    } else if (key == "n_classes") c.n_classes = static_cast<int>(ParseInt(v, line));
    else if (key == "seed") c.seed = ParseUint(v, line);
  }
  ds.complex = ReadComplex(reader);
  ds.train = ReadSplit(reader, "train", ds.complex.n1(), c.n_classes);
  ds.val = ReadSplit(reader, "val", ds.complex.n1(), c.n_classes);
  ds.test = ReadSplit(reader, "test", ds.complex.n1(), c.n_classes);
  reader.Expect("end-dataset");
  return ds;
}

void SaveDataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteDataset(out, dataset);
}

Dataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return ReadDataset(in);
}

}  // namespace airtnn
