// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails. Sweep outputs land in ./acceptance_out.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "airtnn/dataset.h"
#include "airtnn/harness.h"
#include "airtnn/nn.h"
#include "grad_check.h"

namespace airtnn {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kEpochs = 15;
const std::vector<uint64_t> kSeeds = {0, 1, 2};

struct Outcome {
  bool passed = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double MaxRel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

double MaxRel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0, scale = 1.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  for (size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst / scale;
}

CellComplex2 DeskComplex(uint64_t seed) {
  DatasetConfig d;
  Rng rng = MakeRng(seed, {TagOf("complex")});
  return LiftToComplex(SbmGenerate(d.n_nodes, d.n_communities, d.p_intra, d.p_inter, rng));
}

Eigen::MatrixXd Gaussian(int r, int c, Rng& rng, double sd = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = airtnn::Gaussian(rng, 0.0, sd);
  return m;
}

Outcome StructuralInvariants() {
  const auto start = Clock::now();
  int bad = 0;
  long edges = 0, polygons = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    CellComplex2 c = DeskComplex(seed);
    const bool zero = c.n2() == 0 || (c.b1() * c.b2()).cwiseAbs().maxCoeff() == 0;
    const bool count = c.n2() == c.n1() - c.n0() + 1;
    if (!zero || !count) ++bad;
    edges += c.n1();
    polygons += c.n2();
  }
  const double secs = Seconds(start);
  return {bad == 0 && secs < 30.0,
          "50 complexes, " + std::to_string(bad) + " violations, mean E=" +
              Fmt(edges / 50.0) + " mean polygons=" + Fmt(polygons / 50.0) + ", " +
              Fmt(secs, 3) + " s"};
}

// Dense reference TNN on binary adjacencies, written independently of the
// library's shift and filter code.
Eigen::VectorXd DenseTnn(const ModelSpec& spec, const ModelParams& p,
                         const Eigen::MatrixXd& sd, const Eigen::MatrixXd& su,
                         const Eigen::MatrixXd& x) {
  auto relu = [](const Eigen::MatrixXd& z) { return z.cwiseMax(0.0).eval(); };
  Eigen::MatrixXd cur = x;
  for (int l = 0; l < spec.n_layers; ++l) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cur.rows(), p.layers[l].lower[0].cols());
    Eigen::MatrixXd d = cur, u = cur;
    for (int k = 0; k <= spec.taps; ++k) {
      acc += d * p.layers[l].lower[k] + u * p.layers[l].upper[k];
      d = sd * d;
      u = su * u;
    }
    cur = relu(acc);
  }
  Eigen::VectorXd pooled = Eigen::Map<Eigen::VectorXd>(cur.data(), cur.size());
  Eigen::VectorXd h = relu(p.readout.w_hidden.transpose() * pooled + p.readout.b_hidden);
  return p.readout.w_out.transpose() * h + p.readout.b_out;
}

Outcome IdealLimit() {
  CellComplex2 c = DeskComplex(0);
  ModelTopology topo = ModelTopology::FromComplex(c, false, false);
  const Eigen::MatrixXd sd = MakeShiftOperator(c, ShiftKind::kLowerAdjacency).matrix;
  const Eigen::MatrixXd su = MakeShiftOperator(c, ShiftKind::kUpperAdjacency).matrix;
  ModelSpec air;
  air.normalize_shifts = false;
  ModelSpec tnn = air;
  tnn.arch = Arch::kTNN;
  Rng data_rng = MakeRng(0, {TagOf("acceptance-ideal")});
  double fwd = 0.0, fwd_dense = 0.0, grad = 0.0;
  for (uint64_t draw = 0; draw < 20; ++draw) {
    ModelParams p = InitParams(air, topo.n_cells, 1000 + draw);
    Eigen::MatrixXd x = Gaussian(topo.n_cells, 1, data_rng, 0.1);
    Rng ra = MakeRng(draw, {}), rt = MakeRng(draw + 99, {});
    ForwardTape ta = Forward(air, p, topo, x, ChannelConfig::Ideal(), ra);
    ForwardTape tt = Forward(tnn, p, topo, x, ChannelConfig::Ideal(), rt);
    fwd = std::max(fwd, MaxRel(ta.logits, tt.logits));
    fwd_dense = std::max(fwd_dense, MaxRel(ta.logits, DenseTnn(air, p, sd, su, x)));
    const int label = static_cast<int>(draw % air.n_classes);
    ModelParams ga = p.ZerosLike(), gt = p.ZerosLike();
    Backward(air, p, ta, CrossEntropyGrad(ta.logits, label), ga);
    Backward(tnn, p, tt, CrossEntropyGrad(tt.logits, label), gt);
    grad = std::max(grad, MaxRel(ga.Flatten(), gt.Flatten()));
  }
  return {fwd <= 1e-12 && fwd_dense <= 1e-12 && grad <= 1e-10,
          "20 weight draws, forward dev " + Fmt(fwd) + " (dense reference " +
              Fmt(fwd_dense) + "), gradient dev " + Fmt(grad)};
}

Outcome RecursionExpansion() {
  CellComplex2 c = DeskComplex(0);
  ModelTopology topo = ModelTopology::FromComplex(c, false, true);
  ChannelConfig ch = ExperimentConfig{}.channel;
  ch.fading_scale = 1.0;
  ch.snr_db = 20.0;
  Rng rng = MakeRng(0, {TagOf("acceptance-expansion")});
  Eigen::MatrixXd x = Gaussian(topo.n_cells, 4, rng);
  double worst = 0.0;
  for (int taps = 1; taps <= 3; ++taps) {
    for (auto [links, nb] : {std::pair{&topo.lower, Neighborhood::kLower},
                             std::pair{&topo.upper, Neighborhood::kUpper}}) {
      ShiftSequence seq = MultiShift(x, *links, taps, ch, rng, nb);
      for (int p = 1; p <= taps; ++p) {
        // G_p ... G_1 x + sum_i G_p ... G_{i+1} n_i.
        Eigen::MatrixXd expect = x;
        for (int r = 0; r < p; ++r) expect = Eigen::MatrixXd(seq.realizations[r].gains) * expect;
        for (int i = 0; i < p; ++i) {
          Eigen::MatrixXd term = seq.realizations[i].noise;
          for (int r = i + 1; r < p; ++r) term = Eigen::MatrixXd(seq.realizations[r].gains) * term;
          expect += term;
        }
        worst = std::max(worst, MaxRel(seq.shifts[p], expect));
      }
    }
  }
  return {worst <= 1e-10, "P = 1, 2, 3 on both neighborhoods, max relative error " + Fmt(worst)};
}

Outcome GradientFidelity() {
  const auto start = Clock::now();
  CellComplex2 c = DeskComplex(0);
  ModelSpec spec;
  spec.taps = 2;
  spec.hidden = {8};
  // Smooth nonlinearity so central differences never straddle a kink.
  spec.nonlinearity = Nonlinearity::kTanh;
  ModelTopology topo = ModelTopology::For(c, spec);
  ModelParams p = InitParams(spec, topo.n_cells, 5);
  Rng rng = MakeRng(0, {TagOf("acceptance-fd")});
  Eigen::MatrixXd x = Gaussian(topo.n_cells, 1, rng, 0.1);
  ChannelConfig ch = ExperimentConfig{}.channel;
  auto r = testing::CheckGradients(spec, p, topo, x, 3, ch, 17);
  const double secs = Seconds(start);
  return {r.max_rel_error <= 1e-4 && secs < 120.0,
          std::to_string(r.n_params) + " parameters, max relative error " +
              Fmt(r.max_rel_error) + ", " + Fmt(secs, 3) + " s"};
}

// Mean and standard deviation over every (seed, realization) accuracy of a
// curve, from the per-seed summaries.
struct Pooled {
  double mean = 0.0;
  double sd = 0.0;
};

Pooled Combine(const std::vector<SweepRow>& rows, int per_seed) {
  double n = 0, sum = 0, sumsq = 0;
  for (const auto& r : rows) {
    const double k = per_seed;
    n += k;
    sum += k * r.accuracy_mean;
    sumsq += (k - 1) * r.accuracy_std * r.accuracy_std + k * r.accuracy_mean * r.accuracy_mean;
  }
  Pooled p;
  p.mean = sum / n;
  p.sd = n > 1 ? std::sqrt(std::max(0.0, (sumsq - n * p.mean * p.mean) / (n - 1))) : 0.0;
  return p;
}

double PooledSd(const Pooled& a, const Pooled& b) {
  return std::sqrt((a.sd * a.sd + b.sd * b.sd) / 2);
}

struct Curves {
  std::vector<SweepRow> rows;
  // Rows of one curve at one sweep value, across seeds.
  std::vector<SweepRow> Get(const std::string& model, const std::string& regime,
                            double value) const {
    std::vector<SweepRow> out;
    for (const auto& r : rows) {
      const bool same = std::isinf(value) ? std::isinf(r.sweep_value) : r.sweep_value == value;
      if (r.model == model && r.regime == regime && same) out.push_back(r);
    }
    return out;
  }
};

ExperimentConfig DeskSweep(const std::string& models, const std::string& grid,
                           const fs::path& out, const std::string& file) {
  ExperimentConfig cfg;
  ApplySetting(cfg, "sweep_axis", "snr");
  ApplySetting(cfg, "delta", "1");
  ApplySetting(cfg, "grid", grid);
  ApplySetting(cfg, "models", models);
  ApplySetting(cfg, "epochs", std::to_string(kEpochs));
  ApplySetting(cfg, "eval_realizations", "20");
  ApplySetting(cfg, "seed", "0,1,2");
  ApplySetting(cfg, "results_file", file);
  cfg.out_dir = out.string();
  return cfg;
}

struct DeskRuns {
  Curves snr;       // AirTNN along SNR
  Curves baseline;  // AirGNN, TNN, GNN at 20 dB
  double seconds = 0.0;
  std::string error;
};

DeskRuns RunDesk(const fs::path& out) {
  DeskRuns d;
  const auto start = Clock::now();
  try {
    d.snr.rows = RunSweep(DeskSweep("airtnn", "0,10,20,40,inf", out / "snr", "fig3.csv")).rows;
    d.baseline.rows =
        RunSweep(DeskSweep("airgnn,tnn,gnn", "20", out / "fig2", "fig2.csv")).rows;
  } catch (const std::exception& e) {
    d.error = e.what();
  }
  d.seconds = Seconds(start);
  return d;
}

Outcome Fig2(const DeskRuns& d) {
  if (!d.error.empty()) return {false, "sweep aborted: " + d.error};
  const Pooled air = Combine(d.snr.Get("AirTNN", "air", 20), 20);
  const Pooled gnn_air = Combine(d.baseline.Get("AirGNN", "air", 20), 20);
  const Pooled tnn = Combine(d.baseline.Get("TNN", "noisy_test", 20), 20);
  const Pooled gnn = Combine(d.baseline.Get("GNN", "noisy_test", 20), 20);
  bool ok = air.mean >= 4.0 / 11.0;
  std::string detail = "AirTNN " + Fmt(air.mean, 3) + "±" + Fmt(air.sd, 2);
  for (auto [name, other] : {std::pair{"AirGNN", gnn_air}, std::pair{"TNN noisy", tnn},
                             std::pair{"GNN noisy", gnn}}) {
    const double gap = air.mean - other.mean, pooled = PooledSd(air, other);
    ok = ok && gap > pooled;
    detail += std::string("; ") + name + " " + Fmt(other.mean, 3) + " (gap " +
              Fmt(gap, 2) + " vs pooled sd " + Fmt(pooled, 2) + ")";
  }
  detail += "; " + Fmt(d.seconds / 60, 3) + " min for all desk sweeps";
  return {ok, detail};
}

Outcome Fig3(const DeskRuns& d) {
  if (!d.error.empty()) return {false, "sweep aborted: " + d.error};
  const std::vector<double> snrs = {0, 10, 20, 40};
  std::vector<Pooled> at;
  for (double s : snrs) at.push_back(Combine(d.snr.Get("AirTNN", "air", s), 20));
  const Pooled fading_only = Combine(d.snr.Get("AirTNN", "air", kInf), 20);
  bool ok = true;
  std::string detail = "AirTNN";
  for (size_t i = 0; i < snrs.size(); ++i) {
    detail += " " + Fmt(snrs[i]) + "dB=" + Fmt(at[i].mean, 3);
    if (i > 0 && at[i].mean < at[i - 1].mean - PooledSd(at[i], at[i - 1])) ok = false;
  }
  const double shortfall = fading_only.mean - at.back().mean;
  ok = ok && shortfall <= 0.05;
  detail += ", fading only " + Fmt(fading_only.mean, 3) + " (40 dB within " +
            Fmt(shortfall, 2) + ")";
  return {ok, detail};
}

Outcome BaselineDegradation(const DeskRuns& d) {
  if (!d.error.empty()) return {false, "sweep aborted: " + d.error};
  bool ok = true;
  std::string detail;
  for (const char* m : {"TNN", "GNN"}) {
    const Pooled ideal = Combine(d.baseline.Get(m, "ideal", 20), 1);
    const Pooled noisy = Combine(d.baseline.Get(m, "noisy_test", 20), 20);
    const double drop = ideal.mean - noisy.mean;
    ok = ok && drop >= 0.15;
    if (!detail.empty()) detail += "; ";
    detail += std::string(m) + " ideal " + Fmt(ideal.mean, 3) + " -> noisy " +
              Fmt(noisy.mean, 3) + " (drop " + Fmt(drop, 3) + ")";
  }
  return {ok, detail};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome Determinism(const fs::path& out) {
  ExperimentConfig cfg;
  ApplySetting(cfg, "n_train", "200");
  ApplySetting(cfg, "n_test", "100");
  ApplySetting(cfg, "epochs", "2");
  ApplySetting(cfg, "grid", "0.5,1.5");
  ApplySetting(cfg, "eval_realizations", "3");
  ApplySetting(cfg, "seed", "5,6");
  cfg.out_dir = (out / "first").string();
  RunSweep(cfg);

  ExperimentConfig replay;
  ApplyConfigFile(replay, (out / "first" / "manifest.txt").string());
  replay.out_dir = (out / "replay").string();
  RunSweep(replay);
  const std::string a = Slurp(out / "first" / "results.csv");
  const std::string b = Slurp(out / "replay" / "results.csv");
  const long rows = std::count(a.begin(), a.end(), '\n') - 1;
  return {!a.empty() && a == b, std::to_string(rows) + " rows, replay " +
                                    (a == b ? "identical" : "differs")};
}

}  // namespace
}  // namespace airtnn

int main() {
  using namespace airtnn;
  const fs::path out = fs::current_path() / "acceptance_out";
  fs::remove_all(out);
  fs::create_directories(out);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << id << " (" << name
              << "): " << o.detail << std::endl;
  };

  report(1, "structural invariants", StructuralInvariants);
  report(2, "ideal-limit equivalence", IdealLimit);
  report(3, "recursion-expansion equivalence", RecursionExpansion);
  report(4, "gradient fidelity", GradientFidelity);
  const DeskRuns desk = RunDesk(out);
  report(5, "accuracy ordering at delta 1, 20 dB", [&] { return Fig2(desk); });
  report(6, "accuracy along SNR", [&] { return Fig3(desk); });
  report(7, "baseline degradation", [&] { return BaselineDegradation(desk); });
  report(8, "sweep determinism", [&] { return Determinism(out / "determinism"); });
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
