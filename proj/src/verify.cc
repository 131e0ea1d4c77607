#include <cmath>
#include <sstream>

#include "airtnn/error.h"
#include "airtnn/harness.h"

namespace airtnn {

namespace {

CheckReport Report(const std::string& name, bool ok, const std::string& detail) {
  return {name, ok, detail};
}

CellComplex2 SmallComplex(uint64_t seed) {
  Rng rng = MakeRng(seed, {TagOf("verify-graph")});
  return LiftToComplex(SbmGenerate(16, 4, 0.8, 0.08, rng));
}

double MaxRel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

CheckReport CheckComplexes(uint64_t seed) {
  for (uint64_t k = 0; k < 10; ++k) {
    Rng rng = MakeRng(seed, {TagOf("verify-sbm"), k});
    CellComplex2 c = LiftToComplex(SbmGenerate(70, 10, 0.9, 0.01, rng));
    if ((c.b1() * c.b2()).cwiseAbs().maxCoeff() != 0) {
      return Report("complex_invariants", false, "B1*B2 != 0");
    }
    if (c.n2() != c.n1() - c.n0() + 1) {
      return Report("complex_invariants", false, "polygon count != E - V + 1");
    }
  }
  return Report("complex_invariants", true, "10 SBM complexes");
}

// Ideal air filters against dense matrix powers of the adjacencies.
CheckReport CheckIdealLimit(uint64_t seed) {
  CellComplex2 c = SmallComplex(seed);
  ModelTopology topo = ModelTopology::FromComplex(c);
  ModelSpec spec;
  spec.arch = Arch::kAirTNN;
  spec.hidden = {4};
  spec.readout_hidden = 5;
  spec.n_classes = 3;
  ModelParams params = InitParams(spec, topo.n_cells, seed);
  Rng rng = MakeRng(seed, {TagOf("verify-x")});
  Eigen::MatrixXd x(topo.n_cells, 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = Gaussian(rng, 0.0, 1.0);
  ForwardTape tape = Forward(spec, params, topo, x, ChannelConfig::Ideal(), rng);

  const Eigen::MatrixXd ad = MakeShiftOperator(c, ShiftKind::kLowerAdjacency).matrix;
  const Eigen::MatrixXd au = MakeShiftOperator(c, ShiftKind::kUpperAdjacency).matrix;
  Eigen::MatrixXd h = x;
  for (int l = 0; l < spec.n_layers; ++l) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(h.rows(), spec.LayerOut(l));
    Eigen::MatrixXd pd = Eigen::MatrixXd::Identity(h.rows(), h.rows());
    Eigen::MatrixXd pu = pd;
    for (int p = 0; p <= spec.taps; ++p) {
      z += pd * h * params.layers[l].lower[p] + pu * h * params.layers[l].upper[p];
      pd = pd * ad;
      pu = pu * au;
    }
    h = z.cwiseMax(0.0);
  }
  const double err = MaxRel(tape.layers.back().out, h);
  std::ostringstream d;
  d << "max relative deviation " << err;
  return Report("ideal_limit", err <= 1e-12, d.str());
}

CheckReport CheckRecursion(uint64_t seed) {
  CellComplex2 c = SmallComplex(seed);
  LinkPattern links(MakeShiftOperator(c, ShiftKind::kLowerAdjacency));
  ChannelConfig ch;
  ch.fading_scale = 1.0;
  ch.snr_db = 10.0;
  Rng rng = MakeRng(seed, {TagOf("verify-shift")});
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(c.n1(), 2);
  double worst = 0.0;
  for (int taps = 1; taps <= 3; ++taps) {
    ShiftSequence seq = MultiShift(x, links, taps, ch, rng);
    // prod_{rho=1..p} G_rho x + sum_{i=1..p-1} prod_{rho=i+1..p} G_rho n_i + n_p
    const int p = taps;
    auto product = [&](int from, int to) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Identity(c.n1(), c.n1());
      for (int rho = from; rho <= to; ++rho) {
        m = Eigen::MatrixXd(seq.realizations[rho - 1].gains) * m;
      }
      return m;
    };
    Eigen::MatrixXd closed = product(1, p) * x + seq.realizations[p - 1].noise;
    for (int i = 1; i <= p - 1; ++i) {
      closed += product(i + 1, p) * seq.realizations[i - 1].noise;
    }
    worst = std::max(worst, MaxRel(seq.shifts[p], closed));
  }
  std::ostringstream d;
  d << "max relative deviation " << worst;
  return Report("recursion_expansion", worst <= 1e-10, d.str());
}

CheckReport CheckGradients(uint64_t seed) {
  CellComplex2 c = SmallComplex(seed);
  ModelTopology topo = ModelTopology::FromComplex(c);
  ModelSpec spec;
  spec.arch = Arch::kAirTNN;
  spec.hidden = {3};
  spec.readout_hidden = 4;
  spec.n_classes = 3;
  spec.nonlinearity = Nonlinearity::kTanh;
  ModelParams params = InitParams(spec, topo.n_cells, seed);
  Rng rng = MakeRng(seed, {TagOf("verify-grad")});
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(topo.n_cells, 1) * 0.1;
  ChannelConfig ch;
  ch.snr_db = 20.0;
  ForwardTape tape = Forward(spec, params, topo, x, ch, rng);
  const ChannelDraws draws = tape.Draws();
  const int label = 1;
  ModelParams grads = params.ZerosLike();
  Backward(spec, params, tape, CrossEntropyGrad(tape.logits, label), grads);

  std::vector<double> w = params.Flatten();
  const std::vector<double> g = grads.Flatten();
  const double h = 1e-5;
  double worst = 0.0;
  ModelParams probe = params;
  for (size_t k = 0; k < w.size(); ++k) {
    const double orig = w[k];
    w[k] = orig + h;
    probe.Unflatten(w);
    const double lp = CrossEntropy(Forward(spec, probe, topo, x, ch, rng, &draws).logits, label);
    w[k] = orig - h;
    probe.Unflatten(w);
    const double lm = CrossEntropy(Forward(spec, probe, topo, x, ch, rng, &draws).logits, label);
    w[k] = orig;
    const double fd = (lp - lm) / (2 * h);
    const double rel = std::abs(fd - g[k]) / std::max(1e-6, std::abs(fd) + std::abs(g[k]));
    worst = std::max(worst, rel);
  }
  std::ostringstream d;
  d << w.size() << " parameters, max relative error " << worst;
  return Report("gradient_fd", worst <= 1e-4, d.str());
}

}  // namespace

std::vector<CheckReport> RunVerify(uint64_t seed) {
  std::vector<CheckReport> out;
  for (auto check : {CheckComplexes, CheckIdealLimit, CheckRecursion, CheckGradients}) {
    try {
      out.push_back(check(seed));
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace airtnn
