#include <algorithm>
#include <cctype>
#include <cmath>

#include "airtnn/error.h"
#include "airtnn/nn.h"

namespace airtnn {

namespace {

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

const char* ArchName(Arch arch) {
  switch (arch) {
    case Arch::kAirTNN: return "AirTNN";
    case Arch::kAirGNN: return "AirGNN";
    case Arch::kTNN: return "TNN";
    case Arch::kGNN: return "GNN";
  }
  return "?";
}

Arch ParseArch(const std::string& name) {
  const std::string n = Lower(name);
  for (Arch a : {Arch::kAirTNN, Arch::kAirGNN, Arch::kTNN, Arch::kGNN}) {
    if (n == Lower(ArchName(a))) return a;
  }
  throw ConfigError("unknown architecture '" + name + "'");
}

const char* NonlinearityName(Nonlinearity g) {
  return g == Nonlinearity::kReLU ? "relu" : "tanh";
}

Nonlinearity ParseNonlinearity(const std::string& name) {
  const std::string n = Lower(name);
  if (n == "relu") return Nonlinearity::kReLU;
  if (n == "tanh") return Nonlinearity::kTanh;
  throw ConfigError("unknown nonlinearity '" + name + "'");
}

const char* PoolingName(Pooling p) {
  return p == Pooling::kMean ? "mean" : "flatten";
}

Pooling ParsePooling(const std::string& name) {
  const std::string n = Lower(name);
  if (n == "mean") return Pooling::kMean;
  if (n == "flatten") return Pooling::kFlatten;
  throw ConfigError("unknown pooling '" + name + "'");
}

int ModelSpec::LayerIn(int layer) const {
  return layer == 0 ? in_features : LayerOut(layer - 1);
}

int ModelSpec::LayerOut(int layer) const {
  return hidden.size() == 1 ? hidden[0] : hidden.at(layer);
}

void ModelSpec::Validate() const {
  if (n_layers < 1) throw ConfigError("need at least one layer");
  if (taps < 0) throw ConfigError("taps must be non-negative");
  if (in_features < 1) throw ConfigError("in_features must be positive");
  if (hidden.empty() ||
      (hidden.size() != 1 && static_cast<int>(hidden.size()) != n_layers)) {
    throw ConfigError("hidden widths: give one value or one per layer");
  }
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden widths must be positive");
  }
  if (readout_hidden < 1) throw ConfigError("readout width must be positive");
  if (n_classes < 2) throw ConfigError("need at least two classes");
}

ModelTopology ModelTopology::FromComplex(const CellComplex2& complex,
                                         bool laplacian_shifts,
                                         bool normalize_shifts) {
  auto build = [&](ShiftKind kind) {
    ShiftOperator op = MakeShiftOperator(complex, kind);
    if (normalize_shifts) {
      const double lambda = SpectralNorm(op);
      if (lambda > 0.0) op.matrix /= lambda;
    }
    return LinkPattern(op);
  };
  ModelTopology t;
  t.n_cells = complex.n1();
  t.lower = build(laplacian_shifts ? ShiftKind::kLowerLaplacian
                                   : ShiftKind::kLowerAdjacency);
  t.upper = build(laplacian_shifts ? ShiftKind::kUpperLaplacian
                                   : ShiftKind::kUpperAdjacency);
  return t;
}

void ModelParams::ForEach(
    const std::function<void(const std::string&, Eigen::MatrixXd&)>& f) {
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    for (size_t p = 0; p < layers[l].lower.size(); ++p) {
      f(prefix + ".lower" + std::to_string(p), layers[l].lower[p]);
    }
    for (size_t p = 0; p < layers[l].upper.size(); ++p) {
      f(prefix + ".upper" + std::to_string(p), layers[l].upper[p]);
    }
  }
  f("readout.w_hidden", readout.w_hidden);
  f("readout.b_hidden", readout.b_hidden);
  f("readout.w_out", readout.w_out);
  f("readout.b_out", readout.b_out);
}

void ModelParams::ForEach(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& f)
    const {
  const_cast<ModelParams*>(this)->ForEach(
      [&](const std::string& name, Eigen::MatrixXd& m) { f(name, m); });
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams z = *this;
  z.ForEach([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
  return z;
}

int64_t ModelParams::Count() const {
  int64_t n = 0;
  ForEach([&](const std::string&, const Eigen::MatrixXd& m) { n += m.size(); });
  return n;
}

std::vector<double> ModelParams::Flatten() const {
  std::vector<double> out;
  out.reserve(Count());
  ForEach([&](const std::string&, const Eigen::MatrixXd& m) {
    out.insert(out.end(), m.data(), m.data() + m.size());
  });
  return out;
}

void ModelParams::Unflatten(std::span<const double> values) {
  if (static_cast<int64_t>(values.size()) != Count()) {
    throw ContractError("parameter vector has the wrong length");
  }
  size_t at = 0;
  ForEach([&](const std::string&, Eigen::MatrixXd& m) {
    std::copy_n(values.begin() + at, m.size(), m.data());
    at += m.size();
  });
}

ModelParams InitParams(const ModelSpec& spec, int n_cells, uint64_t seed) {
  spec.Validate();
  Rng rng = MakeRng(seed, {TagOf("init")});
  auto glorot = [&rng](int rows, int cols, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      m.data()[k] = limit * (2.0 * UniformOpen(rng) - 1.0);
    }
    return m;
  };
  ModelParams params;
  const int branches = UsesUpper(spec.arch) ? 2 : 1;
  for (int l = 0; l < spec.n_layers; ++l) {
    const int fin = spec.LayerIn(l);
    const int fout = spec.LayerOut(l);
    // Every tap of every branch feeds the same output, so the fan-in counts
    // all of them.
    const double fan_in = static_cast<double>(fin) * (spec.taps + 1) * branches;
    LayerParams layer;
    for (int p = 0; p <= spec.taps; ++p) {
      layer.lower.push_back(glorot(fin, fout, fan_in, fout));
    }
    if (UsesUpper(spec.arch)) {
      for (int p = 0; p <= spec.taps; ++p) {
        layer.upper.push_back(glorot(fin, fout, fan_in, fout));
      }
    }
    params.layers.push_back(std::move(layer));
  }
  const int last = spec.LayerOut(spec.n_layers - 1);
  const int pooled = spec.pooling == Pooling::kMean ? last : last * n_cells;
  params.readout.w_hidden =
      glorot(pooled, spec.readout_hidden, pooled, spec.readout_hidden);
  params.readout.b_hidden = Eigen::MatrixXd::Zero(spec.readout_hidden, 1);
  params.readout.w_out =
      glorot(spec.readout_hidden, spec.n_classes, spec.readout_hidden, spec.n_classes);
  params.readout.b_out = Eigen::MatrixXd::Zero(spec.n_classes, 1);
  return params;
}

Eigen::MatrixXd AirtfApply(const ShiftSequence& lower, const ShiftSequence* upper,
                           const LayerParams& params) {
  if (lower.shifts.size() != params.lower.size()) {
    throw ContractError("lower shift sequence length does not match taps");
  }
  if (upper != nullptr && upper->shifts.size() != params.upper.size()) {
    throw ContractError("upper shift sequence length does not match taps");
  }
  if (upper == nullptr && !params.upper.empty()) {
    throw ContractError("upper taps given without an upper shift sequence");
  }
  const Eigen::MatrixXd& x = lower.shifts.front();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), params.lower.front().cols());
  for (size_t p = 0; p < params.lower.size(); ++p) {
    if (lower.shifts[p].cols() != params.lower[p].rows()) {
      throw ContractError("tap input width does not match signal features");
    }
    y.noalias() += lower.shifts[p] * params.lower[p];
  }
  if (upper != nullptr) {
    for (size_t p = 0; p < params.upper.size(); ++p) {
      if (upper->shifts[p].cols() != params.upper[p].rows()) {
        throw ContractError("tap input width does not match signal features");
      }
      y.noalias() += upper->shifts[p] * params.upper[p];
    }
  }
  return y;
}

double Activate(Nonlinearity g, double z) {
  return g == Nonlinearity::kReLU ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double ActivateDerivative(Nonlinearity g, double z) {
  if (g == Nonlinearity::kReLU) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

namespace {

template <typename Derived>
Eigen::MatrixXd ApplyActivation(Nonlinearity g, const Eigen::MatrixBase<Derived>& z) {
  return z.unaryExpr([g](double v) { return Activate(g, v); });
}

template <typename Derived>
Eigen::MatrixXd ActivationDerivative(Nonlinearity g,
                                     const Eigen::MatrixBase<Derived>& z) {
  return z.unaryExpr([g](double v) { return ActivateDerivative(g, v); });
}

LayerTape FinishLayer(LayerTape tape, const ModelSpec& spec,
                      const LayerParams& params) {
  tape.pre = AirtfApply(tape.lower, UsesUpper(spec.arch) ? &tape.upper : nullptr,
                        params);
  tape.out = ApplyActivation(spec.nonlinearity, tape.pre);
  return tape;
}

Eigen::VectorXd Pool(const Eigen::MatrixXd& features, Pooling pooling) {
  if (pooling == Pooling::kMean) return features.colwise().mean().transpose();
  return Eigen::Map<const Eigen::VectorXd>(features.data(), features.size());
}

}  // namespace

LayerTape LayerForward(const Eigen::MatrixXd& x, const ModelSpec& spec,
                       const LayerParams& params, const ModelTopology& topo,
                       const ChannelConfig& channel, Rng& rng) {
  LayerTape tape;
  tape.lower = MultiShift(x, topo.lower, spec.taps, channel, rng, Neighborhood::kLower);
  if (UsesUpper(spec.arch)) {
    tape.upper =
        MultiShift(x, topo.upper, spec.taps, channel, rng, Neighborhood::kUpper);
  }
  return FinishLayer(std::move(tape), spec, params);
}

Eigen::VectorXd ReadoutForward(const Eigen::MatrixXd& features,
                               const ReadoutParams& params, Pooling pooling,
                               Nonlinearity g) {
  Eigen::VectorXd pooled = Pool(features, pooling);
  if (pooled.size() != params.w_hidden.rows()) {
    throw ContractError("pooled feature size does not match readout");
  }
  Eigen::VectorXd hidden = ApplyActivation(
      g, params.w_hidden.transpose() * pooled + params.b_hidden.col(0));
  return params.w_out.transpose() * hidden + params.b_out.col(0);
}

ChannelDraws ForwardTape::Draws() const {
  ChannelDraws draws;
  for (const LayerTape& l : layers) {
    draws.push_back({l.lower.realizations, l.upper.realizations});
  }
  return draws;
}

ForwardTape Forward(const ModelSpec& spec, const ModelParams& params,
                    const ModelTopology& topo, const Eigen::MatrixXd& x,
                    const ChannelConfig& channel, Rng& rng,
                    const ChannelDraws* replay) {
  if (x.rows() != topo.n_cells || x.cols() != spec.in_features) {
    throw ContractError("input signal has the wrong shape");
  }
  if (static_cast<int>(params.layers.size()) != spec.n_layers) {
    throw ContractError("parameter layers do not match the model spec");
  }
  ForwardTape tape;
  tape.input = x;
  const Eigen::MatrixXd* cur = &tape.input;
  tape.layers.reserve(spec.n_layers);
  for (int l = 0; l < spec.n_layers; ++l) {
    if (replay != nullptr) {
      LayerTape lt;
      lt.lower = ReplayShift(*cur, replay->at(l).lower, Neighborhood::kLower);
      if (UsesUpper(spec.arch)) {
        lt.upper = ReplayShift(*cur, replay->at(l).upper, Neighborhood::kUpper);
      }
      tape.layers.push_back(FinishLayer(std::move(lt), spec, params.layers[l]));
    } else {
      tape.layers.push_back(
          LayerForward(*cur, spec, params.layers[l], topo, channel, rng));
    }
    cur = &tape.layers.back().out;
  }
  const ReadoutParams& r = params.readout;
  tape.pooled = Pool(*cur, spec.pooling);
  if (tape.pooled.size() != r.w_hidden.rows()) {
    throw ContractError("pooled feature size does not match readout");
  }
  tape.hidden_pre = r.w_hidden.transpose() * tape.pooled + r.b_hidden.col(0);
  tape.hidden = ApplyActivation(spec.nonlinearity, tape.hidden_pre);
  tape.logits = r.w_out.transpose() * tape.hidden + r.b_out.col(0);
  return tape;
}

double CrossEntropy(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size()) throw ContractError("label out of range");
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(label);
}

Eigen::VectorXd CrossEntropyGrad(const Eigen::VectorXd& logits, int label) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  p(label) -= 1.0;
  return p;
}

int Predict(const Eigen::VectorXd& logits) {
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<int>(best);
}

namespace {

// Back through x^(p) = G_p x^(p-1) + n_p and y += x^(p) W_p.
void BranchBackward(const ShiftSequence& seq, const std::vector<Eigen::MatrixXd>& w,
                    const Eigen::MatrixXd& dpre, std::vector<Eigen::MatrixXd>& dw,
                    Eigen::MatrixXd& dx) {
  const int taps = seq.taps();
  Eigen::MatrixXd carry;
  for (int p = taps; p >= 0; --p) {
    dw[p].noalias() += seq.shifts[p].transpose() * dpre;
    Eigen::MatrixXd dshift = dpre * w[p].transpose();
    if (p < taps) dshift.noalias() += seq.realizations[p].gains.transpose() * carry;
    carry = std::move(dshift);
  }
  dx += carry;
}

}  // namespace

void Backward(const ModelSpec& spec, const ModelParams& params,
              const ForwardTape& tape, const Eigen::VectorXd& dlogits,
              ModelParams& grads, Eigen::MatrixXd* dinput) {
  const ReadoutParams& r = params.readout;
  ReadoutParams& gr = grads.readout;
  gr.w_out.noalias() += tape.hidden * dlogits.transpose();
  gr.b_out.col(0) += dlogits;
  Eigen::VectorXd dhidden_pre =
      (r.w_out * dlogits).cwiseProduct(
          ActivationDerivative(spec.nonlinearity, tape.hidden_pre));
  gr.w_hidden.noalias() += tape.pooled * dhidden_pre.transpose();
  gr.b_hidden.col(0) += dhidden_pre;
  Eigen::VectorXd dpooled = r.w_hidden * dhidden_pre;

  const Eigen::MatrixXd& last = tape.layers.back().out;
  Eigen::MatrixXd dfeat(last.rows(), last.cols());
  if (spec.pooling == Pooling::kMean) {
    dfeat.rowwise() = dpooled.transpose() / static_cast<double>(last.rows());
  } else {
    dfeat = Eigen::Map<const Eigen::MatrixXd>(dpooled.data(), last.rows(), last.cols());
  }

  for (int l = spec.n_layers - 1; l >= 0; --l) {
    const LayerTape& lt = tape.layers[l];
    Eigen::MatrixXd dpre =
        dfeat.cwiseProduct(ActivationDerivative(spec.nonlinearity, lt.pre));
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(lt.lower.shifts[0].rows(),
                                               lt.lower.shifts[0].cols());
    BranchBackward(lt.lower, params.layers[l].lower, dpre, grads.layers[l].lower, dx);
    if (UsesUpper(spec.arch)) {
      BranchBackward(lt.upper, params.layers[l].upper, dpre, grads.layers[l].upper,
                     dx);
    }
    dfeat = std::move(dx);
  }
  if (dinput != nullptr) *dinput = std::move(dfeat);
}

}  // namespace airtnn
