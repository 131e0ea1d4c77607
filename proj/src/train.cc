#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "airtnn/error.h"
#include "airtnn/nn.h"
#include "airtnn/text_io.h"

namespace airtnn {

AdamState AdamState::For(const ModelParams& params) {
  AdamState s;
  s.m = params.ZerosLike();
  s.v = params.ZerosLike();
  return s;
}

void AdamStep(ModelParams& params, const ModelParams& grads, AdamState& state,
              const AdamHyper& hyper) {
  ++state.t;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  std::vector<Eigen::MatrixXd*> w, m, v;
  std::vector<const Eigen::MatrixXd*> g;
  params.ForEach([&](const std::string&, Eigen::MatrixXd& x) { w.push_back(&x); });
  state.m.ForEach([&](const std::string&, Eigen::MatrixXd& x) { m.push_back(&x); });
  state.v.ForEach([&](const std::string&, Eigen::MatrixXd& x) { v.push_back(&x); });
  grads.ForEach([&](const std::string&, const Eigen::MatrixXd& x) { g.push_back(&x); });
  if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
    throw ContractError("ADAM: parameter structure mismatch");
  }
  for (size_t k = 0; k < w.size(); ++k) {
    if (g[k]->rows() != w[k]->rows() || g[k]->cols() != w[k]->cols()) {
      throw ContractError("ADAM: gradient shape mismatch");
    }
    m[k]->array() = hyper.beta1 * m[k]->array() + (1.0 - hyper.beta1) * g[k]->array();
    v[k]->array() = hyper.beta2 * v[k]->array() +
                    (1.0 - hyper.beta2) * g[k]->array().square();
    w[k]->array() -= hyper.step_size * (m[k]->array() / c1) /
                     ((v[k]->array() / c2).sqrt() + hyper.epsilon);
  }
}

void TrainConfig::Validate() const {
  if (!(adam.step_size > 0.0)) throw ConfigError("step size must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  channel.Validate();
}

namespace {

Eigen::MatrixXd AsInput(const SourceLocSample& s) {
  return Eigen::Map<const Eigen::MatrixXd>(s.x.data(), s.x.size(), 1);
}

}  // namespace

double MeanLoss(const ModelSpec& spec, const ModelParams& params,
                const ModelTopology& topo, std::span<const SourceLocSample> data,
                const ChannelConfig& channel, uint64_t seed) {
  double total = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    Rng rng = MakeRng(seed, {TagOf("loss"), i});
    ForwardTape tape = Forward(spec, params, topo, AsInput(data[i]), channel, rng);
    total += CrossEntropy(tape.logits, data[i].label);
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

TrainResult Train(const ModelSpec& spec, const ModelTopology& topo,
                  std::span<const SourceLocSample> train,
                  std::span<const SourceLocSample> val, const TrainConfig& cfg) {
  spec.Validate();
  cfg.Validate();
  if (train.empty()) throw PreconditionError("training set is empty");
  const ChannelConfig channel = IsAir(spec.arch) ? cfg.channel : ChannelConfig::Ideal();

  TrainResult result;
  result.params = InitParams(spec, topo.n_cells, cfg.seed);
  AdamState state = AdamState::For(result.params);
  ModelParams grads = result.params.ZerosLike();

  Rng shuffle_rng = MakeRng(cfg.seed, {TagOf("shuffle")});
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    size_t correct = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      grads.ForEach([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
      for (size_t k = start; k < end; ++k) {
        const size_t idx = order[k];
        Rng rng = MakeRng(cfg.seed, {TagOf("train-channel"),
                                     static_cast<uint64_t>(epoch), idx});
        ForwardTape tape =
            Forward(spec, result.params, topo, AsInput(train[idx]), channel, rng);
        const double loss = CrossEntropy(tape.logits, train[idx].label);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", step "
              << start / cfg.batch_size << ", sample " << idx;
          throw TrainingDiverged(msg.str());
        }
        loss_sum += loss;
        if (Predict(tape.logits) == train[idx].label) ++correct;
        Eigen::VectorXd dlogits =
            CrossEntropyGrad(tape.logits, train[idx].label) * scale;
        Backward(spec, result.params, tape, dlogits, grads);
      }
      AdamStep(result.params, grads, state, cfg.adam);
    }
    const double n = static_cast<double>(train.size());
    result.history.push_back({epoch, "train", loss_sum / n, correct / n});

    if (!val.empty()) {
      double vloss = 0.0;
      size_t vcorrect = 0;
      for (size_t i = 0; i < val.size(); ++i) {
        Rng rng = MakeRng(cfg.seed, {TagOf("val-channel"),
                                     static_cast<uint64_t>(epoch), i});
        ForwardTape tape =
            Forward(spec, result.params, topo, AsInput(val[i]), channel, rng);
        vloss += CrossEntropy(tape.logits, val[i].label);
        if (Predict(tape.logits) == val[i].label) ++vcorrect;
      }
      const double nv = static_cast<double>(val.size());
      result.history.push_back({epoch, "val", vloss / nv, vcorrect / nv});
    }
  }
  return result;
}

EvalResult Evaluate(const ModelSpec& spec, const ModelParams& params,
                    const ModelTopology& topo,
                    std::span<const SourceLocSample> data,
                    const ChannelConfig& channel, int n_realizations,
                    uint64_t seed) {
  if (data.empty()) throw PreconditionError("evaluation set is empty");
  if (n_realizations < 1) throw ConfigError("need at least one realization");
  const int draws = channel.ideal ? 1 : n_realizations;
  EvalResult result;
  for (int r = 0; r < draws; ++r) {
    size_t correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
      Rng rng = MakeRng(seed, {TagOf("eval"), static_cast<uint64_t>(r), i});
      ForwardTape tape = Forward(spec, params, topo, AsInput(data[i]), channel, rng);
      if (Predict(tape.logits) == data[i].label) ++correct;
    }
    result.per_realization.push_back(static_cast<double>(correct) /
                                     static_cast<double>(data.size()));
  }
  const auto& acc = result.per_realization;
  result.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / acc.size();
  if (acc.size() > 1) {
    double ss = 0.0;
    for (double a : acc) ss += (a - result.mean) * (a - result.mean);
    result.stddev = std::sqrt(ss / static_cast<double>(acc.size() - 1));
  }
  return result;
}

void WriteCheckpoint(std::ostream& out, const ModelSpec& spec, int n_cells,
                     const ModelParams& params) {
  out << "airtnn-checkpoint 1\n";
  out << "arch " << ArchName(spec.arch) << '\n';
  out << "n_layers " << spec.n_layers << '\n';
  out << "taps " << spec.taps << '\n';
  out << "in_features " << spec.in_features << '\n';
  out << "hidden";
  for (int h : spec.hidden) out << ' ' << h;
  out << '\n';
  out << "pooling " << PoolingName(spec.pooling) << '\n';
  out << "readout_hidden " << spec.readout_hidden << '\n';
  out << "n_classes " << spec.n_classes << '\n';
  out << "nonlinearity " << NonlinearityName(spec.nonlinearity) << '\n';
  out << "laplacian_shifts " << (spec.laplacian_shifts ? 1 : 0) << '\n';
  out << "normalize_shifts " << (spec.normalize_shifts ? 1 : 0) << '\n';
  out << "n_cells " << n_cells << '\n';
  params.ForEach([&](const std::string& name, const Eigen::MatrixXd& m) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      if (k) out << ' ';
      out << FormatDouble(m.data()[k]);
    }
    out << '\n';
  });
  out << "end-checkpoint\n";
}

void SaveCheckpoint(const std::string& path, const ModelSpec& spec, int n_cells,
                    const ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteCheckpoint(out, spec, n_cells, params);
}

Checkpoint ReadCheckpoint(std::istream& in) {
  LineReader reader(in);
  auto header = reader.Expect("airtnn-checkpoint");
  if (header.size() != 2) throw ParseError("bad checkpoint header", reader.line());
  if (header[1] != "1") {
    throw UnsupportedVersionError(
        "unsupported checkpoint version " + std::string(header[1]), reader.line());
  }
  auto single = [&](std::string_view key) {
    auto t = reader.Expect(key);
    if (t.size() != 2) {
      throw ParseError("'" + std::string(key) + "' takes one value", reader.line());
    }
    return std::string(t[1]);
  };
  Checkpoint ck;
  try {
    ck.spec.arch = ParseArch(single("arch"));
    ck.spec.n_layers = static_cast<int>(ParseInt(single("n_layers"), reader.line()));
    ck.spec.taps = static_cast<int>(ParseInt(single("taps"), reader.line()));
    ck.spec.in_features =
        static_cast<int>(ParseInt(single("in_features"), reader.line()));
    auto hidden = reader.Expect("hidden");
    ck.spec.hidden.clear();
    for (size_t k = 1; k < hidden.size(); ++k) {
      ck.spec.hidden.push_back(static_cast<int>(ParseInt(hidden[k], reader.line())));
    }
    ck.spec.pooling = ParsePooling(single("pooling"));
    ck.spec.readout_hidden =
        static_cast<int>(ParseInt(single("readout_hidden"), reader.line()));
    ck.spec.n_classes = static_cast<int>(ParseInt(single("n_classes"), reader.line()));
    ck.spec.nonlinearity = ParseNonlinearity(single("nonlinearity"));
    ck.spec.laplacian_shifts = ParseInt(single("laplacian_shifts"), reader.line()) != 0;
    ck.spec.normalize_shifts = ParseInt(single("normalize_shifts"), reader.line()) != 0;
    ck.n_cells = static_cast<int>(ParseInt(single("n_cells"), reader.line()));
    ck.spec.Validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), reader.line());
  }
  ck.params = InitParams(ck.spec, ck.n_cells, 0);
  ck.params.ForEach([&](const std::string& name, Eigen::MatrixXd& m) {
    auto t = reader.Expect("tensor");
    if (t.size() != 4 || t[1] != name) {
      throw ParseError("expected tensor '" + name + "'", reader.line());
    }
    if (ParseInt(t[2], reader.line()) != m.rows() ||
        ParseInt(t[3], reader.line()) != m.cols()) {
      throw ParseError("tensor '" + name + "' has the wrong shape", reader.line());
    }
    auto values = SplitWhitespace(reader.Next());
    if (static_cast<Eigen::Index>(values.size()) != m.size()) {
      throw ParseError("tensor '" + name + "' has the wrong number of values",
                       reader.line());
    }
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      m.data()[k] = ParseDouble(values[k], reader.line());
    }
  });
  reader.Expect("end-checkpoint");
  return ck;
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return ReadCheckpoint(in);
}

void WriteHistoryCsv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,split,loss,accuracy\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.split << ',' << FormatDouble(r.loss) << ','
        << FormatDouble(r.accuracy) << '\n';
  }
}

}  // namespace airtnn
