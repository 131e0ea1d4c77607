#ifndef AIRTNN_NN_H_
#define AIRTNN_NN_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airtnn/channel.h"
#include "airtnn/sample.h"
#include "airtnn/topology.h"

namespace airtnn {

enum class Arch { kAirTNN, kAirGNN, kTNN, kGNN };
enum class Nonlinearity { kReLU, kTanh };
enum class Pooling { kMean, kFlatten };

const char* ArchName(Arch arch);
Arch ParseArch(const std::string& name);  // case-insensitive
inline bool UsesUpper(Arch a) { return a == Arch::kAirTNN || a == Arch::kTNN; }
inline bool IsAir(Arch a) { return a == Arch::kAirTNN || a == Arch::kAirGNN; }

const char* NonlinearityName(Nonlinearity g);
Nonlinearity ParseNonlinearity(const std::string& name);
const char* PoolingName(Pooling p);
Pooling ParsePooling(const std::string& name);

struct ModelSpec {
  Arch arch = Arch::kAirTNN;
  int n_layers = 2;
  int taps = 2;
  int in_features = 1;
  // Output width of each filter layer; a single entry applies to all layers.
  std::vector<int> hidden = {32};
  // Flattening keeps cell identity, which source localization needs.
  Pooling pooling = Pooling::kFlatten;
  int readout_hidden = 64;
  int n_classes = 11;
  Nonlinearity nonlinearity = Nonlinearity::kReLU;
  // Use B1'B1 / B2B2' instead of binary adjacencies as shift operators.
  bool laplacian_shifts = false;
  // Divide each shift operator by its spectral norm before use.
  bool normalize_shifts = true;

  int LayerIn(int layer) const;
  int LayerOut(int layer) const;
  void Validate() const;
};

// Wireless links of both neighborhoods of a complex, as seen by a model.
struct ModelTopology {
  int n_cells = 0;
  LinkPattern lower;
  LinkPattern upper;

  static ModelTopology FromComplex(const CellComplex2& complex,
                                   bool laplacian_shifts = false,
                                   bool normalize_shifts = false);
  static ModelTopology For(const CellComplex2& complex, const ModelSpec& spec) {
    return FromComplex(complex, spec.laplacian_shifts, spec.normalize_shifts);
  }
};

// Filter taps of one layer: lower[p] and upper[p] are F_in x F_out.
// upper is empty for graph architectures.
struct LayerParams {
  std::vector<Eigen::MatrixXd> lower;
  std::vector<Eigen::MatrixXd> upper;
};

// Pooled features -> hidden (with nonlinearity) -> logits. Biases are
// single-column matrices so that every tensor has the same type.
struct ReadoutParams {
  Eigen::MatrixXd w_hidden;  // D x H
  Eigen::MatrixXd b_hidden;  // H x 1
  Eigen::MatrixXd w_out;     // H x K
  Eigen::MatrixXd b_out;     // K x 1
};

struct ModelParams {
  std::vector<LayerParams> layers;
  ReadoutParams readout;

  // Visits every tensor in declared order: layer by layer (lower taps, then
  // upper taps), then the readout.
  void ForEach(const std::function<void(const std::string&, Eigen::MatrixXd&)>& f);
  void ForEach(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& f) const;

  ModelParams ZerosLike() const;
  int64_t Count() const;
  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> values);
};

// Glorot-uniform initialization from a seeded stream.
ModelParams InitParams(const ModelSpec& spec, int n_cells, uint64_t seed);

// Sum over taps of shifts[p] * W[p] for both neighborhoods. `upper` may be
// null for graph architectures.
Eigen::MatrixXd AirtfApply(const ShiftSequence& lower, const ShiftSequence* upper,
                           const LayerParams& params);

double Activate(Nonlinearity g, double z);
double ActivateDerivative(Nonlinearity g, double z);

// Recorded channel draws of one forward pass, indexed by layer.
struct LayerDraws {
  std::vector<AirShiftRealization> lower;
  std::vector<AirShiftRealization> upper;
};
using ChannelDraws = std::vector<LayerDraws>;

struct LayerTape {
  ShiftSequence lower;
  ShiftSequence upper;
  Eigen::MatrixXd pre;  // before the nonlinearity
  Eigen::MatrixXd out;
};

struct ForwardTape {
  Eigen::MatrixXd input;
  std::vector<LayerTape> layers;
  Eigen::VectorXd pooled;
  Eigen::VectorXd hidden_pre;
  Eigen::VectorXd hidden;
  Eigen::VectorXd logits;

  ChannelDraws Draws() const;
};

// One filter layer: builds both shift sequences (the upper one only for
// topological architectures), applies the filter bank and the nonlinearity.
// Graph architectures never touch the upper links.
LayerTape LayerForward(const Eigen::MatrixXd& x, const ModelSpec& spec,
                       const LayerParams& params, const ModelTopology& topo,
                       const ChannelConfig& channel, Rng& rng);

Eigen::VectorXd ReadoutForward(const Eigen::MatrixXd& features,
                               const ReadoutParams& params, Pooling pooling,
                               Nonlinearity g);

// Full forward pass. With `replay`, the recorded realizations are reused and
// `channel`/`rng` are ignored.
ForwardTape Forward(const ModelSpec& spec, const ModelParams& params,
                    const ModelTopology& topo, const Eigen::MatrixXd& x,
                    const ChannelConfig& channel, Rng& rng,
                    const ChannelDraws* replay = nullptr);

// Softmax cross-entropy with max subtraction.
double CrossEntropy(const Eigen::VectorXd& logits, int label);
// d loss / d logits = softmax(logits) - onehot(label).
Eigen::VectorXd CrossEntropyGrad(const Eigen::VectorXd& logits, int label);

// Reverse pass for one sample. Channel gains and noise are constants.
// Gradients are accumulated into `grads` (which must be shaped like params);
// if `dinput` is given it receives d loss / d input.
void Backward(const ModelSpec& spec, const ModelParams& params,
              const ForwardTape& tape, const Eigen::VectorXd& dlogits,
              ModelParams& grads, Eigen::MatrixXd* dinput = nullptr);

struct AdamHyper {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  int64_t t = 0;

  static AdamState For(const ModelParams& params);
};

void AdamStep(ModelParams& params, const ModelParams& grads, AdamState& state,
              const AdamHyper& hyper);

struct TrainConfig {
  AdamHyper adam;
  int batch_size = 32;
  int epochs = 30;
  ChannelConfig channel;
  uint64_t seed = 0;

  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

// Mini-batch ADAM with fresh channel draws per sample, layer and round at
// every step. Graph/topological baselines (TNN, GNN) always train on ideal
// links. Deterministic for a given seed. Throws TrainingDiverged on a
// non-finite loss.
TrainResult Train(const ModelSpec& spec, const ModelTopology& topo,
                  std::span<const SourceLocSample> train,
                  std::span<const SourceLocSample> val, const TrainConfig& cfg);

// Mean loss over a set under the given channel (one draw per sample).
double MeanLoss(const ModelSpec& spec, const ModelParams& params,
                const ModelTopology& topo, std::span<const SourceLocSample> data,
                const ChannelConfig& channel, uint64_t seed);

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;
  // Accuracy over all samples for each independent channel realization.
  std::vector<double> per_realization;
};

// Every sample is classified under n_realizations channel draws. Ideal
// channels use one deterministic pass.
EvalResult Evaluate(const ModelSpec& spec, const ModelParams& params,
                    const ModelTopology& topo,
                    std::span<const SourceLocSample> data,
                    const ChannelConfig& channel, int n_realizations,
                    uint64_t seed);

int Predict(const Eigen::VectorXd& logits);

void WriteCheckpoint(std::ostream& out, const ModelSpec& spec, int n_cells,
                     const ModelParams& params);
void SaveCheckpoint(const std::string& path, const ModelSpec& spec, int n_cells,
                    const ModelParams& params);
struct Checkpoint {
  ModelSpec spec;
  int n_cells = 0;
  ModelParams params;
};
Checkpoint ReadCheckpoint(std::istream& in);
Checkpoint LoadCheckpoint(const std::string& path);

// epoch,split,loss,accuracy
void WriteHistoryCsv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace airtnn

#endif  // AIRTNN_NN_H_
