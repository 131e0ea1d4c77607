#ifndef AIRTNN_DATASET_H_
#define AIRTNN_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airtnn/rng.h"
#include "airtnn/sample.h"
#include "airtnn/topology.h"

namespace airtnn {

struct DatasetConfig {
  int n_nodes = 70;
  int n_communities = 10;
  double p_intra = 0.9;
  double p_inter = 0.01;
  int n_train = 1000;
  int n_val = 200;
  int n_test = 200;
  int spikes = 5;              // sources per sample
  double spike_variance = 10;  // variance of each spike intensity
  int tau_max = 5;             // diffusion order drawn from {1, ..., tau_max}
  double diffusion_snr_db = 40.0;
  ShiftKind diffusion_kind = ShiftKind::kLowerAdjacency;
  // n_communities, or n_communities + 1 to include the inter-community edges.
  int n_classes = 11;
  uint64_t seed = 0;

  void Validate() const;
};

struct Dataset {
  DatasetConfig config;
  CellComplex2 complex;
  std::vector<SourceLocSample> train;
  std::vector<SourceLocSample> val;
  std::vector<SourceLocSample> test;
};

// x1 = B1' x0 + B2 x2 with x0, x2 ~ N(0, 1/N1) entrywise.
Eigen::VectorXd BaseSignal(const CellComplex2& complex, Rng& rng);

// `count` distinct edges drawn uniformly from the edges with class `cls`,
// each carrying an independent N(0, variance) intensity. ConfigError if the
// class has fewer than `count` edges.
Eigen::VectorXd InjectSpikes(const std::vector<int>& edge_class, int cls,
                             int count, double variance, Rng& rng);
Eigen::VectorXd InjectSpikes(const CellComplex2& complex, int cls, int count,
                             double variance, Rng& rng);

// Normalized diffusion operator S / lambda_max(S).
class Diffuser {
 public:
  Diffuser(const CellComplex2& complex, ShiftKind kind);
  explicit Diffuser(Eigen::MatrixXd normalized) : op_(std::move(normalized)) {}

  const Eigen::MatrixXd& op() const { return op_; }
  // S^tau v, plus AWGN at `snr_db` relative to the power of S^tau v
  // (no noise for snr_db = +inf).
  Eigen::VectorXd Apply(const Eigen::VectorXd& v, int tau, double snr_db,
                        Rng& rng) const;

 private:
  Eigen::MatrixXd op_;
};

Eigen::VectorXd Diffuse(const CellComplex2& complex, const Eigen::VectorXd& v,
                        int tau, double snr_db, ShiftKind kind, Rng& rng);

// Builds the complex once, then every split from per-sample derived seeds.
Dataset Generate(const DatasetConfig& config);

void WriteDataset(std::ostream& out, const Dataset& dataset);
Dataset ReadDataset(std::istream& in);
void SaveDataset(const std::string& path, const Dataset& dataset);
Dataset LoadDataset(const std::string& path);

}  // namespace airtnn

#endif  // AIRTNN_DATASET_H_
