#ifndef AIRTNN_CHANNEL_H_
#define AIRTNN_CHANNEL_H_

#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "airtnn/rng.h"
#include "airtnn/topology.h"

namespace airtnn {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class SnrReference { kUnitPower, kEmpiricalSignalPower };

struct ChannelConfig {
  // Rayleigh scale of the fading magnitudes.
  double fading_scale = 1.0;
  // Per-round receiver SNR; +inf disables the AWGN term.
  double snr_db = 20.0;
  // Perfect links: unit gains and no noise, regardless of the fields above.
  bool ideal = false;
  SnrReference snr_reference = SnrReference::kEmpiricalSignalPower;

  static ChannelConfig Ideal() {
    ChannelConfig c;
    c.ideal = true;
    return c;
  }
  // Throws ConfigError when fading_scale <= 0 on a non-ideal channel.
  void Validate() const;
};

// Noise standard deviation for one round transmitting `signal`:
// sigma^2 = P_ref / 10^(snr_db / 10). An all-zero signal under the empirical
// reference falls back to unit power (logged once).
double NoiseSigma(const ChannelConfig& cfg, const Eigen::MatrixXd& signal);

// Communication links of one neighborhood, taken from the structural nonzeros
// of a shift operator. Off-diagonal entries are wireless links; diagonal
// entries (Laplacian kinds only) are local terms that never fade.
class LinkPattern {
 public:
  LinkPattern() = default;
  explicit LinkPattern(const ShiftOperator& op);
  // Binary links on `support`, i.e. the adjacency operator with that support.
  static LinkPattern FromSupport(int n, const std::vector<std::pair<int, int>>& support);

  int size() const { return static_cast<int>(weights_.rows()); }
  int nnz() const { return static_cast<int>(weights_.nonZeros()); }
  // Ideal shift operator with the pattern's sparsity.
  const SparseRowMatrix& weights() const { return weights_; }
  // Per stored entry, in storage order: 1 for a wireless link.
  const std::vector<char>& over_air() const { return over_air_; }

 private:
  SparseRowMatrix weights_;
  std::vector<char> over_air_;
};

// One sampled communication round. gains(i, j) = h_ij * s_ij on the pattern.
struct AirShiftRealization {
  SparseRowMatrix gains;
  Eigen::MatrixXd noise;  // N x F, one draw per receiving cell and feature
  int round_index = 0;
};

// Independent Rayleigh draw per directed link (no reciprocity) and i.i.d.
// N(0, sigma^2) noise. Ideal channels consume no randomness.
AirShiftRealization SampleRealization(const LinkPattern& links,
                                      const ChannelConfig& cfg, double sigma,
                                      int n_features, Rng& rng);

// gains * x + noise.
Eigen::MatrixXd AirShift(const Eigen::MatrixXd& x,
                         const AirShiftRealization& realization);

enum class Neighborhood { kLower, kUpper };

// [x, x^(1), ..., x^(P)] plus the realization used for every round.
struct ShiftSequence {
  Neighborhood neighborhood = Neighborhood::kLower;
  std::vector<Eigen::MatrixXd> shifts;
  std::vector<AirShiftRealization> realizations;  // realizations[p-1] -> round p

  int taps() const { return static_cast<int>(shifts.size()) - 1; }
};

// Recursive P-fold air shift with a fresh realization per round. The noise
// level of round p is set from the power of the signal it transmits.
ShiftSequence MultiShift(const Eigen::MatrixXd& x, const LinkPattern& links,
                         int taps, const ChannelConfig& cfg, Rng& rng,
                         Neighborhood neighborhood = Neighborhood::kLower);

// Re-runs the recursion over previously recorded realizations.
ShiftSequence ReplayShift(const Eigen::MatrixXd& x,
                          const std::vector<AirShiftRealization>& realizations,
                          Neighborhood neighborhood = Neighborhood::kLower);

// Text dump: "round p", then "gain i j h" and "noise i f v" records.
void WriteRealizationTrace(std::ostream& out, const ShiftSequence& seq);

}  // namespace airtnn

#endif  // AIRTNN_CHANNEL_H_
