#include "airtnn/channel.h"

#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <ostream>

#include "airtnn/error.h"
#include "airtnn/text_io.h"

namespace airtnn {

void ChannelConfig::Validate() const {
  if (!ideal && !(fading_scale > 0.0)) {
    throw ConfigError("fading scale must be positive");
  }
  if (std::isnan(snr_db)) throw ConfigError("SNR must not be NaN");
}

double NoiseSigma(const ChannelConfig& cfg, const Eigen::MatrixXd& signal) {
  if (signal.size() == 0) throw ContractError("noise level of an empty signal");
  if (cfg.ideal || cfg.snr_db == std::numeric_limits<double>::infinity()) {
    return 0.0;
  }
  double power = 1.0;
  if (cfg.snr_reference == SnrReference::kEmpiricalSignalPower) {
    power = signal.squaredNorm() / static_cast<double>(signal.size());
    if (power == 0.0) {
      static std::atomic<bool> warned{false};
      if (!warned.exchange(true)) {
        std::clog << "airtnn: warning: all-zero signal under empirical SNR "
                     "reference, using unit power\n";
      }
      power = 1.0;
    }
  }
  return std::sqrt(power / std::pow(10.0, cfg.snr_db / 10.0));
}

LinkPattern::LinkPattern(const ShiftOperator& op) {
  const int n = op.size();
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (op.matrix(i, j) != 0.0) triplets.emplace_back(i, j, op.matrix(i, j));
    }
  }
  weights_.resize(n, n);
  weights_.setFromTriplets(triplets.begin(), triplets.end());
  weights_.makeCompressed();
  over_air_.reserve(weights_.nonZeros());
  for (int i = 0; i < n; ++i) {
    for (SparseRowMatrix::InnerIterator it(weights_, i); it; ++it) {
      over_air_.push_back(it.col() != i ? 1 : 0);
    }
  }
}

LinkPattern LinkPattern::FromSupport(
    int n, const std::vector<std::pair<int, int>>& support) {
  ShiftOperator op;
  op.matrix = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : support) {
    if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
      throw ContractError("invalid link in support");
    }
    op.matrix(i, j) = 1.0;
  }
  return LinkPattern(op);
}

AirShiftRealization SampleRealization(const LinkPattern& links,
                                      const ChannelConfig& cfg, double sigma,
                                      int n_features, Rng& rng) {
  AirShiftRealization r;
  r.gains = links.weights();
  r.noise = Eigen::MatrixXd::Zero(links.size(), n_features);
  if (cfg.ideal) return r;
  double* values = r.gains.valuePtr();
  const auto& over_air = links.over_air();
  for (size_t k = 0; k < over_air.size(); ++k) {
    if (over_air[k]) values[k] *= Rayleigh(rng, cfg.fading_scale);
  }
  if (sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, sigma);
    // Column-major fill: feature by feature.
    double* n = r.noise.data();
    for (Eigen::Index k = 0; k < r.noise.size(); ++k) n[k] = normal(rng);
  }
  return r;
}

Eigen::MatrixXd AirShift(const Eigen::MatrixXd& x,
                         const AirShiftRealization& realization) {
  if (realization.gains.cols() != x.rows() ||
      realization.noise.rows() != realization.gains.rows() ||
      realization.noise.cols() != x.cols()) {
    throw ContractError("air shift dimension mismatch");
  }
  Eigen::MatrixXd y = realization.noise;
  y.noalias() += realization.gains * x;
  return y;
}

ShiftSequence MultiShift(const Eigen::MatrixXd& x, const LinkPattern& links,
                         int taps, const ChannelConfig& cfg, Rng& rng,
                         Neighborhood neighborhood) {
  if (taps < 0) throw ContractError("negative number of shifts");
  if (x.rows() != links.size()) throw ContractError("signal/support size mismatch");
  ShiftSequence seq;
  seq.neighborhood = neighborhood;
  seq.shifts.reserve(taps + 1);
  seq.realizations.reserve(taps);
  seq.shifts.push_back(x);
  for (int p = 1; p <= taps; ++p) {
    const Eigen::MatrixXd& prev = seq.shifts.back();
    double sigma = cfg.ideal ? 0.0 : NoiseSigma(cfg, prev);
    AirShiftRealization r =
        SampleRealization(links, cfg, sigma, static_cast<int>(x.cols()), rng);
    r.round_index = p;
    seq.shifts.push_back(AirShift(prev, r));
    seq.realizations.push_back(std::move(r));
  }
  return seq;
}

ShiftSequence ReplayShift(const Eigen::MatrixXd& x,
                          const std::vector<AirShiftRealization>& realizations,
                          Neighborhood neighborhood) {
  ShiftSequence seq;
  seq.neighborhood = neighborhood;
  seq.shifts.push_back(x);
  for (const auto& r : realizations) {
    seq.shifts.push_back(AirShift(seq.shifts.back(), r));
  }
  seq.realizations = realizations;
  return seq;
}

void WriteRealizationTrace(std::ostream& out, const ShiftSequence& seq) {
  out << "trace " << (seq.neighborhood == Neighborhood::kLower ? "lower" : "upper")
      << ' ' << seq.realizations.size() << '\n';
  for (const auto& r : seq.realizations) {
    out << "round " << r.round_index << '\n';
    for (int i = 0; i < r.gains.outerSize(); ++i) {
      for (SparseRowMatrix::InnerIterator it(r.gains, i); it; ++it) {
        out << "gain " << i << ' ' << it.col() << ' ' << FormatDouble(it.value())
            << '\n';
      }
    }
    for (Eigen::Index i = 0; i < r.noise.rows(); ++i) {
      for (Eigen::Index f = 0; f < r.noise.cols(); ++f) {
        out << "noise " << i << ' ' << f << ' ' << FormatDouble(r.noise(i, f))
            << '\n';
      }
    }
  }
}

}  // namespace airtnn
