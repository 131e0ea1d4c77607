#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "airtnn/channel.h"
#include "airtnn/error.h"
#include "doctest.h"
#include "fixtures.h"

namespace airtnn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd RandomSignal(int n, int f, uint64_t seed) {
  Rng rng = MakeRng(seed, {TagOf("signal")});
  Eigen::MatrixXd x(n, f);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) x(i, j) = Gaussian(rng, 0.0, 1.0);
  return x;
}

double RelErr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

TEST_CASE("noise sigma follows the SNR formula for both references") {
  ChannelConfig cfg;
  cfg.snr_db = 40;
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(3, 2, std::sqrt(2.0));
  CHECK(std::pow(NoiseSigma(cfg, x), 2) == doctest::Approx(2e-4).epsilon(1e-12));
  cfg.snr_reference = SnrReference::kUnitPower;
  CHECK(std::pow(NoiseSigma(cfg, x), 2) == doctest::Approx(1e-4).epsilon(1e-12));
  cfg.snr_db = 0;
  CHECK(NoiseSigma(cfg, x) == doctest::Approx(1.0));
  cfg.snr_db = kInf;
  CHECK(NoiseSigma(cfg, x) == 0.0);
}

TEST_CASE("all-zero signal falls back to unit reference power") {
  ChannelConfig cfg;
  cfg.snr_db = 20;
  CHECK(NoiseSigma(cfg, Eigen::MatrixXd::Zero(4, 1)) == doctest::Approx(0.1));
}

TEST_CASE("channel config rejects non-positive fading scale") {
  ChannelConfig cfg;
  cfg.fading_scale = 0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg.ideal = true;
  CHECK_NOTHROW(cfg.Validate());
}

TEST_CASE("realization gains live on the support and are nonnegative") {
  CellComplex2 c = testing::SmallSbm(2);
  ShiftOperator op = MakeShiftOperator(c, ShiftKind::kLowerAdjacency);
  LinkPattern links(op);
  Rng rng = MakeRng(5, {});
  ChannelConfig cfg;
  AirShiftRealization r = SampleRealization(links, cfg, 0.3, 2, rng);
  Eigen::MatrixXd g(r.gains);
  for (int i = 0; i < g.rows(); ++i) {
    for (int j = 0; j < g.cols(); ++j) {
      if (op.matrix(i, j) == 0) CHECK(g(i, j) == 0.0);
      else CHECK(g(i, j) > 0.0);
    }
  }
  CHECK(r.noise.rows() == op.size());
  CHECK(r.noise.cols() == 2);
}

TEST_CASE("gains are not reciprocal") {
  CellComplex2 c = testing::Triangle();
  LinkPattern links(MakeShiftOperator(c, ShiftKind::kLowerAdjacency));
  Rng rng = MakeRng(1, {});
  Eigen::MatrixXd g(SampleRealization(links, ChannelConfig{}, 0.0, 1, rng).gains);
  CHECK(g(0, 1) != g(1, 0));
}

TEST_CASE("ideal realization is the shift operator and uses no randomness") {
  CellComplex2 c = testing::Bowtie();
  ShiftOperator op = MakeShiftOperator(c, ShiftKind::kUpperAdjacency);
  LinkPattern links(op);
  Rng rng = MakeRng(9, {});
  Rng untouched = rng;
  AirShiftRealization r = SampleRealization(links, ChannelConfig::Ideal(), 1.0, 3, rng);
  CHECK(Eigen::MatrixXd(r.gains) == op.matrix);
  CHECK(r.noise.isZero());
  CHECK(rng() == untouched());
}

TEST_CASE("Laplacian diagonal entries never fade") {
  CellComplex2 c = testing::Bowtie();
  ShiftOperator op = MakeShiftOperator(c, ShiftKind::kLowerLaplacian);
  LinkPattern links(op);
  Rng rng = MakeRng(4, {});
  ChannelConfig cfg;
  cfg.fading_scale = 3.0;
  Eigen::MatrixXd g(SampleRealization(links, cfg, 0.0, 1, rng).gains);
  for (int i = 0; i < op.size(); ++i) CHECK(g(i, i) == op.matrix(i, i));
}

TEST_CASE("air shift matches a per-cell scalar loop") {
  CellComplex2 c = testing::SmallSbm(7);
  ShiftOperator op = MakeShiftOperator(c, ShiftKind::kLowerAdjacency);
  LinkPattern links(op);
  Rng rng = MakeRng(2, {});
  AirShiftRealization r = SampleRealization(links, ChannelConfig{}, 0.2, 3, rng);
  Eigen::MatrixXd x = RandomSignal(op.size(), 3, 1);
  Eigen::MatrixXd g(r.gains);
  Eigen::MatrixXd got = AirShift(x, r);
  for (int i = 0; i < op.size(); ++i) {
    for (int f = 0; f < 3; ++f) {
      double acc = 0.0;
      for (int j = 0; j < op.size(); ++j) {
        if (op.matrix(i, j) != 0) acc += g(i, j) * op.matrix(i, j) * x(j, f);
      }
      acc += r.noise(i, f);
      CHECK(got(i, f) == doctest::Approx(acc).epsilon(1e-13));
    }
  }
}

TEST_CASE("Rayleigh gains have mean scale * sqrt(pi / 2)") {
  const double delta = 1.7;
  Rng rng = MakeRng(0, {});
  const int n = 20000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    double h = Rayleigh(rng, delta);
    sum += h;
    sum2 += h * h;
  }
  const double mean = sum / n;
  const double expect = delta * std::sqrt(std::numbers::pi / 2);
  const double sd = delta * std::sqrt(2 - std::numbers::pi / 2);
  CHECK(std::abs(mean - expect) < 4 * sd / std::sqrt(n));
  CHECK(sum2 / n == doctest::Approx(2 * delta * delta).epsilon(0.03));
}

TEST_CASE("expected air shift is the scaled ideal shift") {
  CellComplex2 c = testing::Bowtie();
  ShiftOperator op = MakeShiftOperator(c, ShiftKind::kLowerAdjacency);
  LinkPattern links(op);
  ChannelConfig cfg;
  cfg.fading_scale = 0.8;
  Eigen::MatrixXd x = RandomSignal(op.size(), 1, 3);
  const double sigma = 0.5;
  Rng rng = MakeRng(8, {});
  const int draws = 20000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(op.size(), 1);
  double noise2 = 0;
  for (int k = 0; k < draws; ++k) {
    AirShiftRealization r = SampleRealization(links, cfg, sigma, 1, rng);
    sum += AirShift(x, r);
    noise2 += r.noise.squaredNorm();
  }
  Eigen::MatrixXd expect = cfg.fading_scale * std::sqrt(std::numbers::pi / 2) * op.matrix * x;
  // Per-entry variance: sum_j (Var h) x_j^2 + sigma^2.
  const double var_h = cfg.fading_scale * cfg.fading_scale * (2 - std::numbers::pi / 2);
  for (int i = 0; i < op.size(); ++i) {
    double v = sigma * sigma;
    for (int j = 0; j < op.size(); ++j) v += op.matrix(i, j) * var_h * x(j, 0) * x(j, 0);
    CHECK(std::abs(sum(i, 0) / draws - expect(i, 0)) < 4 * std::sqrt(v / draws));
  }
  CHECK(noise2 / (draws * op.size()) == doctest::Approx(sigma * sigma).epsilon(0.02));
}

TEST_CASE("ideal multi shift collapses to matrix powers") {
  CellComplex2 c = testing::SmallSbm(1);
  ShiftOperator op = MakeShiftOperator(c, ShiftKind::kUpperAdjacency);
  LinkPattern links(op);
  Eigen::MatrixXd x = RandomSignal(op.size(), 2, 4);
  Rng rng = MakeRng(0, {});
  ShiftSequence seq = MultiShift(x, links, 3, ChannelConfig::Ideal(), rng,
                                 Neighborhood::kUpper);
  REQUIRE(seq.taps() == 3);
  CHECK(seq.shifts[0] == x);
  Eigen::MatrixXd power = x;
  for (int p = 1; p <= 3; ++p) {
    power = op.matrix * power;
    CHECK(RelErr(seq.shifts[p], power) <= 1e-12);
  }
  CHECK(seq.neighborhood == Neighborhood::kUpper);
}

// Unrolled form: x^(p) = G_p...G_1 x + sum_{i<p} G_p...G_{i+1} n_i + n_p.
TEST_CASE("multi shift equals the closed-form expansion") {
  CellComplex2 c = testing::SmallSbm(3);
  LinkPattern links(MakeShiftOperator(c, ShiftKind::kLowerAdjacency));
  ChannelConfig cfg;
  cfg.snr_db = 10;
  Eigen::MatrixXd x = RandomSignal(links.size(), 2, 5);
  for (int taps = 1; taps <= 3; ++taps) {
    Rng rng = MakeRng(taps, {});
    ShiftSequence seq = MultiShift(x, links, taps, cfg, rng);
    REQUIRE(static_cast<int>(seq.realizations.size()) == taps);
    for (int p = 1; p <= taps; ++p) {
      std::vector<Eigen::MatrixXd> g;
      for (int r = 0; r < p; ++r) g.emplace_back(seq.realizations[r].gains);
      Eigen::MatrixXd expect = x;
      for (int r = 0; r < p; ++r) expect = g[r] * expect;
      for (int i = 0; i < p; ++i) {
        Eigen::MatrixXd term = seq.realizations[i].noise;
        for (int r = i + 1; r < p; ++r) term = g[r] * term;
        expect += term;
      }
      CHECK(RelErr(seq.shifts[p], expect) <= 1e-10);
    }
  }
}

TEST_CASE("each round draws a fresh realization") {
  CellComplex2 c = testing::SmallSbm(0);
  LinkPattern links(MakeShiftOperator(c, ShiftKind::kLowerAdjacency));
  Rng rng = MakeRng(3, {});
  ShiftSequence seq = MultiShift(RandomSignal(links.size(), 1, 0), links, 2,
                                 ChannelConfig{}, rng);
  CHECK(!Eigen::MatrixXd(seq.realizations[0].gains)
             .isApprox(Eigen::MatrixXd(seq.realizations[1].gains)));
  CHECK(seq.realizations[0].round_index == 1);
  CHECK(seq.realizations[1].round_index == 2);
}

TEST_CASE("noise level of each round follows the transmitted power") {
  CellComplex2 c = testing::SmallSbm(0);
  LinkPattern links(MakeShiftOperator(c, ShiftKind::kLowerAdjacency));
  ChannelConfig cfg;
  cfg.snr_db = 0;
  // Large input so round 1 noise is large; round 2 transmits the bigger x^(1).
  Eigen::MatrixXd x = 5.0 * RandomSignal(links.size(), 40, 2);
  Rng rng = MakeRng(6, {});
  ShiftSequence seq = MultiShift(x, links, 2, cfg, rng);
  const double s1 = NoiseSigma(cfg, seq.shifts[0]);
  const double s2 = NoiseSigma(cfg, seq.shifts[1]);
  const double n = static_cast<double>(seq.realizations[0].noise.size());
  CHECK(std::sqrt(seq.realizations[0].noise.squaredNorm() / n) ==
        doctest::Approx(s1).epsilon(0.05));
  CHECK(std::sqrt(seq.realizations[1].noise.squaredNorm() / n) ==
        doctest::Approx(s2).epsilon(0.05));
}

TEST_CASE("replay and reseeding reproduce a sequence bitwise") {
  CellComplex2 c = testing::SmallSbm(5);
  LinkPattern links(MakeShiftOperator(c, ShiftKind::kUpperAdjacency));
  Eigen::MatrixXd x = RandomSignal(links.size(), 2, 9);
  Rng a = MakeRng(42, {}), b = MakeRng(42, {});
  ShiftSequence s1 = MultiShift(x, links, 3, ChannelConfig{}, a);
  ShiftSequence s2 = MultiShift(x, links, 3, ChannelConfig{}, b);
  ShiftSequence s3 = ReplayShift(x, s1.realizations);
  for (int p = 0; p <= 3; ++p) {
    CHECK(s1.shifts[p] == s2.shifts[p]);
    CHECK(s1.shifts[p] == s3.shifts[p]);
  }
}

TEST_CASE("realization trace lists rounds, gains and noise") {
  CellComplex2 c = testing::Triangle();
  LinkPattern links(MakeShiftOperator(c, ShiftKind::kLowerAdjacency));
  Rng rng = MakeRng(0, {});
  ShiftSequence seq = MultiShift(Eigen::MatrixXd::Ones(3, 1), links, 2,
                                 ChannelConfig{}, rng);
  std::ostringstream out;
  WriteRealizationTrace(out, seq);
  std::istringstream in(out.str());
  std::string line;
  int rounds = 0, gains = 0, noise = 0;
  while (std::getline(in, line)) {
    rounds += line.rfind("round ", 0) == 0;
    gains += line.rfind("gain ", 0) == 0;
    noise += line.rfind("noise ", 0) == 0;
  }
  CHECK(rounds == 2);
  CHECK(gains == 2 * 6);
  CHECK(noise == 2 * 3);
}

}  // namespace
}  // namespace airtnn
