#ifndef AIRTNN_RNG_H_
#define AIRTNN_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace airtnn {

// All randomness flows through explicitly seeded streams. Independent
// sub-streams are obtained by hashing a parent seed with integer tags, so
// that e.g. the channel draws of (epoch, step, sample) never depend on how
// many numbers some other stream consumed.
using Rng = std::mt19937_64;

uint64_t SplitMix64(uint64_t x);

// Deterministic child seed of `seed` identified by `tags`.
uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> tags);

inline Rng MakeRng(uint64_t seed, std::initializer_list<uint64_t> tags = {}) {
  return Rng(DeriveSeed(seed, tags));
}

// Stable 64-bit tag for a short string label.
uint64_t TagOf(const char* label);

inline double UniformOpen(Rng& rng) {
  // (0, 1): 53 random mantissa bits offset by half an ulp.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double Gaussian(Rng& rng, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(rng);
}

// Rayleigh magnitude with scale `scale` by inversion: scale*sqrt(-2 ln U).
double Rayleigh(Rng& rng, double scale);

}  // namespace airtnn

#endif  // AIRTNN_RNG_H_
