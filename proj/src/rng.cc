#include "airtnn/rng.h"

#include <cmath>

namespace airtnn {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> tags) {
  uint64_t h = SplitMix64(seed);
  for (uint64_t t : tags) h = SplitMix64(h ^ SplitMix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

uint64_t TagOf(const char* label) {
  // FNV-1a
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* p = label; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001b3ULL;
  }
  return h;
}

double Rayleigh(Rng& rng, double scale) {
  return scale * std::sqrt(-2.0 * std::log(UniformOpen(rng)));
}

}  // namespace airtnn
