#pragma once

#include <cstdint>
#include <string_view>

#include "sosmap/geometry.hpp"

namespace sosmap {

// Deterministic pseudo-random generator: xoshiro256++ seeded through
// splitmix64. The algorithm is fixed so that a given Seed produces a
// bit-identical stream on every platform; std::random distributions are
// deliberately not used. Independent sub-streams are derived per purpose
// string ("scatterers", "siren_init", ...) so adding a consumer never
// shifts another consumer's draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Sub-stream for one purpose: the purpose string is FNV-1a hashed and
  // mixed into the seed before state expansion.
  static Rng stream(Seed seed, std::string_view purpose);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (two uniforms per pair, second value cached).
  double normal();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace sosmap
