#pragma once

#include <cstdint>
#include <random>

namespace favar {

// Deterministic RNG for all stochastic routines. mt19937_64 is bit-exact
// across platforms; the normal sampler is a hand-rolled Box-Muller so the
// draw sequence does not depend on the standard library's
// normal_distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (pairs cached).
  double normal();

  // Uniform integer on [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  // Stream derivation: per-draw/per-replication seeds from a master seed,
  // so parallel and serial execution orders give identical results.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace favar
