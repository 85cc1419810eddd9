// scd/rng.h
//
// Portable deterministic random numbers. std:: distributions are
// implementation-defined, so uniform and normal draws are derived here from
// raw mt19937_64 output to keep generated corpora and initial weights
// byte-identical across standard libraries.

#ifndef SCD_RNG_H_
#define SCD_RNG_H_

#include <cstdint>
#include <random>

namespace scd {

/// splitmix64 finalizer; used to derive independent stream seeds.
uint64_t MixSeed(uint64_t a, uint64_t b = 0, uint64_t c = 0);

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  /// Uniform in [0, 1).
  double Uniform();
  /// Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  /// Standard normal via Box-Muller.
  double Normal();
  /// Uniform integer in [0, n).
  uint64_t Below(uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace scd

#endif  // SCD_RNG_H_
