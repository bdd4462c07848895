#pragma once

#include <cstdint>
#include <random>

namespace ladiar {

/// Seeded random stream with distributions defined here rather than by the
/// standard library, whose distribution algorithms are implementation-defined.
/// The engine itself (mt19937_64) is fully specified, so outputs are identical
/// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n);
  double Exponential(double mean);
  double Normal();

  /// Derives an independent child seed (splitmix64 of the next output).
  std::uint64_t Fork();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ladiar
