#pragma once

#include <cstdint>

namespace ringlock {

/// Counter-based generator: every draw is a pure function of (seed, stream,
/// counter), so samples can be produced in any order or in parallel and
/// still be reproducible.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const;
  /// Standard normal, Box-Muller over draws 2c and 2c+1.
  double normal(std::uint64_t counter) const;

 private:
  std::uint64_t key_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ringlock
