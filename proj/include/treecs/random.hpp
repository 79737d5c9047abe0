#pragma once

#include <cstdint>

namespace treecs {

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent seed for sub-stream `stream` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/**
 * Counter-based generator: draw i of stream (seed, stream) is
 * splitmix64(key + i * golden), so any draw can be recomputed from its
 * coordinates alone. Gaussian variates use the Box-Muller transform.
 *
 * Output is reproducible for a given seed within this library only.
 */
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform integer on [0, bound).
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;
  /// Standard normal.
  double gaussian() noexcept;
  /// +1 or -1 with equal probability.
  double rademacher() noexcept;

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace treecs
