#include "treecs/random.hpp"

#include <cmath>
#include <numbers>

namespace treecs {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0xD1B54A32D192ED03ULL + 1));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(derive_seed(seed, stream)) {}

std::uint64_t CounterRng::next_u64() noexcept {
  return splitmix64(key_ + (counter_++) * kGolden);
}

double CounterRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::uniform_index(std::uint64_t bound) noexcept {
  if (bound <= 1)
    return 0;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % bound;
}

double CounterRng::gaussian() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the logarithm is finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double CounterRng::rademacher() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

} // namespace treecs
