#pragma once

#include <cstdint>
#include <string_view>

namespace vvma {

/// Counter-based generator: draw i is splitmix64's finalizer applied to
/// seed + (i + 1) * golden_gamma. Streams are fully determined by (seed, i),
/// so another implementation reproduces them from this description alone.
class Rng {
 public:
  static constexpr std::string_view kName = "splitmix64-counter/1";

  explicit Rng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate is cached.
  double gaussian() noexcept;
  double gaussian(double mean, double stddev) noexcept { return mean + stddev * gaussian(); }

  std::uint64_t counter() const noexcept { return counter_; }

  /// Derives an independent seed for a named sub-stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vvma
