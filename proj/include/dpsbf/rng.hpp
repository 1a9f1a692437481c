// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dpsbf {

/// Philox4x32-10 counter-based generator. A (key, stream) pair selects an
/// independent sequence; the block counter walks it. Satisfies
/// UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t key, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (used_ == 2) {
      refill();
      used_ = 0;
    }
    const auto i = 2 * used_++;
    return (static_cast<std::uint64_t>(out_[i + 1]) << 32) | out_[i];
  }

  /// Uniform double on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static void round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) noexcept {
    constexpr std::uint64_t m0 = 0xD2511F53u;
    constexpr std::uint64_t m1 = 0xCD9E8D57u;
    const std::uint64_t p0 = m0 * c[0];
    const std::uint64_t p1 = m1 * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  void refill() noexcept {
    std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                   static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    auto k = key_;
    for (int r = 0; r < 10; ++r) {
      round(c, k);
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    out_ = c;
    ++counter_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> out_{};
  int used_ = 2;
};

/// SplitMix64 finalizer, used to derive per-realization seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace dpsbf
