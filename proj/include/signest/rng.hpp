#pragma once

#include <cstdint>

#include "signest/normal.hpp"

namespace signest {

/// Identifies one reproducible random stream. Distinct (master_seed,
/// stream_index) pairs give statistically independent streams, so Monte
/// Carlo trials can be generated concurrently and still reproduce bit-exact.
struct RngSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer: a well-mixed 64-bit bijection.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

}  // namespace detail

/// Counter-based generator: draw i of a stream is mix64(base + i*golden),
/// with base derived from the seed pair. Stateless apart from the counter,
/// so any draw can be regenerated independently.
class CounterRng {
  public:
    explicit CounterRng(RngSeed seed)
        : base_(detail::mix64(detail::mix64(seed.master_seed) + seed.stream_index)) {}

    std::uint64_t next_u64() { return detail::mix64(base_ + (counter_++) * detail::kGolden); }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw by inverse-CDF sampling.
    double next_gaussian() { return std_normal_quantile(next_uniform()); }

  private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace signest
