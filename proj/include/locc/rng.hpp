#pragma once

#include <cstdint>

namespace locc {

/// SplitMix64 stream. Pure 64-bit integer arithmetic, so sequences are
/// bit-identical across platforms and independent of evaluation order.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent stream for one trial, derived only from (seed, trialIndex):
/// trials can be evaluated in any order or split across workers without
/// changing any outcome.
inline SplitMix64 trial_stream(std::uint64_t seed, std::uint64_t trialIndex) {
    return SplitMix64(mix64(seed + 0x9E3779B97F4A7C15ULL * (trialIndex + 1)));
}

} // namespace locc
