#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace seqmark {

// The standard engines are bit-specified, the standard distributions are not.
// These helpers turn raw engine output into variates with a fixed algorithm so
// that seeded results are identical on every platform.
using Rng = std::mt19937_64;

/// Uniform on [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [lo, hi] by rejection-free multiply-shift (bias < 2^-32 for small ranges).
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  const auto r = static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * span) >> 64);
  return lo + static_cast<std::int64_t>(r);
}

/// Approximately standard normal: Irwin-Hall sum of 12 uniforms minus 6.
/// Arithmetic only, so bit-stable everywhere; tails are truncated at +-6.
inline double standard_normal(Rng& rng) {
  double s = 0.0;
  for (int i = 0; i < 12; ++i) s += uniform01(rng);
  return s - 6.0;
}

/// Independent stream for (master seed, index), e.g. one per MC pass or per cell.
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace seqmark
