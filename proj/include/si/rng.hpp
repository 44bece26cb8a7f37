#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A
// (seed, stream) pair names an independent stream and every value is
// addressed by a 64-bit counter, so draws are bit-reproducible under any
// partitioning of the work across threads or batches.

#include <array>
#include <cstdint>
#include <span>

namespace si::rng {

struct Philox {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::array<std::uint32_t, 4> block(std::uint64_t counter) const;

  // 128 bits -> two u64 words
  std::array<std::uint64_t, 2> words(std::uint64_t counter) const {
    const auto b = block(counter);
    return {static_cast<std::uint64_t>(b[0]) | (static_cast<std::uint64_t>(b[1]) << 32),
            static_cast<std::uint64_t>(b[2]) | (static_cast<std::uint64_t>(b[3]) << 32)};
  }

  Philox with_stream(std::uint64_t s) const { return {seed, s}; }
};

// splitmix64; used to derive role-separated seeds from one base seed
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

inline double to_unit(std::uint64_t bits) {
  // (0, 1]: 53 mantissa bits, never exactly zero so log() is safe
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// one uniform in (0,1] per counter
double uniform(const Philox& g, std::uint64_t counter);

// out.size() normals; consumes ceil(n/2) counters starting at counter0
void normal_fill(const Philox& g, std::uint64_t counter0, std::span<double> out);

// uniform index in [0, n)
std::uint64_t uniform_index(const Philox& g, std::uint64_t counter, std::uint64_t n);

}  // namespace si::rng
