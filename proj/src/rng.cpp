#include "si/rng.hpp"

#include <cmath>
#include <numbers>

namespace si::rng {

namespace {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::uint32_t x[4], std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t y1 = x[1], y3 = x[3];
  x[0] = hi1 ^ y1 ^ k0;
  x[1] = lo1;
  x[2] = hi0 ^ y3 ^ k1;
  x[3] = lo0;
}
}  // namespace

std::array<std::uint32_t, 4> Philox::block(std::uint64_t counter) const {
  std::uint32_t x[4] = {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t k0 = static_cast<std::uint32_t>(seed);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
  for (int r = 0; r < 10; ++r) {
    round_once(x, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {x[0], x[1], x[2], x[3]};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + tag * 0x9E3779B97F4A7C15ull + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform(const Philox& g, std::uint64_t counter) { return to_unit(g.words(counter)[0]); }

void normal_fill(const Philox& g, std::uint64_t counter0, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const auto w = g.words(counter0 + i / 2);
    const double u1 = to_unit(w[0]);
    const double u2 = to_unit(w[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    out[i] = r * std::cos(a);
    if (i + 1 < n) out[i + 1] = r * std::sin(a);
  }
}

std::uint64_t uniform_index(const Philox& g, std::uint64_t counter, std::uint64_t n) {
  // 64-bit multiply-shift; bias is negligible for the n used here
  const std::uint64_t w = g.words(counter)[0];
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(w) * n) >> 64);
}

}  // namespace si::rng
