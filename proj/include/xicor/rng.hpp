#pragma once

// Counter-based random numbers. Every deviate is a pure function of
// (seed, domain, stream, index), so results never depend on how work is
// split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace xicor::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline Counter philox4x32_10(Counter ctr, Key key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Domain tags keep independent consumers of one user seed apart.
enum class Domain : std::uint64_t {
  Multipliers = 0x6d756c7469ull,
  Jitter = 0x6a6974746572ull,
  Data = 0x64617461ull,
  Moments = 0x6d6f6d656e74ull,
  Replicate = 0x7265706c6963ull,
};

/// Random access into a keyed family of streams. `stream` selects a
/// sequence (e.g. a bootstrap replication), `index` a position in it.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Domain domain)
      : key64_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(domain)))) {}

  std::array<std::uint64_t, 2> bits128(std::uint64_t stream, std::uint64_t block) const {
    const Counter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    const Key key{static_cast<std::uint32_t>(key64_), static_cast<std::uint32_t>(key64_ >> 32)};
    const Counter out = philox4x32_10(ctr, key);
    return {(std::uint64_t{out[1]} << 32) | out[0], (std::uint64_t{out[3]} << 32) | out[2]};
  }

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    const auto bits = bits128(stream, index / 2);
    return to_unit(bits[index % 2]);
  }

  /// Standard normal via Box-Muller; consecutive even/odd indices share one
  /// counter block and form the cosine/sine pair.
  double normal(std::uint64_t stream, std::uint64_t index) const {
    const auto bits = bits128(stream, index / 2);
    const double radius = std::sqrt(-2.0 * std::log(to_unit(bits[0])));
    const double angle = 2.0 * std::numbers::pi * to_unit(bits[1]);
    return index % 2 == 0 ? radius * std::cos(angle) : radius * std::sin(angle);
  }

  static double to_unit(std::uint64_t bits) {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
  }

 private:
  std::uint64_t key64_;
};

/// Derives a child seed, e.g. one per Monte Carlo replicate.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(b + 0x632BE59BD9B4E019ull));
}

}  // namespace xicor::rng
