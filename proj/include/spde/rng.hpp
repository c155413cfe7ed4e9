#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace spde {

// Counter-based generator (Philox 4x32, 10 rounds).  Every draw is a pure
// function of (key, counter); there is no stream state, so samples indexed
// by (seed, sample, source, step) can be generated in any order, from any
// thread, with identical results.
namespace philox {

inline constexpr std::uint32_t kW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Counter round_once(const Counter& c, const Key& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kM4x32A, c[0], hi0, lo0);
  mulhilo(kM4x32B, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline Counter generate(Counter c, Key k) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kW32A;
      k[1] += kW32B;
    }
    c = round_once(c, k);
  }
  return c;
}

}  // namespace philox

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// One standard normal draw for the tuple (seed, stream, sample, step).
/// `stream` separates independent noise sources (and auxiliary consumers
/// such as bootstrap resampling); `sample` is the Monte Carlo replica.
inline double standard_normal(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t sample, std::uint64_t step) {
  const std::uint64_t k64 = detail::splitmix64(seed ^ detail::splitmix64(stream));
  const philox::Key key = {static_cast<std::uint32_t>(k64), static_cast<std::uint32_t>(k64 >> 32)};
  const philox::Counter ctr = {static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32),
                               static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  const philox::Counter r = philox::generate(ctr, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  // Box-Muller; u1 in (0,1] keeps the log finite.
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform draw in [0, 1) for the same tuple scheme (used by resampling).
inline double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t sample, std::uint64_t step) {
  const std::uint64_t k64 = detail::splitmix64(seed ^ detail::splitmix64(stream));
  const philox::Key key = {static_cast<std::uint32_t>(k64), static_cast<std::uint32_t>(k64 >> 32)};
  const philox::Counter ctr = {static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32),
                               static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  const philox::Counter r = philox::generate(ctr, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  return static_cast<double>(a >> 11) * 0x1.0p-53;
}

}  // namespace spde
