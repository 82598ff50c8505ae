#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace lpeq {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
/// pure function of (key, counter), so every (seed, path, step) owns its
/// random numbers regardless of thread scheduling.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(Key key) : key_(key) {}
  explicit constexpr Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += kW0;
        k[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
  Key key_;
};

/// Independent substreams of the same seed.
enum class Stream : std::uint32_t { dividend = 0, feynman_kac = 1 };

/// Standard normal draw keyed by (seed, stream, path, step). Two Box-Muller
/// normals come out of one Philox block; step parity picks which.
inline double normal_draw(const Philox4x32& gen, Stream stream, std::uint64_t path,
                          std::uint64_t step) {
  const auto block = gen({static_cast<std::uint32_t>(step >> 1), static_cast<std::uint32_t>(path),
                          static_cast<std::uint32_t>(path >> 32),
                          static_cast<std::uint32_t>(stream)});
  const std::uint64_t b0 = (static_cast<std::uint64_t>(block[0]) << 32) | block[1];
  const std::uint64_t b1 = (static_cast<std::uint64_t>(block[2]) << 32) | block[3];
  constexpr double kScale = 0x1.0p-53;
  const double u1 = (static_cast<double>(b0 >> 11) + 0.5) * kScale;  // (0, 1)
  const double u2 = static_cast<double>(b1 >> 11) * kScale;          // [0, 1)
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (step & 1u) == 0 ? radius * std::cos(angle) : radius * std::sin(angle);
}

}  // namespace lpeq
