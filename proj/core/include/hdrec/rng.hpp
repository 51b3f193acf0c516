#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hdrec {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Every draw is a pure function of (key, counter), so noise for a given
/// (seed, angle, pixel) never depends on evaluation order.
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
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  /// Two uniforms in (0, 1) with 53-bit resolution from one block.
  std::array<double, 2> uniform_pair(Counter ctr) const {
    const Counter r = (*this)(ctr);
    return {to_open_unit((std::uint64_t{r[0]} << 32) | r[1]), to_open_unit((std::uint64_t{r[2]} << 32) | r[3])};
  }

  static double to_open_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

 private:
  Key key_;
};

/// Stream tags keep independent uses of one seed from colliding.
enum class Stream : std::uint32_t { LowDose = 1, NormalDose = 2, Patches = 3, Split = 4, Shuffle = 5, Init = 6, Phantom = 7 };

/// Deterministic seed mixing (SplitMix64 finalizer).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Sequential convenience wrapper: successive uniforms from an incrementing counter.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, Stream stream, std::uint32_t substream = 0)
      : gen_(seed), stream_(static_cast<std::uint32_t>(stream)), substream_(substream) {}

  double uniform() {
    if (cached_) {
      cached_ = false;
      return cache_;
    }
    const auto u = gen_.uniform_pair({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                      stream_, substream_});
    ++counter_;
    cache_ = u[1];
    cached_ = true;
    return u[0];
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  Philox4x32 gen_;
  std::uint32_t stream_;
  std::uint32_t substream_;
  std::uint64_t counter_ = 0;
  double cache_ = 0.0;
  bool cached_ = false;
};

}  // namespace hdrec
