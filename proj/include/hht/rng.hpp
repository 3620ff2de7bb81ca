// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random numbers (Philox4x32-10). A (key, counter) pair maps
// to four 32-bit words with no hidden state, so any draw of any stream can
// be produced independently of every other draw.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace hht {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// One logical random stream: fixed (seed, stream_id), addressed by draw index.
/// Every 128-bit block yields two 64-bit words.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream_id) {}

  /// 64-bit word number `index` of this stream.
  std::uint64_t word(std::uint64_t index) const noexcept {
    const std::uint64_t block = index >> 1;
    const auto out = Philox4x32::generate(
        {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
         static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        key_);
    const std::size_t half = (index & 1u) ? 2 : 0;
    return (static_cast<std::uint64_t>(out[half]) << 32) | out[half + 1];
  }

  /// Uniform on the open interval (0, 1), from the top 52 bits of a word.
  /// (53 bits plus the half-step offset would round up to 1.0.)
  static double open_unit(std::uint64_t w) noexcept {
    return (static_cast<double>(w >> 12) + 0.5) * 0x1.0p-52;
  }

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
};

/// Sequential engine over a CounterStream, usable with <random> distributions.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  CounterEngine(std::uint64_t seed, std::uint64_t stream_id) noexcept : stream_(seed, stream_id) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return stream_.word(next_++); }

 private:
  CounterStream stream_;
  std::uint64_t next_ = 0;
};

}  // namespace hht
