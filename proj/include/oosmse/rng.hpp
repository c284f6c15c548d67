#pragma once

// Counter-based random streams.
//
// Every stream is a pure function of (seed, stream id, substream id): the
// i-th output never depends on how many other streams exist or on which
// thread consumes them. The block function is Philox4x32 with 10 rounds;
// normals use the two-output Box-Muller transform on 53-bit uniforms.

#include <array>
#include <cstdint>
#include <limits>

namespace oosmse::rng {

inline constexpr const char* kAlgorithm = "philox4x32-10+box-muller";

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// One Philox4x32-10 block.
Counter philox4x32_10(Counter counter, Key key) noexcept;

class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t seed, std::uint32_t stream,
               std::uint32_t substream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u32(); }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() noexcept;

  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

 private:
  void refill() noexcept;

  Key key_;
  Counter counter_;
  std::uint64_t block_index_ = 0;
  Counter buffer_{};
  int buffer_pos_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace oosmse::rng
