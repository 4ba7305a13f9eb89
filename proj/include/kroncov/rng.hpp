#pragma once

#include <cstdint>

namespace kroncov {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
// Output is a pure function of (seed, stream, counter), so independent
// streams keyed by (seed, replicate) give reproducible results no matter
// how work is scheduled across threads.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : stream_(stream), key_{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on (0, 1]; never returns 0, safe to pass to log().
  double next_uniform();

  // Standard normal via Box-Muller; caches the second deviate.
  double next_gaussian();

 private:
  void refill();

  std::uint64_t counter_ = 0;
  std::uint64_t stream_;
  std::uint32_t key_[2];
  std::uint32_t block_[4] = {0, 0, 0, 0};
  int pos_ = 4;  // next unread word in block_, 4 = empty
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace kroncov
