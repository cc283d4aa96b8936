#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace sqmle {

/// Counter-based Philox4x32-10 stream. The 64-bit seed is the key; the
/// stream id occupies the upper half of the 128-bit counter, so streams with
/// different ids never share a block. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// An independent stream derived from this one's (seed, stream_id) and a
  /// tag; the parent's position is irrelevant.
  RngStream fork(std::uint64_t tag) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, second variate cached).
  double normal() noexcept;
  /// Standard exponential.
  double exponential() noexcept;

  /// One Philox4x32-10 block; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used for key derivation.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace sqmle
