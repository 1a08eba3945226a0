#pragma once

#include <array>
#include <cstdint>

namespace cvtail {

/// Counter-based random stream (Philox4x32-10).
///
/// Every output is a pure function of (seed, stream_id, counter), so a
/// stream can be recreated anywhere and parallel consumers never share
/// state. Confine one instance to one thread at a time.
class RngStream
{
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform() noexcept;

  /// Reposition to an absolute block counter (each block yields two u64).
  void seek(std::uint64_t block) noexcept;

  // UniformRandomBitGenerator interface so std:: algorithms accept it.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept;

} // namespace cvtail
