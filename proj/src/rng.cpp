#include "cvtail/rng.hpp"

namespace cvtail {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
  std::uint64_t const p = std::uint64_t{a} * std::uint64_t{b};
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept
{
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
  : seed_(seed), stream_id_(stream_id)
{}

void RngStream::seek(std::uint64_t block) noexcept
{
  counter_ = block;
  buffered_ = 0;
}

void RngStream::refill() noexcept
{
  std::array<std::uint32_t, 4> const ctr{static_cast<std::uint32_t>(counter_),
                                         static_cast<std::uint32_t>(counter_ >> 32),
                                         static_cast<std::uint32_t>(stream_id_),
                                         static_cast<std::uint32_t>(stream_id_ >> 32)};
  std::array<std::uint32_t, 2> const key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  auto const out = philox4x32_10(ctr, key);
  buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
  buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
  buffered_ = 2;
  ++counter_;
}

std::uint64_t RngStream::next_u64() noexcept
{
  if (buffered_ == 0)
    refill();
  return buffer_[2 - buffered_--];
}

double RngStream::uniform() noexcept
{
  // 53 random bits centred in their cell: strictly inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace cvtail
