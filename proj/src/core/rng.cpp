#include "rng.hpp"

#include <cmath>
#include <numbers>

namespace slc {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit_open_closed(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

std::array<std::uint32_t, 4> block(const CounterKey& k) noexcept {
  return philox4x32_10({k.a, k.b, k.realization, static_cast<std::uint32_t>(k.tag)},
                       {static_cast<std::uint32_t>(k.seed), static_cast<std::uint32_t>(k.seed >> 32)});
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<double, 2> uniform_pair(const CounterKey& key) noexcept {
  const auto r = block(key);
  const std::uint64_t x0 = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t x1 = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  return {to_unit_open_closed(x0), to_unit_open_closed(x1)};
}

std::array<double, 2> normal_pair(const CounterKey& key) noexcept {
  const auto u = uniform_pair(key);
  const double radius = std::sqrt(-2.0 * std::log(u[0]));
  const double angle = 2.0 * std::numbers::pi * u[1];
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

void CounterStream::refill_uniform() {
  CounterKey k = key_;
  k.a = unext_++;
  k.b = 0;
  ubuf_ = uniform_pair(k);
  uleft_ = 2;
}

void CounterStream::refill_normal() {
  CounterKey k = key_;
  k.a = nnext_++;
  k.b = 1;
  nbuf_ = normal_pair(k);
  nleft_ = 2;
}

double CounterStream::uniform() {
  if (uleft_ == 0) refill_uniform();
  return ubuf_[static_cast<std::size_t>(2 - uleft_--)];
}

double CounterStream::uniform(double lo, double hi) { return lo + (hi - lo) * (1.0 - uniform()); }

double CounterStream::normal() {
  if (nleft_ == 0) refill_normal();
  return nbuf_[static_cast<std::size_t>(2 - nleft_--)];
}

}  // namespace slc
