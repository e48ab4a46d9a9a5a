#pragma once

#include <array>
#include <cstdint>

namespace slc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a pure function of
// (counter, key), which is what makes the Monte Carlo streams schedule-independent.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

// Purpose tags keep substreams for different consumers disjoint under one master seed.
enum class StreamTag : std::uint32_t {
  Wiener = 1,
  PairSampling = 2,
  SllcScreen = 3,
  SllcFinal = 4,
  Diagnostic = 5,
};

// Coordinates of one Philox block: (seed; tag, realization, a, b).
struct CounterKey {
  std::uint64_t seed = 0;
  StreamTag tag = StreamTag::Wiener;
  std::uint32_t realization = 0;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
};

// Two uniforms in (0, 1] with 53-bit resolution.
std::array<double, 2> uniform_pair(const CounterKey& key) noexcept;
// Two independent standard normals (Box-Muller on uniform_pair).
std::array<double, 2> normal_pair(const CounterKey& key) noexcept;

// Sequential view over one (seed, tag, realization) substream for non-hot-path sampling.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, StreamTag tag, std::uint32_t realization = 0)
      : key_{seed, tag, realization, 0, 0} {}

  double uniform();                  // (0, 1]
  double uniform(double lo, double hi);
  double normal();

 private:
  void refill_uniform();
  void refill_normal();

  CounterKey key_;
  std::array<double, 2> ubuf_{};
  std::array<double, 2> nbuf_{};
  int uleft_ = 0;
  int nleft_ = 0;
  std::uint32_t unext_ = 0;
  std::uint32_t nnext_ = 0;
};

}  // namespace slc
