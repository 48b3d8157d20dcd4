#pragma once

#include <array>
#include <cstdint>

namespace klsgd {

// Philox4x32-10 block function (Salmon et al., SC'11). Pure: maps a
// 128-bit counter and 64-bit key to 128 random bits.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

// Which consumer of randomness a substream belongs to. Distinct roles never
// share random bits, so the order in which a step consumes them is irrelevant
// to the values drawn.
enum class StreamRole : std::uint32_t {
  preconditioner = 1,
  gradient = 2,
  prox = 3,
  sampling = 4,
};

// Identifies one replicate of one experiment.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

// Counter-based substream addressed by (seed, replicate, iteration, role).
// Two streams with different addresses are statistically independent; the
// same address always reproduces the same sequence.
class Stream {
 public:
  Stream(StreamKey key, std::uint64_t iteration, StreamRole role);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal (Box-Muller).
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

 private:
  void refill();

  PhiloxKey key_{};
  PhiloxCounter counter_{};
  PhiloxCounter block_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace klsgd
