#include "chaoslab/philox.hpp"

namespace chaoslab {
namespace {

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t* hi, std::uint32_t* lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b);
  *hi = static_cast<std::uint32_t>(p >> 32);
  *lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Counter single_round(const Philox4x32::Counter& c, const Philox4x32::Key& k) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mul_hi_lo(c[0], Philox4x32::kM4x32A, &hi0, &lo0);
  mul_hi_lo(c[2], Philox4x32::kM4x32B, &hi1, &lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline Philox4x32::Key raise_key(Philox4x32::Key k) {
  return {k[0] + Philox4x32::kW32A, k[1] + Philox4x32::kW32B};
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter counter, Key key) {
  for (int round = 0; round < 10; ++round) {
    counter = single_round(counter, key);
    if (round < 9) key = raise_key(key);
  }
  return counter;
}

std::array<double, 2> philox_uniform2(Philox4x32::Counter counter, Philox4x32::Key key) {
  const auto w = Philox4x32::block(counter, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  // (k + 1/2) * 2^-53 lies strictly inside (0,1); keeps the normal quantile finite.
  constexpr double kScale = 0x1.0p-53;
  return {(static_cast<double>(a >> 11) + 0.5) * kScale,
          (static_cast<double>(b >> 11) + 0.5) * kScale};
}

}  // namespace chaoslab
