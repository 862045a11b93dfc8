#pragma once

#include <array>
#include <cstdint>

namespace chaoslab {

// Philox 4x32-10 counter-based generator.  A block is a pure function of
// (counter, key), so any sub-stream of the noise field can be regenerated in
// isolation and in any order.
struct Philox4x32 {
  static constexpr std::uint32_t kW32A = 0x9E3779B9u;
  static constexpr std::uint32_t kW32B = 0xBB67AE85u;
  static constexpr std::uint32_t kM4x32A = 0xD2511F53u;
  static constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

// Two uniforms in (0,1) from one Philox block, each carrying 53 random bits.
std::array<double, 2> philox_uniform2(Philox4x32::Counter counter, Philox4x32::Key key);

inline Philox4x32::Key philox_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed & 0xFFFFFFFFu),
          static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace chaoslab
