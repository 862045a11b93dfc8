#include "chaoslab/exact_sum.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace chaoslab {

void ExactSum::reset() {
  std::memset(limbs_, 0, sizeof(limbs_));
  count_ = 0;
  adds_since_norm_ = 0;
}

void ExactSum::add(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("ExactSum: non-finite addend");
  ++count_;
  if (x == 0.0) return;

  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const bool neg = (bits >> 63) != 0;
  const int biased_exp = static_cast<int>((bits >> 52) & 0x7FF);
  const std::uint64_t frac = bits & ((std::uint64_t{1} << 52) - 1);

  std::uint64_t mant;
  int e2;  // x = +/- mant * 2^e2
  if (biased_exp == 0) {
    mant = frac;
    e2 = -1074;
  } else {
    mant = frac | (std::uint64_t{1} << 52);
    e2 = biased_exp - 1075;
  }

  const int pos = e2 + kBias;  // bit position of mant's LSB, >= 14
  const int limb = pos >> 5;
  const int shift = pos & 31;

  const unsigned __int128 wide = static_cast<unsigned __int128>(mant) << shift;
  const std::int64_t c0 = static_cast<std::int64_t>(static_cast<std::uint64_t>(wide) & 0xFFFFFFFFu);
  const std::int64_t c1 =
      static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 32) & 0xFFFFFFFFu);
  const std::int64_t c2 =
      static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 64) & 0xFFFFFFFFu);

  if (neg) {
    limbs_[limb] -= c0;
    limbs_[limb + 1] -= c1;
    limbs_[limb + 2] -= c2;
  } else {
    limbs_[limb] += c0;
    limbs_[limb + 1] += c1;
    limbs_[limb + 2] += c2;
  }

  if (++adds_since_norm_ >= (std::int64_t{1} << 30)) propagate_carries();
}

void ExactSum::propagate_carries() {
  std::int64_t carry = 0;
  for (int j = 0; j < kLimbs; ++j) {
    const std::int64_t v = limbs_[j] + carry;
    const std::int64_t lo = v & 0xFFFFFFFF;
    carry = (v - lo) >> 32;
    limbs_[j] = lo;
  }
  // Sums of < 2^63 doubles cannot escape the register.
  if (carry != 0 && carry != -1) throw std::logic_error("ExactSum: accumulator overflow");
  if (carry == -1) limbs_[kLimbs - 1] += (std::int64_t{1} << 32) * carry;  // keep sign in top limb
  adds_since_norm_ = 0;
}

double ExactSum::round() const {
  // Work on a canonicalized copy: limbs in [0, 2^32), overall sign explicit.
  std::int64_t limbs[kLimbs];
  std::memcpy(limbs, limbs_, sizeof(limbs));

  std::int64_t carry = 0;
  for (int j = 0; j < kLimbs; ++j) {
    const std::int64_t v = limbs[j] + carry;
    const std::int64_t lo = v & 0xFFFFFFFF;
    carry = (v - lo) >> 32;
    limbs[j] = lo;
  }

  double sign = 1.0;
  if (carry == -1) {
    // Negative total: negate the register (2's complement over limbs).
    sign = -1.0;
    std::int64_t borrow = 0;
    for (int j = 0; j < kLimbs; ++j) {
      std::int64_t v = -limbs[j] - borrow;
      borrow = 0;
      while (v < 0) {
        v += (std::int64_t{1} << 32);
        ++borrow;
      }
      limbs[j] = v;
    }
  } else if (carry != 0) {
    throw std::logic_error("ExactSum: accumulator overflow");
  }

  int top = kLimbs - 1;
  while (top >= 0 && limbs[top] == 0) --top;
  if (top < 0) return 0.0;

  const int top_bit_in_limb = 63 - std::countl_zero(static_cast<std::uint64_t>(limbs[top]));
  const std::int64_t msb = static_cast<std::int64_t>(top) * 32 + top_bit_in_limb;  // abs bit pos

  // 53 significand bits; clamp the LSB at 2^-1074 (bit position 14) so a
  // denormal result is rounded in one step.
  std::int64_t lsb = msb - 52;
  if (lsb < 14) lsb = 14;

  auto get_bit = [&](std::int64_t b) -> int {
    if (b < 0 || b > msb) return 0;
    return static_cast<int>((limbs[b >> 5] >> (b & 31)) & 1);
  };

  std::uint64_t m = 0;
  for (std::int64_t b = msb; b >= lsb; --b) m = (m << 1) | static_cast<std::uint64_t>(get_bit(b));

  const int guard = get_bit(lsb - 1);
  bool sticky = false;
  if (guard) {
    // Sticky = any set bit below the guard.
    const std::int64_t gb = lsb - 1;
    for (int j = 0; j <= (gb - 1) >> 5 && !sticky; ++j) {
      std::uint64_t v = static_cast<std::uint64_t>(limbs[j]);
      const std::int64_t limb_top = static_cast<std::int64_t>(j) * 32 + 31;
      if (limb_top >= gb) {
        const int keep = static_cast<int>(gb - static_cast<std::int64_t>(j) * 32);
        v &= (keep > 0) ? ((std::uint64_t{1} << keep) - 1) : 0;
      }
      sticky = v != 0;
    }
  }

  if (guard && (sticky || (m & 1))) ++m;  // nearest, ties to even

  // m <= 2^53 here, exactly representable; ldexp rounds only on overflow.
  return sign * std::ldexp(static_cast<double>(m), static_cast<int>(lsb) - kBias);
}

double exact_sum(std::span<const double> xs) {
  ExactSum acc;
  acc.add(xs);
  return acc.round();
}

double exact_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("exact_mean: empty range");
  return exact_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace chaoslab
