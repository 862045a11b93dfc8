#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace chaoslab {

// Fixed-point superaccumulator for IEEE doubles.
//
// Every finite double is added exactly (no rounding until extraction), so the
// rounded result is independent of addition order.  That property is what the
// solvers lean on: cross-particle reductions computed through ExactSum are
// bit-identical under particle permutations and under any parallel split of
// the input.
//
// Representation: value = sign-free signed sum of limbs, limb j weighted by
// 2^(32*j - kBias).  Limbs live in int64 with ~31 bits of headroom, so carry
// propagation is only needed every ~2^30 additions.
class ExactSum {
 public:
  ExactSum() { reset(); }

  void reset();

  // Adds a finite double. Throws std::invalid_argument on NaN/Inf.
  void add(double x);

  void add(std::span<const double> xs) {
    for (double x : xs) add(x);
  }

  // Correctly rounded (nearest-even) value of the exact sum.
  double round() const;

  // Number of add() calls since reset().
  std::int64_t count() const { return count_; }

 private:
  static constexpr int kLimbs = 68;
  static constexpr int kBias = 1088;  // bit 0 of the register = 2^-1088

  void propagate_carries();

  std::int64_t limbs_[kLimbs];
  std::int64_t count_ = 0;
  std::int64_t adds_since_norm_ = 0;
};

// Exactly rounded sum of a range.
double exact_sum(std::span<const double> xs);

// Exactly rounded sum divided by n (the division rounds once).
double exact_mean(std::span<const double> xs);

}  // namespace chaoslab
