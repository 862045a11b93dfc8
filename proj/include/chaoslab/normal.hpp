#pragma once

namespace chaoslab {

// Inverse of the standard normal CDF (Wichura's PPND16 rational
// approximations; relative error below 1e-15 on (0,1)).
// Pure arithmetic, hence bit-stable across platforms.
double inverse_normal_cdf(double p);

// Standard normal CDF (complementary-error-function based).
double normal_cdf(double x);

}  // namespace chaoslab
