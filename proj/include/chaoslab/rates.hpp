#pragma once

#include <cstddef>
#include <span>

namespace chaoslab {

// Parameters of the moment-rate reference curve: Wasserstein order p in
// [1, 2], intermediate exponent q, terminal moment order k with p < q < k,
// state dimension m, particle count n.  The boundary combinations q = 2p
// (when p >= m/2) and q = m/(m - p) (when p < m/2) are outside the curve's
// domain and rejected.
struct RateParams {
  std::size_t n = 1;
  int m = 1;
  double p = 1.0;
  double q = 1.5;
  double k = 2.0;
};

// Piecewise marginal rate: n^{-1/2} + n^{-(q-p)/q} for p > m/2, with a
// log(1+n) factor on the first term at p = m/2, and n^{-p/m} + n^{-(q-p)/q}
// below.
double rate_reference(const RateParams& params);

// Dimension-sensitive rate for the mean-field PDE comparison: n^{-1/2} for
// d < 4, n^{-1/2} log n at d = 4, n^{-2/d} above.
double epsilon_cd(std::size_t n, int d);

// Uniform-in-time rate reference n^{-p/(m+8)}; the stronger n^{-p/(m+4)}
// variant requires more moments and is exposed as an optional curve only.
double sup_rate_reference(std::size_t n, int m, double p);
double sup_rate_reference_strong(std::size_t n, int m, double p);

// Concentration envelopes with unit constants.  The sub-Gaussian part
// switches shape with p against m/2; the polynomial part is
// n * (n * epsilon)^{-(k - delta)/p} with delta in (0, k).
double tail_envelope_a(std::size_t n, double epsilon, int m, double p);
double tail_envelope_b(std::size_t n, double epsilon, double k, double p, double delta);

// Pathwise coupling constant exp(T e^{L_F T}) and the threshold shrink
// epsilon -> epsilon / coupling_constant it induces on tail bounds.
double coupling_constant(double lipschitz_f, double horizon);
double coupled_threshold(double epsilon, double lipschitz_f, double horizon);

// Transport-inequality constant 2 (L_G + T L_F)^2 e^{2 T L_F}.
double talagrand_constant(double lipschitz_g, double lipschitz_f, double horizon);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log-log coordinates
  double slope_stderr = 0.0;
  double ci_low = 0.0;  // 95% confidence interval for the slope
  double ci_high = 0.0;
};

// Least-squares slope of log(error) against log(n); needs at least four
// strictly increasing n values and positive errors.
RateFit fit_rate(std::span<const double> ns, std::span<const double> errors);

}  // namespace chaoslab
