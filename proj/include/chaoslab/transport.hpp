#pragma once

#include <span>

#include "chaoslab/empirical.hpp"

namespace chaoslab {

// All distances below compare equal-weight empirical measures of the SAME
// support size (unequal sizes are rejected; no implicit resampling) for
// orders p in [1, 2].

// One-dimensional W_p via order statistics: match sorted samples.
double wasserstein_1d(std::span<const double> a, std::span<const double> b, double p);

// Exact W_p in any dimension: minimum-cost perfect matching with cost
// |a_i - b_j|^p, solved by shortest augmenting paths with dual potentials
// (Jonker-Volgenant construction), O(n^3).
double wasserstein_assignment(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

// Dispatch: order statistics when dim == 1, assignment otherwise.
double wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);

// Entropy-regularized approximation (log-domain Sinkhorn).  `value` is the
// sharp transport cost of the regularized plan (no entropy term), so it upper
// bounds the exact distance.  Intended as the opt-in fallback for clouds too
// large for the exact solver; never used by the estimators here.
struct SinkhornResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};
SinkhornResult wasserstein_entropic(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                                    double reg, int max_iters = 10000, double tol = 1e-6);

// W_p between path clouds under the sup norm over grid nodes:
// cost c(i,j) = max_k |A_i(t_k) - B_j(t_k)|^p, then exact assignment.
double path_wasserstein_supnorm(const PathCloud& a, const PathCloud& b, double p);

}  // namespace chaoslab
