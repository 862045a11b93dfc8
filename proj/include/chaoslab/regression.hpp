#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chaoslab {

// Ridge-regularized linear least squares used for conditional-expectation
// projections.  Columns are standardized internally, the intercept is left
// unpenalized, and constant (zero-variance) columns are dropped so degenerate
// designs fall back to the sample mean.  Every reduction over samples uses
// exact summation, which makes the fit invariant under sample reordering.
struct RidgeConfig {
  double ridge = 1e-8;            // relative penalty on the standardized Gram
  double condition_limit = 1e10;  // refit with fallback_ridge above this
  double fallback_ridge = 1e-6;
};

struct RidgeFit {
  std::vector<double> coefficients;  // per input column; dropped columns -> 0
  double intercept = 0.0;
  double condition = 1.0;      // eigenvalue ratio of the regularized Gram
  double ridge_used = 0.0;
  double residual_rms = 0.0;   // training root-mean-square residual
  int dropped_columns = 0;
  bool ill_conditioned = false;

  double predict(std::span<const double> row) const;
};

// rows: sample-major design matrix, `columns` entries per sample, no constant
// column (the intercept is implicit).  targets: one value per sample.
RidgeFit fit_ridge(std::span<const double> rows, std::size_t columns,
                   std::span<const double> targets,
                   const RidgeConfig& config = {});

}  // namespace chaoslab
