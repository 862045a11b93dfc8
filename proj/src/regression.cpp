#include "chaoslab/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chaoslab/exact_sum.hpp"

namespace chaoslab {

double RidgeFit::predict(std::span<const double> row) const {
  if (row.size() != coefficients.size()) {
    throw std::invalid_argument("ridge predict: feature count mismatch");
  }
  double acc = intercept;
  for (std::size_t j = 0; j < row.size(); ++j) acc += coefficients[j] * row[j];
  return acc;
}

RidgeFit fit_ridge(std::span<const double> rows, std::size_t columns,
                   std::span<const double> targets, const RidgeConfig& config) {
  const std::size_t samples = targets.size();
  if (samples == 0) throw std::invalid_argument("ridge fit: no samples");
  if (columns > 0 && rows.size() != samples * columns) {
    throw std::invalid_argument("ridge fit: design size mismatch");
  }

  RidgeFit fit;
  fit.coefficients.assign(columns, 0.0);

  // Column means, then centered second moments; exact sums keep both
  // independent of sample order.
  std::vector<double> mean(columns, 0.0);
  std::vector<double> scale(columns, 0.0);  // population standard deviation
  std::vector<int> kept;
  kept.reserve(columns);
  {
    ExactSum acc;
    for (std::size_t j = 0; j < columns; ++j) {
      acc.reset();
      for (std::size_t i = 0; i < samples; ++i) acc.add(rows[i * columns + j]);
      mean[j] = acc.round() / static_cast<double>(samples);
    }
    for (std::size_t j = 0; j < columns; ++j) {
      acc.reset();
      for (std::size_t i = 0; i < samples; ++i) {
        const double c = rows[i * columns + j] - mean[j];
        acc.add(c * c);
      }
      const double ss = acc.round();
      if (ss > 0.0) {
        scale[j] = std::sqrt(ss / static_cast<double>(samples));
        kept.push_back(static_cast<int>(j));
      }
    }
  }
  fit.dropped_columns = static_cast<int>(columns - kept.size());

  double target_mean = 0.0;
  double target_ss = 0.0;  // centered sum of squares
  {
    ExactSum acc;
    for (std::size_t i = 0; i < samples; ++i) acc.add(targets[i]);
    target_mean = acc.round() / static_cast<double>(samples);
    acc.reset();
    for (std::size_t i = 0; i < samples; ++i) {
      const double c = targets[i] - target_mean;
      acc.add(c * c);
    }
    target_ss = acc.round();
  }

  const std::size_t q = kept.size();
  if (q == 0) {
    // Degenerate design: the projection collapses to the sample mean.
    fit.intercept = target_mean;
    fit.ridge_used = config.ridge;
    fit.residual_rms = std::sqrt(std::max(0.0, target_ss) / static_cast<double>(samples));
    return fit;
  }

  // Gram matrix and cross moments of the standardized design.
  Eigen::MatrixXd gram(q, q);
  Eigen::VectorXd cross(q);
  {
    ExactSum acc;
    for (std::size_t a = 0; a < q; ++a) {
      const std::size_t ja = static_cast<std::size_t>(kept[a]);
      for (std::size_t b = a; b < q; ++b) {
        const std::size_t jb = static_cast<std::size_t>(kept[b]);
        acc.reset();
        for (std::size_t i = 0; i < samples; ++i) {
          const double za = (rows[i * columns + ja] - mean[ja]) / scale[ja];
          const double zb = (rows[i * columns + jb] - mean[jb]) / scale[jb];
          acc.add(za * zb);
        }
        const double v = acc.round();
        gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
        gram(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
      }
      acc.reset();
      for (std::size_t i = 0; i < samples; ++i) {
        const double za = (rows[i * columns + ja] - mean[ja]) / scale[ja];
        acc.add(za * (targets[i] - target_mean));
      }
      cross(static_cast<Eigen::Index>(a)) = acc.round();
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("ridge fit: eigen decomposition failed");
  }
  const Eigen::VectorXd& ev = eig.eigenvalues();

  const double n = static_cast<double>(samples);
  auto solve_with = [&](double ridge) {
    Eigen::VectorXd shifted = ev.array() + n * ridge;
    Eigen::VectorXd beta =
        eig.eigenvectors() *
        (eig.eigenvectors().transpose() * cross).cwiseQuotient(shifted);
    return beta;
  };
  // Conditioning of the unregularized normal equations; the ridge then keeps
  // the actual solve well-posed either way.
  fit.condition = ev(0) > 0.0 ? ev(q - 1) / ev(0)
                              : std::numeric_limits<double>::infinity();
  fit.ridge_used = config.ridge;
  if (fit.condition > config.condition_limit) {
    fit.ill_conditioned = true;
    fit.ridge_used = config.fallback_ridge;
  }
  Eigen::VectorXd beta = solve_with(fit.ridge_used);

  // Back-transform to raw features; the intercept absorbs the centering.
  double shift = target_mean;
  for (std::size_t a = 0; a < q; ++a) {
    const std::size_t j = static_cast<std::size_t>(kept[a]);
    const double c = beta(static_cast<Eigen::Index>(a)) / scale[j];
    fit.coefficients[j] = c;
    shift -= c * mean[j];
  }
  fit.intercept = shift;

  // Training residual from the Gram pieces (valid for any coefficient vector).
  const double ssr = target_ss - 2.0 * beta.dot(cross) + beta.dot(gram * beta);
  fit.residual_rms = std::sqrt(std::max(0.0, ssr) / n);
  return fit;
}

}  // namespace chaoslab
