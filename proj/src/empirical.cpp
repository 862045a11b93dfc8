#include "chaoslab/empirical.hpp"

#include <cmath>
#include <stdexcept>

#include "chaoslab/exact_sum.hpp"

namespace chaoslab {

EmpiricalMeasure::EmpiricalMeasure(int dim_, std::vector<double> points_)
    : dim(dim_), points(std::move(points_)) {
  if (dim < 1) throw std::invalid_argument("EmpiricalMeasure: dim must be >= 1");
  if (points.empty() || points.size() % dim != 0)
    throw std::invalid_argument("EmpiricalMeasure: point array size must be a nonzero multiple of dim");
}

double EmpiricalMeasure::moment(double p) const {
  if (!(p > 0.0)) throw std::invalid_argument("moment: order must be positive");
  ExactSum acc;
  const int n = size();
  for (int i = 0; i < n; ++i) {
    double sq = 0.0;
    for (double c : point(i)) sq += c * c;
    acc.add(std::pow(std::sqrt(sq), p));
  }
  return acc.round() / n;
}

double EmpiricalMeasure::mean() const {
  ExactSum acc;
  const int n = size();
  for (int i = 0; i < n; ++i) acc.add(point(i)[0]);
  return acc.round() / n;
}

EmpiricalMeasure measure_from_scalars(std::span<const double> values) {
  return EmpiricalMeasure(1, std::vector<double>(values.begin(), values.end()));
}

EmpiricalMeasure PathCloud::slice(int node) const {
  if (node < 0 || node >= grid.node_count()) throw std::invalid_argument("slice: node out of range");
  std::vector<double> pts(static_cast<std::size_t>(size) * dim);
  for (int i = 0; i < size; ++i)
    for (int c = 0; c < dim; ++c) pts[static_cast<std::size_t>(i) * dim + c] = value(i, node, c);
  return EmpiricalMeasure(dim, std::move(pts));
}

}  // namespace chaoslab
