#pragma once

#include <span>
#include <vector>

#include "chaoslab/time_grid.hpp"

namespace chaoslab {

// Equal-weight empirical measure on R^m: n support points, weight 1/n each.
struct EmpiricalMeasure {
  int dim = 1;
  std::vector<double> points;  // n x dim, row-major

  EmpiricalMeasure() = default;
  EmpiricalMeasure(int dim_, std::vector<double> points_);

  int size() const { return dim == 0 ? 0 : static_cast<int>(points.size()) / dim; }

  std::span<const double> point(int i) const {
    return {points.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }

  // (1/n) * sum_i |x_i|^p with |.| the Euclidean norm.
  double moment(double p) const;

  // Mean of the first coordinate (exactly rounded).
  double mean() const;
};

EmpiricalMeasure measure_from_scalars(std::span<const double> values);

// n discrete trajectories on a common grid.
struct PathCloud {
  TimeGrid grid;
  int dim = 1;   // m
  int size = 0;  // n

  // Trajectory-major: ((i * (N+1)) + k) * dim + c.
  std::vector<double> values;

  double value(int i, int k, int c = 0) const {
    return values[(static_cast<std::size_t>(i) * grid.node_count() + k) * dim + c];
  }

  // Marginal empirical measure at a grid node.
  EmpiricalMeasure slice(int node) const;
};

}  // namespace chaoslab
