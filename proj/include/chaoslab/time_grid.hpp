#pragma once

#include <vector>

namespace chaoslab {

// Uniform grid 0 = t_0 < t_1 < ... < t_N = T with dt = T/N.
struct TimeGrid {
  double horizon = 1.0;
  int steps = 64;
  double dt = 1.0 / 64.0;
  std::vector<double> nodes;  // size steps + 1, nodes.front() == 0, nodes.back() == horizon

  int node_count() const { return steps + 1; }
};

// Validates T > 0 and N >= 1.
TimeGrid make_grid(double horizon, int steps);

// Index of the grid node closest to t (ties toward the earlier node).
int nearest_node(const TimeGrid& grid, double t);

}  // namespace chaoslab
