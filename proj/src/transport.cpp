#include "chaoslab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "chaoslab/exact_sum.hpp"

namespace chaoslab {
namespace {

void check_order(double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("wasserstein: order p must be in [1,2]");
}

// |gap|^p without pow() for the common orders, so 1D and assignment routes
// produce identical costs.
inline double abs_pow(double gap, double p) {
  const double a = std::fabs(gap);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

inline double root_p(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return std::sqrt(x);
  return std::pow(x, 1.0 / p);
}

double euclid(std::span<const double> x, std::span<const double> y) {
  double sq = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double gap = x[c] - y[c];
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

// Minimum-cost perfect matching on a dense n x n cost matrix via successive
// shortest augmenting paths with dual potentials.  Returns row -> column.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> matched_row(n + 1, 0);  // column j -> row (1-based; 0 = free)
  std::vector<int> way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (int i = 1; i <= n; ++i) {
    matched_row[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = matched_row[j0];
      double delta = kInf;
      int j1 = -1;
      const double* row = cost.data() + static_cast<std::size_t>(i0 - 1) * n;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[matched_row[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (matched_row[j0] != 0);
    do {
      const int j1 = way[j0];
      matched_row[j0] = matched_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j)
    if (matched_row[j] != 0) row_to_col[matched_row[j] - 1] = j - 1;
  return row_to_col;
}

void check_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim != b.dim) throw std::invalid_argument("wasserstein: dimension mismatch");
  if (a.size() != b.size())
    throw std::invalid_argument("wasserstein: clouds must have equal support size");
  if (a.size() == 0) throw std::invalid_argument("wasserstein: empty cloud");
}

double value_from_matching(const std::vector<double>& cost, const std::vector<int>& row_to_col,
                           int n, double p) {
  // Exact order-free sum of matched pair costs; makes the value bit-identical
  // for (a,b) and (b,a).
  ExactSum acc;
  for (int i = 0; i < n; ++i) acc.add(cost[static_cast<std::size_t>(i) * n + row_to_col[i]]);
  return root_p(acc.round() / n, p);
}

}  // namespace

double wasserstein_1d(std::span<const double> a, std::span<const double> b, double p) {
  check_order(p);
  if (a.size() != b.size())
    throw std::invalid_argument("wasserstein_1d: samples must have equal size");
  if (a.empty()) throw std::invalid_argument("wasserstein_1d: empty sample");

  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  ExactSum acc;
  for (std::size_t i = 0; i < sa.size(); ++i) acc.add(abs_pow(sa[i] - sb[i], p));
  return root_p(acc.round() / static_cast<double>(sa.size()), p);
}

double wasserstein_assignment(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  check_order(p);
  check_pair(a, b);
  const int n = a.size();
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i) * n + j] =
          (a.dim == 1) ? abs_pow(a.points[i] - b.points[j], p)
                       : std::pow(euclid(a.point(i), b.point(j)), p);
  const auto row_to_col = solve_assignment(cost, n);
  return value_from_matching(cost, row_to_col, n, p);
}

double wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  check_pair(a, b);
  if (a.dim == 1) return wasserstein_1d(a.points, b.points, p);
  return wasserstein_assignment(a, b, p);
}

SinkhornResult wasserstein_entropic(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                                    double reg, int max_iters, double tol) {
  check_order(p);
  check_pair(a, b);
  if (!(reg > 0.0)) throw std::invalid_argument("wasserstein_entropic: reg must be positive");
  const int n = a.size();

  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i) * n + j] =
          (a.dim == 1) ? abs_pow(a.points[i] - b.points[j], p)
                       : std::pow(euclid(a.point(i), b.point(j)), p);

  // Log-domain Sinkhorn for uniform marginals 1/n.
  const double log_w = -std::log(static_cast<double>(n));
  std::vector<double> f(n, 0.0), g(n, 0.0), scratch(n);
  auto logsumexp = [&](const std::vector<double>& xs) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s);
  };

  SinkhornResult result;
  for (int it = 1; it <= max_iters; ++it) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        scratch[j] = (g[j] - cost[static_cast<std::size_t>(i) * n + j]) / reg + log_w;
      f[i] = -reg * logsumexp(scratch);
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i)
        scratch[i] = (f[i] - cost[static_cast<std::size_t>(i) * n + j]) / reg + log_w;
      g[j] = -reg * logsumexp(scratch);
    }
    // After a g-update, columns are exact; check row marginal violation.
    double violation = 0.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j)
        row += std::exp((f[i] + g[j] - cost[static_cast<std::size_t>(i) * n + j]) / reg +
                        2.0 * log_w);
      violation = std::max(violation, std::fabs(row - 1.0 / n));
    }
    result.iterations = it;
    if (violation < tol) {
      result.converged = true;
      break;
    }
  }

  // Round the plan onto the transport polytope (row/column rescale plus a
  // rank-one correction), so the sharp cost upper-bounds the exact distance
  // even when the iteration stopped early.
  std::vector<double> plan(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      plan[static_cast<std::size_t>(i) * n + j] =
          std::exp((f[i] + g[j] - cost[static_cast<std::size_t>(i) * n + j]) / reg + 2.0 * log_w);

  const double target = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += plan[static_cast<std::size_t>(i) * n + j];
    const double scale = (row > target) ? target / row : 1.0;
    for (int j = 0; j < n; ++j) plan[static_cast<std::size_t>(i) * n + j] *= scale;
  }
  std::vector<double> col(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) col[j] += plan[static_cast<std::size_t>(i) * n + j];
  for (int j = 0; j < n; ++j) {
    const double scale = (col[j] > target) ? target / col[j] : 1.0;
    for (int i = 0; i < n; ++i) plan[static_cast<std::size_t>(i) * n + j] *= scale;
  }
  std::vector<double> row_err(n, 0.0), col_err(n, 0.0);
  double total_err = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += plan[static_cast<std::size_t>(i) * n + j];
    row_err[i] = target - row;
    total_err += row_err[i];
  }
  std::fill(col.begin(), col.end(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) col[j] += plan[static_cast<std::size_t>(i) * n + j];
  for (int j = 0; j < n; ++j) col_err[j] = target - col[j];
  if (total_err > 0.0)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        plan[static_cast<std::size_t>(i) * n + j] += row_err[i] * col_err[j] / total_err;

  ExactSum sharp;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      sharp.add(plan[static_cast<std::size_t>(i) * n + j] *
                cost[static_cast<std::size_t>(i) * n + j]);
  result.value = root_p(sharp.round(), p);
  return result;
}

double path_wasserstein_supnorm(const PathCloud& a, const PathCloud& b, double p) {
  check_order(p);
  if (a.dim != b.dim) throw std::invalid_argument("path_wasserstein: dimension mismatch");
  if (a.size != b.size)
    throw std::invalid_argument("path_wasserstein: clouds must have equal size");
  if (a.size == 0) throw std::invalid_argument("path_wasserstein: empty cloud");
  if (a.grid.node_count() != b.grid.node_count())
    throw std::invalid_argument("path_wasserstein: grids must have equal node count");

  const int n = a.size;
  const int nodes = a.grid.node_count();
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double sup = 0.0;
      for (int k = 0; k < nodes; ++k) {
        double gap;
        if (a.dim == 1) {
          gap = std::fabs(a.value(i, k) - b.value(j, k));
        } else {
          double sq = 0.0;
          for (int c = 0; c < a.dim; ++c) {
            const double d = a.value(i, k, c) - b.value(j, k, c);
            sq += d * d;
          }
          gap = std::sqrt(sq);
        }
        sup = std::max(sup, gap);
      }
      cost[static_cast<std::size_t>(i) * n + j] = abs_pow(sup, p);
    }
  const auto row_to_col = solve_assignment(cost, n);
  return value_from_matching(cost, row_to_col, n, p);
}

}  // namespace chaoslab
