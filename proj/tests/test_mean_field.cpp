#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "chaoslab/bsde.hpp"
#include "chaoslab/brownian.hpp"
#include "chaoslab/exact_sum.hpp"
#include "chaoslab/mean_field.hpp"
#include "chaoslab/transport.hpp"

using namespace chaoslab;

namespace {

// Copies a bundle with particle streams rearranged: particle i of the result
// carries the increments of particle perm[i] of the source.
BrownianBundle permute_particles(const BrownianBundle& src, const std::vector<int>& perm) {
  BrownianBundle out = src;
  const std::size_t block =
      static_cast<std::size_t>(src.grid.steps) * static_cast<std::size_t>(src.dimension);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const double* from = src.increments.data() + static_cast<std::size_t>(perm[i]) * block;
    std::copy(from, from + block, out.increments.data() + i * block);
  }
  return out;
}

}  // namespace

TEST_CASE("null interaction matches the decoupled solver bit-exactly") {
  const TimeGrid grid = make_grid(1.0, 8);
  const BrownianBundle paths = sample_brownian(404, 0, 8, 1, grid);
  const TerminalSpec terminal = make_terminal_affine(0.0, 1.0);

  SchemeParams params;
  params.group_size = 4;  // two groups of four, same regression pool
  const SystemSolution coupled =
      solve_linear_interaction(make_null_interaction(), terminal, paths, BasisSpec{}, params);

  const BsdeSolution plain = solve_backward(
      interaction_driver(make_null_interaction()), terminal, paths, BasisSpec{});

  REQUIRE(coupled.core.y.size() == plain.y.size());
  for (std::size_t j = 0; j < plain.y.size(); ++j) {
    CHECK(coupled.core.y[j] == plain.y[j]);
  }
}

TEST_CASE("particle permutations permute trajectories exactly") {
  const TimeGrid grid = make_grid(1.0, 8);
  const int n = 4, groups = 2;
  const BrownianBundle paths = sample_brownian(777, 0, n * groups, 1, grid);
  const InteractionSpec spec = make_mean_linear(0.8);
  const TerminalSpec terminal = make_terminal_affine(1.0, 0.5);
  BasisSpec basis;
  basis.include_group_mean = true;

  SchemeParams params;
  params.group_size = n;
  const SystemSolution base = solve_interacting(spec, terminal, paths, basis, params);

  SUBCASE("within-group permutation") {
    const std::vector<int> perm = {2, 0, 3, 1, 5, 7, 4, 6};
    const SystemSolution permuted =
        solve_interacting(spec, terminal, permute_particles(paths, perm), basis, params);
    for (int k = 0; k <= grid.steps; ++k) {
      for (std::size_t i = 0; i < perm.size(); ++i) {
        CHECK(permuted.core.y_at(k, i) == base.core.y_at(k, static_cast<std::size_t>(perm[i])));
      }
    }
  }
  SUBCASE("swapping whole groups") {
    const std::vector<int> perm = {4, 5, 6, 7, 0, 1, 2, 3};
    const SystemSolution permuted =
        solve_interacting(spec, terminal, permute_particles(paths, perm), basis, params);
    for (int k = 0; k <= grid.steps; ++k) {
      for (std::size_t i = 0; i < perm.size(); ++i) {
        CHECK(permuted.core.y_at(k, i) == base.core.y_at(k, static_cast<std::size_t>(perm[i])));
      }
    }
  }
}

TEST_CASE("coupled and limit solves share terminal slices on common paths") {
  const TimeGrid grid = make_grid(1.0, 8);
  const BrownianBundle paths = sample_brownian(99, 2, 8, 1, grid);
  const InteractionSpec spec = make_mean_linear(0.5);
  const TerminalSpec terminal = make_terminal_affine(1.0, 0.5);

  const SystemSolution system = solve_interacting(spec, terminal, paths, BasisSpec{});
  const MkvSolution limit = solve_mkv(spec, terminal, paths, BasisSpec{});

  const auto sys_slice = system.core.y_slice(static_cast<std::size_t>(grid.steps));
  const auto mkv_slice = limit.core.y_slice(static_cast<std::size_t>(grid.steps));
  for (std::size_t i = 0; i < sys_slice.size(); ++i) {
    CHECK(sys_slice[i] == mkv_slice[i]);
  }
}

TEST_CASE("single-particle mean interaction reduces to the linear equation") {
  // n = 1: mean(mu) = own value, so F = y and y_0 = e for G = 1.
  const TimeGrid grid = make_grid(1.0, 64);
  const BrownianBundle paths = sample_brownian(11, 0, 32, 1, grid);
  const InteractionSpec spec = make_mean_linear(1.0);

  SchemeParams params;
  params.group_size = 1;
  const SystemSolution sol =
      solve_interacting(spec, make_terminal_constant(1.0), paths, BasisSpec{}, params);
  ExactSum acc;
  acc.add(sol.core.y_slice(0));
  const double mean0 = acc.round() / paths.particles;
  CHECK(std::abs(mean0 - 2.718281828459045) < 1e-3);
}

TEST_CASE("mean flow of the limit equation tracks the exponential oracle") {
  const double alpha = 0.5;
  const TimeGrid grid = make_grid(1.0, 32);
  const BrownianBundle paths = sample_brownian(20260823, 1, 1024, 1, grid);
  MkvParams params;
  params.reference_mean = [alpha, &grid](double t) {
    return std::exp(alpha * (grid.horizon - t));
  };
  const MkvSolution limit = solve_mkv(make_mean_linear(alpha),
                                      make_terminal_affine(1.0, 0.5), paths,
                                      BasisSpec{}, params);
  CHECK(limit.picard.converged);
  CHECK(limit.picard.iterations <= 10);
  for (int k = 0; k <= grid.steps; ++k) {
    CHECK(std::abs(limit.mean_at(k) - params.reference_mean(grid.nodes[k])) < 0.08);
  }
}

TEST_CASE("mean reversion keeps the scenario mean flat") {
  const TimeGrid grid = make_grid(1.0, 32);
  const BrownianBundle paths = sample_brownian(606, 0, 1024, 1, grid);
  const MkvSolution limit = solve_mkv(make_mean_reversion(1.0),
                                      make_terminal_affine(1.0, 0.5), paths, BasisSpec{});
  CHECK(limit.picard.converged);
  for (int k = 0; k <= grid.steps; ++k) {
    CHECK(std::abs(limit.mean_at(k) - 1.0) < 0.08);
  }
}

TEST_CASE("constant terminal with no drift gives a frozen point-mass flow") {
  const double c = 1.5;
  const TimeGrid grid = make_grid(1.0, 16);
  const BrownianBundle paths = sample_brownian(4, 0, 256, 1, grid);
  const MkvSolution limit = solve_mkv(make_null_interaction(),
                                      make_terminal_constant(c), paths, BasisSpec{});
  const EmpiricalMeasure point = measure_from_scalars(std::vector<double>(256, c));
  for (int k = 0; k <= grid.steps; ++k) {
    CHECK(wasserstein(limit.law_flow[k], point, 2.0) == 0.0);
  }
}

TEST_CASE("pair-kernel mean interaction coincides with the measure form") {
  // f(y1, y2) = y2 with outer alpha*a equals F = alpha*mean(mu) exactly.
  const TimeGrid grid = make_grid(1.0, 16);
  const BrownianBundle paths = sample_brownian(1234, 0, 64, 1, grid);
  const TerminalSpec terminal = make_terminal_affine(1.0, 0.5);
  BasisSpec basis;
  basis.include_group_mean = true;

  SchemeParams params;
  params.group_size = 16;
  const SystemSolution via_kernel =
      solve_interacting(make_mean_kernel(0.5), terminal, paths, basis, params);
  const SystemSolution via_measure =
      solve_interacting(make_mean_linear(0.5), terminal, paths, basis, params);
  for (std::size_t j = 0; j < via_kernel.core.y.size(); ++j) {
    CHECK(via_kernel.core.y[j] == via_measure.core.y[j]);
  }
}

TEST_CASE("convolution interaction conserves the group mean") {
  // f(y1, y2) = y2 - y1 averages to zero over each group, so the group mean
  // stays at its terminal value up to floating-point roundoff.
  const TimeGrid grid = make_grid(1.0, 32);
  const int n = 32;
  const BrownianBundle paths = sample_brownian(55, 0, n, 1, grid);
  const TerminalSpec terminal = make_terminal_affine(1.0, 0.5);
  const SystemSolution sol =
      solve_interacting(make_convolution(1.0), terminal, paths, BasisSpec{});

  ExactSum acc;
  acc.add(sol.core.y_slice(static_cast<std::size_t>(grid.steps)));
  const double terminal_mean = acc.round() / n;
  for (int k = 0; k <= grid.steps; ++k) {
    acc.reset();
    acc.add(sol.core.y_slice(static_cast<std::size_t>(k)));
    CHECK(std::abs(acc.round() / n - terminal_mean) < 1e-9);
  }
}

TEST_CASE("mean-flow error shrinks when the cloud grows") {
  const double alpha = 0.5;
  const TimeGrid grid = make_grid(1.0, 16);
  const TerminalSpec terminal = make_terminal_affine(1.0, 0.5);
  auto max_gap = [&](int cloud) {
    const BrownianBundle paths = sample_brownian(808, 3, cloud, 1, grid);
    const MkvSolution limit =
        solve_mkv(make_mean_linear(alpha), terminal, paths, BasisSpec{});
    double worst = 0.0;
    for (int k = 0; k <= grid.steps; ++k) {
      const double want = std::exp(alpha * (grid.horizon - grid.nodes[k]));
      worst = std::max(worst, std::abs(limit.mean_at(k) - want));
    }
    return worst;
  };
  // Quadrupling the cloud roughly halves the Monte Carlo error; assert the
  // weaker monotone statement on a frozen seed.
  CHECK(max_gap(4096) < max_gap(256));
}

TEST_CASE("interaction solvers validate their inputs") {
  const TimeGrid grid = make_grid(1.0, 4);
  const BrownianBundle paths = sample_brownian(3, 0, 6, 1, grid);
  CHECK_THROWS_AS(solve_linear_interaction(make_mean_linear(1.0),
                                           make_terminal_constant(1.0), paths,
                                           BasisSpec{}),
                  std::invalid_argument);
  SchemeParams params;
  params.group_size = 4;  // does not divide 6
  CHECK_THROWS_AS(solve_interacting(make_mean_linear(1.0), make_terminal_constant(1.0),
                                    paths, BasisSpec{}, params),
                  std::invalid_argument);
}
