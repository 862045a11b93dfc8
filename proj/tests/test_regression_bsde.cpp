#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "chaoslab/bsde.hpp"
#include "chaoslab/brownian.hpp"
#include "chaoslab/mean_field.hpp"
#include "chaoslab/regression.hpp"

using namespace chaoslab;

namespace {

constexpr double kEuler = 2.718281828459045;

DriverSpec constant_driver(double c) {
  DriverSpec d;
  d.evaluate = [c](double, std::span<const double>, double, std::span<const double>,
                   const LawStats&) { return c; };
  return d;
}

DriverSpec linear_driver(double a) {
  DriverSpec d;
  d.evaluate = [a](double, std::span<const double>, double y, std::span<const double>,
                   const LawStats&) { return a * y; };
  d.lipschitz_y = std::abs(a);
  return d;
}

}  // namespace

TEST_CASE("ridge regression recovers exact affine relations") {
  // y = 2 + 3 x0 - x1, noiseless: the fit must be exact to solver precision.
  std::vector<double> rows, targets;
  for (int i = 0; i < 40; ++i) {
    const double x0 = 0.1 * i - 2.0;
    const double x1 = ((i * 7) % 11) * 0.3 - 1.5;
    rows.push_back(x0);
    rows.push_back(x1);
    targets.push_back(2.0 + 3.0 * x0 - x1);
  }
  const RidgeFit fit = fit_ridge(rows, 2, targets);
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit.coefficients[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(fit.coefficients[1] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(fit.residual_rms < 1e-8);
  CHECK_FALSE(fit.ill_conditioned);
}

TEST_CASE("ridge regression drops constant columns and keeps the mean exact") {
  std::vector<double> rows, targets;
  for (int i = 0; i < 16; ++i) {
    rows.push_back(4.5);  // constant column
    rows.push_back(static_cast<double>(i));
    targets.push_back(1.0 + 0.5 * i);
  }
  const RidgeFit fit = fit_ridge(rows, 2, targets);
  CHECK(fit.dropped_columns == 1);
  CHECK(fit.coefficients[0] == 0.0);
  CHECK(fit.coefficients[1] == doctest::Approx(0.5).epsilon(1e-6));

  // Fully degenerate design: projection = sample mean, exactly.
  std::vector<double> flat(16, 7.0);
  const RidgeFit mean_only = fit_ridge(flat, 1, targets);
  CHECK(mean_only.dropped_columns == 1);
  double m = 0.0;
  for (double t : targets) m += t;
  m /= 16.0;
  CHECK(mean_only.predict(std::vector<double>{3.0}) == doctest::Approx(m).epsilon(1e-12));
}

TEST_CASE("ridge regression is invariant under sample reordering") {
  std::vector<double> rows, targets;
  for (int i = 0; i < 101; ++i) {
    const double x = std::sin(0.37 * i) * 2.0;
    rows.push_back(x);
    rows.push_back(x * x);
    targets.push_back(0.3 + 1.7 * x - 0.4 * x * x + std::sin(5.0 * i));
  }
  const RidgeFit a = fit_ridge(rows, 2, targets);
  // Reverse the sample order.
  std::vector<double> rrows, rtargets;
  for (int i = 100; i >= 0; --i) {
    rrows.push_back(rows[2 * i]);
    rrows.push_back(rows[2 * i + 1]);
    rtargets.push_back(targets[i]);
  }
  const RidgeFit b = fit_ridge(rrows, 2, rtargets);
  CHECK(a.intercept == b.intercept);
  CHECK(a.coefficients[0] == b.coefficients[0]);
  CHECK(a.coefficients[1] == b.coefficients[1]);
}

TEST_CASE("ill-conditioned designs trigger the ridge fallback") {
  // Two nearly identical columns.
  std::vector<double> rows, targets;
  for (int i = 0; i < 64; ++i) {
    const double x = 0.01 * i;
    rows.push_back(x);
    rows.push_back(x * (1.0 + 1e-13));
    targets.push_back(x);
  }
  const RidgeFit fit = fit_ridge(rows, 2, targets);
  CHECK(fit.ill_conditioned);
  CHECK(fit.ridge_used == 1e-6);
  CHECK(std::isfinite(fit.predict(std::vector<double>{0.3, 0.3})));
}

TEST_CASE("deterministic drift integrates exactly across samples") {
  // F = c, G = 0: y(t_k) = c (T - t_k), identical in every scenario.
  const double c = 0.7;
  const TimeGrid grid = make_grid(1.0, 16);
  const BrownianBundle paths = sample_brownian(99, 0, 32, 1, grid);
  const BsdeSolution sol =
      solve_backward(constant_driver(c), make_terminal_constant(0.0), paths, BasisSpec{});
  for (int k = 0; k <= grid.steps; ++k) {
    const double want = c * (grid.horizon - grid.nodes[k]);
    const auto slice = sol.y_slice(k);
    for (double v : slice) {
      CHECK(v == doctest::Approx(want).epsilon(1e-12));
      CHECK(v == slice[0]);  // no cross-scenario noise at all
    }
  }
}

TEST_CASE("linear drift reaches the exponential oracle") {
  // F(y) = y, G = 1, T = 1: y_0 = e up to the time-stepping error.
  const TimeGrid grid = make_grid(1.0, 64);
  const BrownianBundle paths = sample_brownian(7, 0, 512, 1, grid);
  const BsdeSolution sol =
      solve_backward(linear_driver(1.0), make_terminal_constant(1.0), paths, BasisSpec{});
  CHECK(std::abs(sol.y_at(0, 0) - kEuler) < 2e-4);

  // Scheme consistency: the node-0 error shrinks monotonically as N doubles.
  double prev = 1.0;
  for (int steps : {8, 16, 32, 64}) {
    const TimeGrid g = make_grid(1.0, steps);
    const BrownianBundle p = sample_brownian(7, 0, 64, 1, g);
    const BsdeSolution s =
        solve_backward(linear_driver(1.0), make_terminal_constant(1.0), p, BasisSpec{});
    const double err = std::abs(s.y_at(0, 0) - kEuler);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("terminal slice equals the terminal functional bit-exactly") {
  const TimeGrid grid = make_grid(1.0, 12);
  const BrownianBundle paths = sample_brownian(123, 5, 40, 2, grid);
  const TerminalSpec terminal = make_terminal_affine(0.25, 2.0, 1);
  const BsdeSolution sol =
      solve_backward(constant_driver(0.3), terminal, paths, BasisSpec{});
  for (int i = 0; i < paths.particles; ++i) {
    const double w = paths.value_at(i, grid.steps, 1);
    CHECK(sol.y_at(static_cast<std::size_t>(grid.steps), i) == 0.25 + 2.0 * w);
  }
}

TEST_CASE("martingale terminal reproduces the Brownian path and unit z") {
  // F = 0, G = W_T: y(t_k) = W(t_k) and z = 1.
  const TimeGrid grid = make_grid(1.0, 16);
  const BrownianBundle paths = sample_brownian(2024, 0, 4096, 1, grid);
  const BsdeSolution sol = solve_backward(
      constant_driver(0.0), make_terminal_affine(0.0, 1.0), paths, BasisSpec{});

  for (int k = 0; k <= grid.steps; ++k) {
    double ss = 0.0;
    for (int i = 0; i < paths.particles; ++i) {
      const double gap = sol.y_at(k, i) - paths.value_at(i, k);
      ss += gap * gap;
    }
    const double rms = std::sqrt(ss / paths.particles);
    CHECK(rms < 0.08);
  }
  // The z estimate averages to 1 within its sampling error at every step.
  for (const StepDiagnostics& diag : sol.diagnostics) {
    CHECK(std::abs(diag.z_mean - 1.0) < 0.15);
  }
}

TEST_CASE("solver validates its law-flow contract") {
  const TimeGrid grid = make_grid(1.0, 8);
  const BrownianBundle paths = sample_brownian(1, 0, 16, 1, grid);
  DriverSpec needs_law;
  needs_law.evaluate = [](double, std::span<const double>, double,
                          std::span<const double>, const LawStats& law) {
    return law.mean;
  };
  needs_law.depends_on_law = true;
  CHECK_THROWS_AS(solve_backward(needs_law, make_terminal_constant(1.0), paths,
                                 BasisSpec{}),
                  std::invalid_argument);

  std::vector<EmpiricalMeasure> short_flow(3, measure_from_scalars(std::vector<double>{1.0}));
  SolveOptions options;
  options.law_flow = &short_flow;
  CHECK_THROWS_AS(solve_backward(needs_law, make_terminal_constant(1.0), paths,
                                 BasisSpec{}, options),
                  std::invalid_argument);
}

TEST_CASE("picard iteration solves the mean-interaction fixed point") {
  // F = alpha mean(mu), G = g0 + spread W_T: E[Y_t] = g0 exp(alpha (T - t)).
  const double alpha = 0.5;
  const TimeGrid grid = make_grid(1.0, 32);
  const BrownianBundle paths = sample_brownian(31337, 0, 1024, 1, grid);
  const InteractionSpec spec = make_mean_linear(alpha);
  const TerminalSpec terminal = make_terminal_affine(1.0, 0.5);

  auto [sol, flow, log] = picard_iterate(interaction_driver(spec), terminal, paths,
                                         BasisSpec{}, {});
  CHECK(log.converged);
  CHECK(log.iterations <= 10);
  // Distances are recorded once per correction pass.
  CHECK(static_cast<int>(log.distances.size()) == log.iterations);

  for (int k = 0; k <= grid.steps; ++k) {
    const double want = std::exp(alpha * (grid.horizon - grid.nodes[k]));
    CHECK(std::abs(flow[k].mean() - want) < 0.08);
  }
}

TEST_CASE("law-independent drivers converge in exactly one picard pass") {
  const TimeGrid grid = make_grid(1.0, 8);
  const BrownianBundle paths = sample_brownian(5, 0, 256, 1, grid);
  auto [sol, flow, log] = picard_iterate(linear_driver(1.0), make_terminal_constant(1.0),
                                         paths, BasisSpec{}, {});
  CHECK(log.converged);
  CHECK(log.iterations == 1);
  CHECK(log.distances[0] == 0.0);
}
