#include "chaoslab/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "chaoslab/exact_sum.hpp"
#include "chaoslab/transport.hpp"

namespace chaoslab {

namespace detail {

std::vector<double> accumulate_states(const BrownianBundle& paths) {
  const std::size_t n = static_cast<std::size_t>(paths.particles);
  const std::size_t steps = static_cast<std::size_t>(paths.grid.steps);
  const std::size_t d = static_cast<std::size_t>(paths.dimension);
  const std::size_t nodes = steps + 1;
  std::vector<double> states(n * nodes * d);
  std::vector<ExactSum> acc(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      acc[c].reset();
      states[(i * nodes) * d + c] = 0.0;
    }
    for (std::size_t k = 1; k <= steps; ++k) {
      for (std::size_t c = 0; c < d; ++c) {
        acc[c].add(paths.increments[((i * steps) + (k - 1)) * d + c]);
        states[(i * nodes + k) * d + c] = acc[c].round();
      }
    }
  }
  return states;
}

}  // namespace detail

namespace {

using KernelFn = std::function<double(double, double)>;

LawStats stats_from_points(std::span<const double> values, double t,
                           const KernelFn& kernel) {
  LawStats s;
  ExactSum acc;
  for (double v : values) acc.add(v);
  const double n = static_cast<double>(values.size());
  s.mean = acc.round() / n;
  acc.reset();
  for (double v : values) acc.add(v * v);
  s.moment2 = acc.round() / n;
  if (kernel) {
    acc.reset();
    for (double v : values) acc.add(kernel(t, v));
    s.kernel_mean = acc.round() / n;
  }
  return s;
}

LawStats stats_from_measure(const EmpiricalMeasure& mu, double t,
                            const KernelFn& kernel) {
  if (mu.dim != 1) {
    throw std::invalid_argument("law flow measures must be scalar");
  }
  return stats_from_points({mu.points.data(), mu.points.size()}, t, kernel);
}

}  // namespace

BsdeSolution solve_backward(const DriverSpec& driver, const TerminalSpec& terminal,
                            const BrownianBundle& paths, const BasisSpec& basis,
                            const SolveOptions& options) {
  if (!driver.evaluate) throw std::invalid_argument("driver.evaluate not set");
  if (!terminal.evaluate && !terminal.evaluate_with_law) {
    throw std::invalid_argument("terminal.evaluate not set");
  }
  if (paths.particles <= 0) throw std::invalid_argument("empty path bundle");
  if (basis.degree < 0 || basis.group_degree < 0) {
    throw std::invalid_argument("basis degrees must be nonnegative");
  }

  const std::size_t samples = static_cast<std::size_t>(paths.particles);
  const std::size_t steps = static_cast<std::size_t>(paths.grid.steps);
  const std::size_t nodes = steps + 1;
  const std::size_t d = static_cast<std::size_t>(paths.dimension);
  const double dt = paths.grid.dt;

  const bool grouped = options.group_size > 0;
  const std::size_t group = grouped ? options.group_size : samples;
  if (grouped && samples % group != 0) {
    throw std::invalid_argument("group size must divide the particle count");
  }
  if (grouped && options.law_flow != nullptr) {
    throw std::invalid_argument("grouped solves derive the law from the particles; no frozen flow allowed");
  }
  if (driver.depends_on_law && !grouped) {
    if (options.law_flow == nullptr) {
      throw std::invalid_argument("law flow required: the driver depends on the law and no groups are formed");
    }
    if (options.law_flow->size() != nodes) {
      throw std::invalid_argument("law flow must hold one measure per grid node");
    }
  }
  const std::size_t group_count = samples / group;

  std::vector<double> own_states;
  if (options.state_paths == nullptr) {
    own_states = detail::accumulate_states(paths);
  } else if (options.state_paths->size() != samples * nodes * d) {
    throw std::invalid_argument("state paths must hold one state per particle and node");
  }
  const std::vector<double>& states =
      options.state_paths != nullptr ? *options.state_paths : own_states;
  auto state_at = [&](std::size_t i, std::size_t k) -> std::span<const double> {
    return {states.data() + (i * nodes + k) * d, d};
  };

  BsdeSolution out;
  out.grid = paths.grid;
  out.scenarios = samples;
  out.group_size = group;
  out.dimension = paths.dimension;
  out.y.assign(nodes * samples, 0.0);
  out.z.assign(steps * samples * d, 0.0);

  if (terminal.evaluate_with_law) {
    if (d != 1) {
      throw std::invalid_argument("measure-coupled terminals need scalar states");
    }
    std::vector<double> terminal_states(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      terminal_states[i] = states[(i * nodes + steps)];
    }
    const std::size_t law_groups = grouped ? group_count : 1;
    const std::size_t law_span = grouped ? group : samples;
    std::vector<LawStats> terminal_law(law_groups);
    for (std::size_t g = 0; g < law_groups; ++g) {
      terminal_law[g] = stats_from_points(
          {terminal_states.data() + g * law_span, law_span}, paths.grid.horizon, nullptr);
    }
    for (std::size_t i = 0; i < samples; ++i) {
      const double g = terminal.evaluate_with_law(
          paths.grid, {states.data() + i * nodes * d, nodes * d},
          terminal_law[grouped ? i / group : 0]);
      if (!std::isfinite(g)) throw std::runtime_error("terminal functional produced a non-finite value");
      out.y[steps * samples + i] = g;
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i) {
      const double g = terminal.evaluate(paths.grid, {states.data() + i * nodes * d, nodes * d});
      if (!std::isfinite(g)) throw std::runtime_error("terminal functional produced a non-finite value");
      out.y[steps * samples + i] = g;
    }
  }

  // Feature layout: own-state monomials, then (grouped runs) group-mean
  // monomials and optional own x group-mean products.
  const bool use_group =
      grouped && basis.include_group_mean && group >= 2;
  const std::size_t own_cols = d * static_cast<std::size_t>(basis.degree);
  const std::size_t mean_cols = use_group ? d * static_cast<std::size_t>(basis.group_degree) : 0;
  const std::size_t cross_cols = (use_group && basis.include_cross) ? d : 0;
  const std::size_t q = own_cols + mean_cols + cross_cols;

  std::vector<double> design(samples * q);
  std::vector<double> yhat(samples), pred(samples), f_right(samples);
  std::vector<double> zhat(samples * d), targets(samples);
  std::vector<double> group_mean(group_count * d);
  std::vector<LawStats> law_right(grouped ? group_count : 1);
  std::vector<LawStats> law_left(grouped ? group_count : 1);
  const LawStats no_law{};

  out.diagnostics.reserve(steps);
  ExactSum acc;

  for (std::size_t k = steps; k-- > 0;) {
    const double t_left = paths.grid.nodes[k];
    const double t_right = paths.grid.nodes[k + 1];
    const std::span<const double> next_y{out.y.data() + (k + 1) * samples, samples};

    if (use_group) {
      for (std::size_t g = 0; g < group_count; ++g) {
        for (std::size_t c = 0; c < d; ++c) {
          acc.reset();
          for (std::size_t i = g * group; i < (g + 1) * group; ++i) {
            acc.add(states[(i * nodes + k) * d + c]);
          }
          group_mean[g * d + c] = acc.round() / static_cast<double>(group);
        }
      }
    }
    for (std::size_t i = 0; i < samples; ++i) {
      double* row = design.data() + i * q;
      std::size_t col = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const double x = states[(i * nodes + k) * d + c];
        double pw = 1.0;
        for (int deg = 0; deg < basis.degree; ++deg) {
          pw *= x;
          row[col++] = pw;
        }
      }
      if (use_group) {
        const double* gm = group_mean.data() + (i / group) * d;
        for (std::size_t c = 0; c < d; ++c) {
          double pw = 1.0;
          for (int deg = 0; deg < basis.group_degree; ++deg) {
            pw *= gm[c];
            row[col++] = pw;
          }
        }
        if (basis.include_cross) {
          for (std::size_t c = 0; c < d; ++c) {
            row[col++] = states[(i * nodes + k) * d + c] * gm[c];
          }
        }
      }
    }

    const RidgeFit fit_y = fit_ridge(design, q, next_y, options.regression);
    for (std::size_t i = 0; i < samples; ++i) {
      yhat[i] = fit_y.predict({design.data() + i * q, q});
    }
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t i = 0; i < samples; ++i) {
        targets[i] = next_y[i] * paths.increments[((i * steps) + k) * d + c];
      }
      const RidgeFit fit_z = fit_ridge(design, q, targets, options.regression);
      for (std::size_t i = 0; i < samples; ++i) {
        zhat[i * d + c] = fit_z.predict({design.data() + i * q, q}) / dt;
      }
    }

    if (driver.depends_on_law) {
      if (grouped) {
        for (std::size_t g = 0; g < group_count; ++g) {
          law_right[g] = stats_from_points(next_y.subspan(g * group, group),
                                           t_right, driver.law_kernel);
        }
      } else {
        law_right[0] =
            stats_from_measure((*options.law_flow)[k + 1], t_right, driver.law_kernel);
      }
    }
    for (std::size_t i = 0; i < samples; ++i) {
      const LawStats& law =
          driver.depends_on_law ? law_right[grouped ? i / group : 0] : no_law;
      f_right[i] = driver.evaluate(t_right, state_at(i, k + 1), yhat[i],
                                   {zhat.data() + i * d, d}, law);
      pred[i] = yhat[i] + dt * f_right[i];
    }
    if (driver.depends_on_law) {
      if (grouped) {
        for (std::size_t g = 0; g < group_count; ++g) {
          law_left[g] = stats_from_points(
              {pred.data() + g * group, group}, t_left, driver.law_kernel);
        }
      } else {
        law_left[0] =
            stats_from_measure((*options.law_flow)[k], t_left, driver.law_kernel);
      }
    }
    for (std::size_t i = 0; i < samples; ++i) {
      const LawStats& law =
          driver.depends_on_law ? law_left[grouped ? i / group : 0] : no_law;
      const double f_left = driver.evaluate(t_left, state_at(i, k), pred[i],
                                            {zhat.data() + i * d, d}, law);
      const double v = yhat[i] + 0.5 * dt * (f_right[i] + f_left);
      if (!std::isfinite(v)) throw std::runtime_error("backward recursion produced a non-finite value");
      out.y[k * samples + i] = v;
    }
    std::copy(zhat.begin(), zhat.end(), out.z.begin() + k * samples * d);

    StepDiagnostics diag;
    diag.node = static_cast<int>(k);
    diag.residual_rms = fit_y.residual_rms;
    diag.condition = fit_y.condition;
    diag.ridge_used = fit_y.ridge_used;
    diag.dropped_columns = fit_y.dropped_columns;
    diag.ill_conditioned = fit_y.ill_conditioned;
    acc.reset();
    for (std::size_t i = 0; i < samples; ++i) acc.add(zhat[i * d]);
    diag.z_mean = acc.round() / static_cast<double>(samples);
    acc.reset();
    for (std::size_t i = 0; i < samples; ++i) acc.add(zhat[i * d] * zhat[i * d]);
    diag.z_second_moment = acc.round() / static_cast<double>(samples);
    out.diagnostics.push_back(diag);
  }
  std::reverse(out.diagnostics.begin(), out.diagnostics.end());
  return out;
}

namespace {

std::vector<EmpiricalMeasure> flow_from_solution(const BsdeSolution& sol) {
  std::vector<EmpiricalMeasure> flow;
  const std::size_t nodes = static_cast<std::size_t>(sol.grid.node_count());
  flow.reserve(nodes);
  for (std::size_t k = 0; k < nodes; ++k) flow.push_back(measure_from_scalars(sol.y_slice(k)));
  return flow;
}

}  // namespace

std::tuple<BsdeSolution, std::vector<EmpiricalMeasure>, PicardLog> picard_iterate(
    const DriverSpec& driver, const TerminalSpec& terminal,
    const BrownianBundle& paths, const BasisSpec& basis,
    std::vector<EmpiricalMeasure> initial_flow, const PicardOptions& options) {
  if (options.tol <= 0.0) throw std::invalid_argument("picard tolerance must be positive");
  if (options.max_iters < 1) throw std::invalid_argument("picard needs at least one iteration");
  if (!terminal.evaluate) {
    throw std::invalid_argument("fixed-point solves need a measure-free terminal");
  }

  const std::size_t nodes = static_cast<std::size_t>(paths.grid.node_count());
  if (initial_flow.empty()) {
    // Start from the terminal empirical measure copied to every node.
    const std::vector<double> states = detail::accumulate_states(paths);
    const std::size_t stride = nodes * static_cast<std::size_t>(paths.dimension);
    std::vector<double> terminal_values(static_cast<std::size_t>(paths.particles));
    for (std::size_t i = 0; i < terminal_values.size(); ++i) {
      terminal_values[i] = terminal.evaluate(paths.grid, {states.data() + i * stride, stride});
    }
    const EmpiricalMeasure mu = measure_from_scalars(terminal_values);
    initial_flow.assign(nodes, mu);
  } else if (initial_flow.size() != nodes) {
    throw std::invalid_argument("initial law flow must hold one measure per grid node");
  }

  SolveOptions so;
  so.regression = options.regression;
  so.law_flow = &initial_flow;

  BsdeSolution sol = solve_backward(driver, terminal, paths, basis, so);
  std::vector<EmpiricalMeasure> flow = flow_from_solution(sol);
  PicardLog log;

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    so.law_flow = &flow;
    BsdeSolution next = solve_backward(driver, terminal, paths, basis, so);
    std::vector<EmpiricalMeasure> next_flow = flow_from_solution(next);
    double dist = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      dist = std::max(dist, wasserstein(flow[k], next_flow[k], 2.0));
    }
    sol = std::move(next);
    flow = std::move(next_flow);
    log.distances.push_back(dist);
    log.iterations = iter;
    if (dist < options.tol) {
      log.converged = true;
      break;
    }
  }
  return {std::move(sol), std::move(flow), std::move(log)};
}

}  // namespace chaoslab
