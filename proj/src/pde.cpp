#include "chaoslab/pde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chaoslab/exact_sum.hpp"
#include "chaoslab/normal.hpp"

namespace chaoslab {

namespace {

// Reference-side initial draws live in the upper half of the 24-bit index
// space so a cloud never shares draws with a system replication.
constexpr std::uint32_t kReferenceDrawOffset = 0x00800000u;

std::function<double(double)> standard_normal_quantile() {
  return [](double u) { return inverse_normal_cdf(u); };
}

DriverSpec zero_driver() {
  DriverSpec driver;
  driver.evaluate = [](double, std::span<const double>, double,
                       std::span<const double>, const LawStats&) { return 0.0; };
  return driver;
}

DriverSpec linear_driver(double rate) {
  DriverSpec driver;
  driver.evaluate = [rate](double, std::span<const double>, double y,
                           std::span<const double>, const LawStats&) {
    return rate * y;
  };
  driver.lipschitz_y = std::abs(rate);
  driver.growth_bound = std::abs(rate);
  return driver;
}

double coordinate_sum(std::span<const double> x) {
  double out = 0.0;
  for (double v : x) out += v;
  return out;
}

std::vector<double> draw_initial(const PdeScenario& scenario,
                                 const BrownianBundle& bundle,
                                 std::uint32_t draw_index) {
  if (!scenario.initial_quantile) {
    throw std::invalid_argument("pde scenario: initial law sampler not set");
  }
  const std::size_t count =
      static_cast<std::size_t>(bundle.particles) * static_cast<std::size_t>(bundle.dimension);
  const UniformStream stream(
      bundle.seed, replication_tag(StreamPurpose::initial_draws, draw_index));
  std::vector<double> initial(count);
  for (std::size_t j = 0; j < count; ++j) {
    initial[j] = scenario.initial_quantile(stream.uniform(j));
  }
  return initial;
}

TerminalSpec measure_terminal(const PdeScenario& scenario) {
  if (!scenario.terminal) {
    throw std::invalid_argument("pde scenario: terminal map not set");
  }
  const auto map = scenario.terminal;
  const int d = scenario.dimension;
  TerminalSpec term;
  term.evaluate_with_law = [map, d](const TimeGrid&, std::span<const double> path,
                                    const LawStats& law) {
    return map(path.last(static_cast<std::size_t>(d)), law);
  };
  term.moment_order = scenario.moment_order;
  return term;
}

}  // namespace

PdeScenario make_pde_affine(double beta, double gamma) {
  PdeScenario sc;
  sc.preset = "affine";
  sc.dimension = 1;
  sc.horizon = 1.0;
  sc.diffusion = 1.0;
  sc.driver = zero_driver();
  sc.terminal = [beta, gamma](std::span<const double> x, const LawStats& law) {
    return beta * coordinate_sum(x) + gamma * law.mean;
  };
  sc.initial_quantile = standard_normal_quantile();
  sc.moment_order = 6.0;
  sc.exact_value = [beta, gamma](double, std::span<const double> x, double law_mean) {
    return beta * coordinate_sum(x) + gamma * law_mean;
  };
  return sc;
}

PdeScenario make_pde_discounted(double beta, double gamma, double discount) {
  PdeScenario sc = make_pde_affine(beta, gamma);
  sc.preset = "discounted";
  sc.driver = linear_driver(discount);
  const double horizon = sc.horizon;
  sc.exact_value = [beta, gamma, discount, horizon](double t, std::span<const double> x,
                                                    double law_mean) {
    return std::exp(discount * (horizon - t)) *
           (beta * coordinate_sum(x) + gamma * law_mean);
  };
  return sc;
}

PdeScenario make_pde_constant(double value) {
  PdeScenario sc;
  sc.preset = "constant";
  sc.dimension = 1;
  sc.horizon = 1.0;
  sc.diffusion = 1.0;
  sc.driver = zero_driver();
  sc.terminal = [value](std::span<const double>, const LawStats&) { return value; };
  sc.initial_quantile = standard_normal_quantile();
  sc.moment_order = 6.0;
  sc.exact_value = [value](double, std::span<const double>, double) { return value; };
  return sc;
}

std::vector<double> simulate_forward(const PdeScenario& scenario,
                                     const BrownianBundle& bundle,
                                     std::span<const double> initial,
                                     std::size_t group_size) {
  const std::size_t samples = static_cast<std::size_t>(bundle.particles);
  const std::size_t steps = static_cast<std::size_t>(bundle.grid.steps);
  const std::size_t nodes = steps + 1;
  const std::size_t d = static_cast<std::size_t>(bundle.dimension);
  if (bundle.dimension != scenario.dimension) {
    throw std::invalid_argument("forward scheme: bundle dimension mismatch");
  }
  if (initial.size() != samples * d) {
    throw std::invalid_argument("forward scheme: one initial state per particle required");
  }
  const std::size_t group = group_size > 0 ? group_size : samples;
  if (samples % group != 0) {
    throw std::invalid_argument("forward scheme: group size must divide the particle count");
  }
  const std::size_t group_count = samples / group;
  const double dt = bundle.grid.dt;

  std::vector<double> states(samples * nodes * d);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      states[(i * nodes) * d + c] = initial[i * d + c];
    }
  }

  std::vector<double> group_mean(group_count * d);
  std::vector<double> drift(d);
  ExactSum acc;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = bundle.grid.nodes[k];
    if (scenario.drift) {
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
      const double* x = states.data() + (i * nodes + k) * d;
      double* next = states.data() + (i * nodes + k + 1) * d;
      if (scenario.drift) {
        scenario.drift(t, {x, d}, {group_mean.data() + (i / group) * d, d},
                       {drift.data(), d});
      }
      for (std::size_t c = 0; c < d; ++c) {
        const double move = scenario.drift ? drift[c] * dt : 0.0;
        next[c] = x[c] + move +
                  scenario.diffusion *
                      bundle.increments[((i * steps) + k) * d + c];
      }
    }
  }
  return states;
}

ParticleFbsde solve_particle_fbsde(const PdeScenario& scenario, std::size_t n,
                                   const BrownianBundle& bundle,
                                   const BasisSpec& basis,
                                   const SchemeParams& params) {
  if (n < 1) throw std::invalid_argument("particle system: n must be positive");
  const std::size_t samples = static_cast<std::size_t>(bundle.particles);
  if (samples % n != 0) {
    throw std::invalid_argument("particle system: n must divide the bundle size");
  }

  ParticleFbsde out;
  out.n = n;
  out.groups = samples / n;
  out.initial =
      draw_initial(scenario, bundle, replication_index(bundle.replication_id));
  out.states = simulate_forward(scenario, bundle, out.initial, n);

  SolveOptions options;
  options.group_size = n;
  options.state_paths = &out.states;
  options.regression = params.regression;
  out.backward =
      solve_backward(scenario.driver, measure_terminal(scenario), bundle, basis, options);
  return out;
}

double MasterSolution::value(std::size_t node, std::span<const double> x) const {
  const std::size_t d = static_cast<std::size_t>(dimension);
  if (x.size() != d) throw std::invalid_argument("value evaluator: state dimension mismatch");
  std::vector<double> row(d * static_cast<std::size_t>(degree));
  std::size_t col = 0;
  for (std::size_t c = 0; c < d; ++c) {
    double pw = 1.0;
    for (int deg = 0; deg < degree; ++deg) {
      pw *= x[c];
      row[col++] = pw;
    }
  }
  return readout[node].predict(row);
}

MasterSolution solve_master_fbsde(const PdeScenario& scenario, std::size_t cloud_size,
                                  const BrownianBundle& bundle,
                                  const BasisSpec& basis,
                                  const RidgeConfig& regression) {
  if (cloud_size < 2) throw std::invalid_argument("limit solve: cloud needs >= 2 particles");
  if (static_cast<std::size_t>(bundle.particles) != cloud_size) {
    throw std::invalid_argument("limit solve: bundle size must equal the cloud size");
  }

  MasterSolution out;
  out.cloud_size = cloud_size;
  out.dimension = scenario.dimension;
  out.degree = basis.degree;
  out.initial = draw_initial(
      scenario, bundle,
      replication_index(bundle.replication_id) | kReferenceDrawOffset);
  out.states = simulate_forward(scenario, bundle, out.initial, 0);

  SolveOptions options;
  options.state_paths = &out.states;
  options.regression = regression;
  out.core =
      solve_backward(scenario.driver, measure_terminal(scenario), bundle, basis, options);

  // Per-node polynomial read-out of the value against the cloud's states.
  const std::size_t nodes = static_cast<std::size_t>(bundle.grid.node_count());
  const std::size_t d = static_cast<std::size_t>(scenario.dimension);
  const std::size_t q = d * static_cast<std::size_t>(basis.degree);
  std::vector<double> design(cloud_size * q);
  out.readout.reserve(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    for (std::size_t i = 0; i < cloud_size; ++i) {
      double* row = design.data() + i * q;
      std::size_t col = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const double x = out.states[(i * nodes + k) * d + c];
        double pw = 1.0;
        for (int deg = 0; deg < basis.degree; ++deg) {
          pw *= x;
          row[col++] = pw;
        }
      }
    }
    out.readout.push_back(fit_ridge(design, q, out.core.y_slice(k), regression));
  }
  return out;
}

PdeComparison compare_pde(const PdeScenario& scenario,
                          std::span<const std::size_t> ns, std::size_t reps,
                          std::size_t cloud_size, const PdeStudyOptions& options) {
  if (ns.empty()) throw std::invalid_argument("comparison study: empty particle-count ladder");
  std::size_t prev = 0;
  for (std::size_t n : ns) {
    if (n < 1 || n <= prev) {
      throw std::invalid_argument(
          "comparison study: particle counts must be positive and strictly increasing");
    }
    prev = n;
  }
  if (reps < 2) throw std::invalid_argument("comparison study: needs at least 2 replications");
  if (scenario.dimension != 1) {
    throw std::invalid_argument("comparison study: presets are one-dimensional");
  }
  if (!scenario.exact_value) {
    throw std::invalid_argument("comparison study: scenario must supply its value map");
  }

  const TimeGrid grid = make_grid(scenario.horizon, options.steps);
  const BrownianBundle master_bundle =
      sample_brownian(options.seed, replication_tag(StreamPurpose::reference_cloud, 0),
                      static_cast<int>(cloud_size), scenario.dimension, grid);
  const MasterSolution master = solve_master_fbsde(scenario, cloud_size, master_bundle,
                                                   options.basis, options.regression);

  SchemeParams params;
  params.regression = options.regression;
  const std::size_t batch = std::max<std::size_t>(1, options.system_batch);

  PdeComparison out;
  out.reps = reps;
  for (std::size_t n : ns) {
    std::vector<double> first_samples;
    first_samples.reserve(reps);
    ExactSum average_acc;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const BrownianBundle bundle = sample_brownian(
          options.seed,
          replication_tag(StreamPurpose::system_paths, static_cast<std::uint32_t>(rep)),
          static_cast<int>(batch * n), scenario.dimension, grid);
      const ParticleFbsde fb =
          solve_particle_fbsde(scenario, n, bundle, options.basis, params);

      const double v_first = fb.value_at_initial(0);
      const double limit_value = master.value(0, fb.initial[0]);
      const double gap = v_first - limit_value;
      first_samples.push_back(gap * gap);

      ExactSum xi_acc;
      for (std::size_t i = 0; i < n; ++i) xi_acc.add(fb.initial[i]);
      const double empirical_mean = xi_acc.round() / static_cast<double>(n);
      ExactSum gap_acc;
      for (std::size_t i = 0; i < n; ++i) {
        const double value = scenario.exact_value(
            0.0, {fb.initial.data() + i, 1}, empirical_mean);
        const double diff = fb.value_at_initial(i) - value;
        gap_acc.add(diff * diff);
      }
      average_acc.add(gap_acc.round() / static_cast<double>(n));
    }

    ExactSum acc;
    for (double s : first_samples) acc.add(s);
    const double mean = acc.round() / static_cast<double>(reps);
    acc.reset();
    for (double s : first_samples) acc.add((s - mean) * (s - mean));
    const double var = acc.round() / static_cast<double>(reps - 1);

    out.ns.push_back(n);
    out.gap_first.push_back(mean);
    out.gap_average.push_back(average_acc.round() / static_cast<double>(reps));
    out.stderr_first.push_back(std::sqrt(var / static_cast<double>(reps)));
    out.epsilon.push_back(epsilon_cd(n, scenario.dimension));
    RateParams rate;
    rate.n = n;
    rate.m = scenario.dimension;
    rate.p = 2.0;
    rate.q = scenario.moment_order;
    rate.k = scenario.moment_order + 1.0;
    out.epsilon_plus_rate.push_back(out.epsilon.back() + rate_reference(rate));
    out.samples.push_back(std::move(first_samples));
  }

  if (out.ns.size() >= 4) {
    bool positive = true;
    for (double g : out.gap_first) positive = positive && g > 0.0;
    if (positive) {
      std::vector<double> ns_real(out.ns.begin(), out.ns.end());
      out.fit = fit_rate(ns_real, out.gap_first);
      out.fit_valid = true;
    }
  }
  return out;
}

}  // namespace chaoslab
