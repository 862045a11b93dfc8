#include "chaoslab/mean_field.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace chaoslab {

DriverSpec interaction_driver(const InteractionSpec& spec) {
  DriverSpec driver;
  driver.depends_on_z = spec.depends_on_z;
  switch (spec.kind) {
    case InteractionKind::none:
      driver.evaluate = [](double, std::span<const double>, double,
                           std::span<const double>, const LawStats&) { return 0.0; };
      driver.depends_on_law = false;
      break;
    case InteractionKind::general_measure: {
      if (!spec.measure_driver) {
        throw std::invalid_argument("measure interaction needs measure_driver");
      }
      auto f = spec.measure_driver;
      driver.evaluate = [f](double t, std::span<const double>, double y,
                            std::span<const double> z, const LawStats& law) {
        return f(t, y, z, law);
      };
      driver.depends_on_law = true;
      driver.lipschitz_law = spec.lipschitz_outer;
      break;
    }
    case InteractionKind::linear_f: {
      if (!spec.outer) {
        throw std::invalid_argument("pair interaction needs the outer driver");
      }
      auto outer = spec.outer;
      auto self = spec.kernel_self;
      driver.evaluate = [outer, self](double t, std::span<const double>, double y,
                                      std::span<const double> z, const LawStats& law) {
        const double a = (self ? self(t, y, z) : 0.0) + law.kernel_mean;
        return outer(t, y, z, a);
      };
      driver.law_kernel = spec.kernel_other;
      driver.depends_on_law = static_cast<bool>(spec.kernel_other);
      driver.lipschitz_law = spec.lipschitz_outer * spec.lipschitz_kernel;
      break;
    }
  }
  driver.lipschitz_y = spec.lipschitz_outer * spec.lipschitz_kernel;
  driver.growth_bound = spec.lipschitz_outer * spec.lipschitz_kernel;
  return driver;
}

InteractionSpec make_mean_linear(double alpha) {
  InteractionSpec spec;
  spec.kind = InteractionKind::general_measure;
  spec.measure_driver = [alpha](double, double, std::span<const double>,
                                const LawStats& law) { return alpha * law.mean; };
  spec.lipschitz_outer = std::abs(alpha);
  spec.lipschitz_kernel = 1.0;
  return spec;
}

InteractionSpec make_mean_reversion(double speed) {
  InteractionSpec spec;
  spec.kind = InteractionKind::general_measure;
  spec.measure_driver = [speed](double, double y, std::span<const double>,
                                const LawStats& law) {
    return speed * (law.mean - y);
  };
  spec.lipschitz_outer = std::abs(speed);
  spec.lipschitz_kernel = 1.0;
  return spec;
}

InteractionSpec make_convolution(double scale) {
  InteractionSpec spec;
  spec.kind = InteractionKind::linear_f;
  spec.outer = [](double, double, std::span<const double>, double a) { return a; };
  spec.kernel_self = [scale](double, double y, std::span<const double>) {
    return -scale * y;
  };
  spec.kernel_other = [scale](double, double y) { return scale * y; };
  spec.lipschitz_outer = 1.0;
  spec.lipschitz_kernel = std::abs(scale);
  return spec;
}

InteractionSpec make_null_interaction() {
  InteractionSpec spec;
  spec.kind = InteractionKind::linear_f;
  spec.outer = [](double, double, std::span<const double>, double a) { return a; };
  spec.lipschitz_outer = 1.0;
  spec.lipschitz_kernel = 0.0;
  return spec;
}

InteractionSpec make_mean_kernel(double alpha) {
  InteractionSpec spec;
  spec.kind = InteractionKind::linear_f;
  spec.outer = [alpha](double, double, std::span<const double>, double a) {
    return alpha * a;
  };
  spec.kernel_other = [](double, double y) { return y; };
  spec.lipschitz_outer = std::abs(alpha);
  spec.lipschitz_kernel = 1.0;
  return spec;
}

TerminalSpec make_terminal_affine(double base, double spread, int coordinate) {
  TerminalSpec t;
  t.evaluate = [base, spread, coordinate](const TimeGrid& grid,
                                          std::span<const double> path) {
    const std::size_t d = path.size() / static_cast<std::size_t>(grid.node_count());
    const std::size_t last = (static_cast<std::size_t>(grid.steps)) * d +
                             static_cast<std::size_t>(coordinate);
    return base + spread * path[last];
  };
  t.lipschitz = std::abs(spread);
  return t;
}

TerminalSpec make_terminal_constant(double value) {
  TerminalSpec t;
  t.evaluate = [value](const TimeGrid&, std::span<const double>) { return value; };
  t.lipschitz = 0.0;
  return t;
}

TerminalSpec make_terminal_supnorm(double base, double scale) {
  TerminalSpec t;
  t.evaluate = [base, scale](const TimeGrid& grid, std::span<const double> path) {
    const std::size_t d = path.size() / static_cast<std::size_t>(grid.node_count());
    double sup = 0.0;
    for (std::size_t k = 0; k < path.size(); k += d) {
      double norm2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) norm2 += path[k + c] * path[k + c];
      sup = std::max(sup, norm2);
    }
    return base + scale * std::sqrt(sup);
  };
  t.lipschitz = std::abs(scale);
  return t;
}

SystemSolution solve_interacting(const InteractionSpec& spec,
                                 const TerminalSpec& terminal,
                                 const BrownianBundle& bundle, const BasisSpec& basis,
                                 const SchemeParams& params) {
  if (bundle.particles <= 0) throw std::invalid_argument("empty particle system");
  const std::size_t total = static_cast<std::size_t>(bundle.particles);
  const std::size_t n = params.group_size > 0 ? params.group_size : total;
  if (total % n != 0) {
    throw std::invalid_argument("group size must divide the particle count");
  }

  SolveOptions options;
  options.group_size = n;
  options.regression = params.regression;

  SystemSolution out;
  out.n = n;
  out.groups = total / n;
  out.kind = spec.kind;
  out.core = solve_backward(interaction_driver(spec), terminal, bundle, basis, options);
  return out;
}

SystemSolution solve_linear_interaction(const InteractionSpec& spec,
                                        const TerminalSpec& terminal,
                                        const BrownianBundle& bundle,
                                        const BasisSpec& basis,
                                        const SchemeParams& params) {
  if (spec.kind != InteractionKind::linear_f) {
    throw std::invalid_argument("solve_linear_interaction needs a pair-interaction spec");
  }
  return solve_interacting(spec, terminal, bundle, basis, params);
}

MkvSolution solve_mkv(const InteractionSpec& spec, const TerminalSpec& terminal,
                      const BrownianBundle& bundle, const BasisSpec& basis,
                      const MkvParams& params) {
  if (bundle.particles < 2) throw std::invalid_argument("cloud size must be at least 2");

  PicardOptions options;
  options.max_iters = params.max_iters;
  options.tol = params.tol;
  options.regression = params.regression;

  auto [sol, flow, log] =
      picard_iterate(interaction_driver(spec), terminal, bundle, basis, {}, options);

  MkvSolution out;
  out.cloud_size = static_cast<std::size_t>(bundle.particles);
  out.core = std::move(sol);
  out.law_flow = std::move(flow);
  out.picard = std::move(log);
  out.reference_mean = params.reference_mean;
  return out;
}

}  // namespace chaoslab
