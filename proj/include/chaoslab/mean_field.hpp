#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "chaoslab/bsde.hpp"

namespace chaoslab {

enum class InteractionKind { none, general_measure, linear_f };

// Interaction layer of a coupled backward system: either a measure driver
// F(t, y, z, mu) acting through law statistics, or a pair interaction
// F(t, y, z, a) with a = (1/n) sum_j f(t, y, y_j, z).  Pair kernels are
// supplied in separable parts, a = kernel_self(t, y, z) + mean_j
// kernel_other(t, y_j), which covers every shipped preset.
struct InteractionSpec {
  InteractionKind kind = InteractionKind::none;

  std::function<double(double t, double y, std::span<const double> z,
                       const LawStats& law)>
      measure_driver;

  std::function<double(double t, double y, std::span<const double> z, double a)>
      outer;
  std::function<double(double t, double y, std::span<const double> z)> kernel_self;
  std::function<double(double t, double y)> kernel_other;

  double lipschitz_outer = 1.0;   // L_F
  double lipschitz_kernel = 1.0;  // L_f
  bool depends_on_z = false;
};

// Assembles the generic drift the backward engine consumes.
DriverSpec interaction_driver(const InteractionSpec& spec);

// Interaction presets selectable from scenario files.
InteractionSpec make_mean_linear(double alpha);       // F = alpha * mean(mu)
InteractionSpec make_mean_reversion(double speed);    // F = speed * (mean(mu) - y)
InteractionSpec make_convolution(double scale);       // f(y1, y2) = scale * (y2 - y1), F(a) = a
InteractionSpec make_null_interaction();              // f = 0
InteractionSpec make_mean_kernel(double alpha);       // f(y1, y2) = y2, F(a) = alpha * a

// Terminal presets: affine map of the terminal state, a constant, and a
// sup-norm path functional (Lipschitz on paths under the supremum norm).
TerminalSpec make_terminal_affine(double base, double spread, int coordinate = 0);
TerminalSpec make_terminal_constant(double value);
TerminalSpec make_terminal_supnorm(double base, double scale);

struct SchemeParams {
  // Particles per interacting group; 0 treats the whole bundle as one group.
  // Extra groups act as independent replicas that share (and stabilize) the
  // regression while keeping their own interaction statistics.
  std::size_t group_size = 0;
  RidgeConfig regression;
};

// Joint solution of the n-particle system; samples are grouped n at a time,
// group 0 being the reported realization and later groups regression batching.
struct SystemSolution {
  std::size_t n = 0;
  std::size_t groups = 1;
  InteractionKind kind = InteractionKind::none;
  BsdeSolution core;

  std::span<const double> group_slice(std::size_t node, std::size_t group) const {
    return core.y_slice(node).subspan(group * n, n);
  }
};

SystemSolution solve_interacting(const InteractionSpec& spec,
                                 const TerminalSpec& terminal,
                                 const BrownianBundle& bundle, const BasisSpec& basis,
                                 const SchemeParams& params = {});

// Same recursion restricted to pair-interaction specs.
SystemSolution solve_linear_interaction(const InteractionSpec& spec,
                                        const TerminalSpec& terminal,
                                        const BrownianBundle& bundle,
                                        const BasisSpec& basis,
                                        const SchemeParams& params = {});

struct MkvParams {
  int max_iters = 50;
  double tol = 1e-4;
  RidgeConfig regression;
  // Analytic mean flow t -> E[Y_t] attached for diagnostics when known.
  std::function<double(double)> reference_mean;
};

// Decoupled limit solution: i.i.d. cloud plus its law flow.
struct MkvSolution {
  std::size_t cloud_size = 0;
  BsdeSolution core;
  std::vector<EmpiricalMeasure> law_flow;  // one measure per node
  PicardLog picard;
  std::function<double(double)> reference_mean;

  double mean_at(std::size_t node) const { return law_flow[node].mean(); }
};

// Fixed-point solve of the limit equation on the bundle's paths (the bundle
// size is the cloud size).
MkvSolution solve_mkv(const InteractionSpec& spec, const TerminalSpec& terminal,
                      const BrownianBundle& bundle, const BasisSpec& basis,
                      const MkvParams& params = {});

}  // namespace chaoslab
