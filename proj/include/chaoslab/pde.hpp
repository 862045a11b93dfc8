#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/bsde.hpp"
#include "chaoslab/mean_field.hpp"
#include "chaoslab/rates.hpp"

namespace chaoslab {

// Finite-system approximation of a value function on (time, state, law):
// both sides are solved through their stochastic representations — the
// n-particle forward/backward system on one side, the limit forward/backward
// equation on a large particle cloud on the other — and compared at i.i.d.
// initial draws.

// Coefficient package of one forward/backward pair.  Presets keep every map
// affine in the state and in the law mean, so closed forms exist for the
// oracle checks and the regularity requirements hold by construction.
struct PdeScenario {
  std::string preset;  // registered name
  int dimension = 1;   // forward state dimension
  double horizon = 1.0;

  // Forward drift B(t, x, law mean), written into `out` (componentwise);
  // empty means zero drift.  The law mean is the per-coordinate empirical
  // mean of the particle's interaction group, refreshed once per step.
  std::function<void(double t, std::span<const double> x,
                     std::span<const double> law_mean, std::span<double> out)>
      drift;
  double diffusion = 1.0;  // isotropic constant diffusion (bounded)

  // Backward drift; law-independent for every preset.
  DriverSpec driver;

  // Terminal value G(x, mu): terminal state of the particle plus the
  // statistics of its group's terminal states.
  std::function<double(std::span<const double> x_terminal, const LawStats& law)>
      terminal;

  // Componentwise quantile transform of the initial law (i.i.d. across
  // coordinates and particles) with its declared moment order k > 4.
  std::function<double(double u)> initial_quantile;
  double moment_order = 6.0;

  // Closed-form value (t, x, law mean) -> V, available for every preset.
  std::function<double(double t, std::span<const double> x, double law_mean)>
      exact_value;
};

// G = beta . x + gamma . mean(mu), zero backward drift, unit diffusion,
// standard normal initial law; the value function is the same affine map.
PdeScenario make_pde_affine(double beta, double gamma);
// Same with the backward drift a . y, which multiplies values by e^{a(T-t)}.
PdeScenario make_pde_discounted(double beta, double gamma, double discount);
// Constant terminal: the value function is that constant.
PdeScenario make_pde_constant(double value);

// Forward Euler scheme: X_{k+1} = X_k + B dt + diffusion dW, the interaction
// statistic refreshed once per step per group (group 0 = whole bundle when
// group_size is 0).  Returns particle-major trajectories in the backward
// solver's state layout.
std::vector<double> simulate_forward(const PdeScenario& scenario,
                                     const BrownianBundle& bundle,
                                     std::span<const double> initial,
                                     std::size_t group_size);

// Joint forward/backward solve of the n-particle system on one bundle.  The
// initial draws are keyed by the bundle's replication index under the
// initial-draw stream purpose, so a bundle identifies the whole replication.
struct ParticleFbsde {
  std::size_t n = 0;
  std::size_t groups = 1;
  std::vector<double> initial;  // particle-major xi, bundle order
  std::vector<double> states;   // forward trajectories
  BsdeSolution backward;

  // Value read-off: the backward solution at the initial node.
  double value_at_initial(std::size_t particle) const {
    return backward.y_at(0, particle);
  }
};

ParticleFbsde solve_particle_fbsde(const PdeScenario& scenario, std::size_t n,
                                   const BrownianBundle& bundle,
                                   const BasisSpec& basis,
                                   const SchemeParams& params = {});

// Limit solve on a particle cloud (self-interaction: the cloud is one group)
// plus per-node polynomial read-outs, giving a value evaluator
// x -> V(t_node, x, law of the cloud).
struct MasterSolution {
  std::size_t cloud_size = 0;
  int dimension = 1;
  int degree = 3;
  std::vector<double> initial;
  std::vector<double> states;
  BsdeSolution core;
  std::vector<RidgeFit> readout;  // one fit per grid node

  double value(std::size_t node, std::span<const double> x) const;
  double value(std::size_t node, double x) const { return value(node, {&x, 1}); }
};

MasterSolution solve_master_fbsde(const PdeScenario& scenario, std::size_t cloud_size,
                                  const BrownianBundle& bundle,
                                  const BasisSpec& basis,
                                  const RidgeConfig& regression = {});

// Squared gaps between the two representations at the initial node over a
// particle-count ladder:
//   gap_first   E|v^{1,n}(0, xi_1..xi_n) - V(0, xi_1, mu)|^2, V from the
//               solved limit cloud;
//   gap_average mean_i E|v^{i,n}(0, xi) - V(0, xi_i, empirical(xi))|^2, V
//               from the preset's closed form at the empirical mean.
// Reference curves: the dimension-sensitive rate and its moment-rate sum.
struct PdeComparison {
  std::vector<std::size_t> ns;
  std::vector<double> gap_first;
  std::vector<double> gap_average;
  std::vector<double> stderr_first;
  std::vector<double> epsilon;
  std::vector<double> epsilon_plus_rate;
  std::vector<std::vector<double>> samples;  // first-particle gaps per n
  RateFit fit;
  bool fit_valid = false;
  std::size_t reps = 0;
};

struct PdeStudyOptions {
  BasisSpec basis;
  std::size_t system_batch = 16;
  int steps = 64;
  std::uint64_t seed = 0;
  RidgeConfig regression;
};

PdeComparison compare_pde(const PdeScenario& scenario,
                          std::span<const std::size_t> ns, std::size_t reps,
                          std::size_t cloud_size, const PdeStudyOptions& options = {});

}  // namespace chaoslab
