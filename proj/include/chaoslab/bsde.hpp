#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <tuple>
#include <vector>

#include "chaoslab/brownian.hpp"
#include "chaoslab/empirical.hpp"
#include "chaoslab/regression.hpp"
#include "chaoslab/time_grid.hpp"

namespace chaoslab {

// Summary statistics of the law argument handed to a driver at one node:
// either the frozen law flow (decoupled runs) or the live particle slice of
// the caller's interaction group (coupled runs).
struct LawStats {
  double mean = 0.0;         // empirical mean of the solution values
  double moment2 = 0.0;      // empirical second raw moment
  double kernel_mean = 0.0;  // empirical mean of DriverSpec::law_kernel
};

// Scalar-valued drift generator F(t, x, y, z, law).  The state x is the
// particle's Brownian value (dimension matches the bundle); z has the same
// dimension.  Pair-interaction drivers receive their averaged kernel through
// LawStats::kernel_mean and add any own-value part inside evaluate.
struct DriverSpec {
  std::function<double(double t, std::span<const double> x, double y,
                       std::span<const double> z, const LawStats& law)>
      evaluate;
  double lipschitz_y = 0.0;
  double lipschitz_z = 0.0;
  double lipschitz_law = 0.0;
  double growth_bound = 0.0;
  bool depends_on_z = false;
  bool depends_on_law = false;
  // Optional per-member kernel averaged over the law argument into
  // LawStats::kernel_mean (used by pair-interaction systems).
  std::function<double(double t, double y)> law_kernel;
};

// Scalar terminal functional of one particle's discrete state path.  The
// span holds the (steps+1) x dimension node values of that path.
struct TerminalSpec {
  std::function<double(const TimeGrid& grid, std::span<const double> path)>
      evaluate;
  // Optional measure-coupled form: also receives the statistics of the
  // terminal states across the particle's interaction group (the whole
  // bundle when no groups are formed).  Scalar states only.  When set it
  // takes precedence over `evaluate` in the backward solver.
  std::function<double(const TimeGrid& grid, std::span<const double> path,
                       const LawStats& law)>
      evaluate_with_law;
  double moment_order = 2.0;
  double lipschitz = 0.0;  // path sup-norm Lipschitz constant when declared
};

// Regression features: monomials of the particle's own state per coordinate,
// optionally extended by the interaction group's state mean (and a product
// term) so coupled runs can condition on shared information.
struct BasisSpec {
  int degree = 3;
  bool include_group_mean = false;
  int group_degree = 1;
  bool include_cross = false;
};

struct StepDiagnostics {
  int node = 0;
  double residual_rms = 0.0;
  double condition = 1.0;
  double ridge_used = 0.0;
  int dropped_columns = 0;
  bool ill_conditioned = false;
  double z_mean = 0.0;           // first z coordinate, averaged over samples
  double z_second_moment = 0.0;  // diagnostics for integrability monitoring
};

class BsdeSolution {
 public:
  TimeGrid grid;
  std::size_t scenarios = 0;   // total Monte Carlo samples
  std::size_t group_size = 0;  // samples per interacting group
  int dimension = 1;
  // Node-major storage: y is (steps+1) x scenarios, z is steps x scenarios x d.
  std::vector<double> y;
  std::vector<double> z;
  std::vector<StepDiagnostics> diagnostics;

  double y_at(std::size_t node, std::size_t scenario) const {
    return y[node * scenarios + scenario];
  }
  std::span<const double> y_slice(std::size_t node) const {
    return {y.data() + node * scenarios, scenarios};
  }
  std::span<const double> z_at(std::size_t node, std::size_t scenario) const {
    const std::size_t d = static_cast<std::size_t>(dimension);
    return {z.data() + (node * scenarios + scenario) * d, d};
  }
};

struct SolveOptions {
  // 0 keeps every scenario decoupled; a positive value partitions the bundle
  // particles into groups of that size whose empirical statistics feed the
  // driver's law argument and the shared regression features.
  std::size_t group_size = 0;
  // Frozen law flow, one measure per grid node; required when the driver
  // depends on the law and no interaction groups are formed.
  const std::vector<EmpiricalMeasure>* law_flow = nullptr;
  // Externally simulated state trajectories, particle-major with layout
  // (particle * (steps+1) + node) * dimension + coordinate.  When set they
  // replace the accumulated Brownian values as the regression state, the
  // driver's x argument, and the terminal path; the bundle still supplies the
  // increments the control projection conditions on.
  const std::vector<double>* state_paths = nullptr;
  RidgeConfig regression;
};

// Explicit backward recursion: terminal values from TerminalSpec, then per
// step a least-squares projection of the next node's values (and of their
// product with the Brownian increment, giving z) onto the basis, followed by
// a two-stage trapezoidal drift update.
BsdeSolution solve_backward(const DriverSpec& driver,
                            const TerminalSpec& terminal,
                            const BrownianBundle& paths, const BasisSpec& basis,
                            const SolveOptions& options = {});

struct PicardOptions {
  int max_iters = 50;
  double tol = 1e-4;  // sup-over-nodes W_2 between successive law flows
  RidgeConfig regression;
};

struct PicardLog {
  std::vector<double> distances;  // one per correction pass
  int iterations = 0;             // correction passes performed
  bool converged = false;
};

// Fixed-point iteration on the law flow: repeatedly solve the decoupled
// equation with the current flow frozen, then refresh the flow from the
// solution cloud, until successive flows are tol-close in W_2 at every node.
// An empty initial flow starts from the terminal empirical measure at all
// nodes.  Non-convergence is reported in the log, not thrown.
std::tuple<BsdeSolution, std::vector<EmpiricalMeasure>, PicardLog> picard_iterate(
    const DriverSpec& driver, const TerminalSpec& terminal,
    const BrownianBundle& paths, const BasisSpec& basis,
    std::vector<EmpiricalMeasure> initial_flow, const PicardOptions& options = {});

namespace detail {
// Node values of every bundle path, particle-major: ((i*(steps+1))+k)*d + c.
std::vector<double> accumulate_states(const BrownianBundle& paths);
}  // namespace detail

}  // namespace chaoslab
