#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chaoslab/mean_field.hpp"
#include "chaoslab/rates.hpp"

namespace chaoslab {

// Monte Carlo studies of how fast solutions of the n-particle backward system
// approach the mean-field limit: marginal-law distances, their sup over grid
// nodes, exceedance tails, and pathwise gaps along coupled Brownian paths.
//
// All replications are keyed by (seed, purpose, replication index), so any
// two studies on the same scenario share sample paths replication by
// replication: common-random-number comparisons are exact, and reruns are
// bit-reproducible.

enum class ProcessReference {
  moment_rate,  // rate_reference evaluated at order 2
  inverse_n,    // 1/n, the sharper curve for pair-kernel interactions
};

// Everything a study needs: the interacting system, grid, basis, sampling
// layout, and the parameters of the reference curves.
struct StudyScenario {
  InteractionSpec interaction;
  TerminalSpec terminal;
  BasisSpec basis;

  double horizon = 1.0;
  std::size_t steps = 64;
  int dimension = 1;  // driving Brownian dimension
  std::uint64_t seed = 0;

  // Limit solution pre-solved once per study; reference clouds are drawn
  // from it per replication instead of re-solving.
  std::size_t reference_cloud_size = std::size_t{1} << 14;

  // Groups solved jointly per replication.  Group 0 is the reported system;
  // the extra groups only stabilize the shared regression.  Held constant
  // across a particle-count ladder so regression quality scales smoothly.
  std::size_t system_batch = 16;

  // The coupled limit solve uses coupling_multiple x system_batch x n paths,
  // the first system_batch x n of which reuse the system's Brownian paths.
  std::size_t coupling_multiple = 4;

  // Reference-curve parameters (the n field is ignored; set per call).
  RateParams rate;
  ProcessReference process_reference = ProcessReference::moment_rate;
  double tail_delta = 0.0;  // 0 picks the default k/10

  // Shortcut for the exactly-solvable martingale scenario Y_t = W_t: values
  // are read off the paths directly and the reference cloud is a fresh
  // i.i.d. bundle, with no regression anywhere.
  bool direct_gaussian = false;

  SchemeParams scheme;  // regression settings for the grouped solves
  MkvParams mkv;        // fixed-point settings for the limit solve
};

// One estimated error curve over a particle-count ladder.  `errors` holds the
// per-n Monte Carlo means, `samples` the per-replication statistics behind
// them (replication order, excluded replications omitted), `reference` the
// matching reference-curve values.  The log-log fit is only performed when
// every mean is positive and the ladder has >= 4 points (`fit_valid`).
struct RateStudy {
  std::vector<std::size_t> ns;
  std::vector<double> errors;
  std::vector<double> stderrs;
  std::vector<double> reference;
  std::vector<std::vector<double>> samples;
  // Pathwise studies also record the state-gap component per replication.
  std::vector<std::vector<double>> y_samples;
  RateFit fit;
  bool fit_valid = false;
  std::size_t reps = 0;
  std::size_t excluded = 0;
};

// Exceedance estimate at one threshold with its exact binomial interval and
// the two reference envelopes (shape only; unit leading constants).
struct TailEstimate {
  double epsilon = 0.0;
  std::size_t hits = 0;
  std::size_t reps = 0;
  double probability = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double reference_a = 0.0;
  double reference_b = 0.0;
};

// Distance of the n-particle marginal at one grid node from the limit law,
// reported as E[W_p^p].  Per replication: solve the n-particle system, draw a
// size-n i.i.d. comparison cloud from the pre-solved limit solution at that
// node, and evaluate the exact transport distance.  Requires reps >= 30.
RateStudy estimate_marginal_chaos(const StudyScenario& scenario, std::size_t node,
                                  std::span<const std::size_t> ns, std::size_t reps,
                                  double p);

// Same study with the per-replication statistic max over all grid nodes of
// W_p^p against the node-matched values of one drawn comparison cloud.  On
// common seeds this dominates any fixed-node statistic term by term.
RateStudy estimate_sup_chaos(const StudyScenario& scenario,
                             std::span<const std::size_t> ns, std::size_t reps,
                             double p);

// Raw replication-level distances W_p (not the p-th power) at one node, for
// threshold calibration.  `replication_offset` shifts the replication index
// window so calibration draws stay independent of a later study.
std::vector<double> sample_distances(const StudyScenario& scenario, std::size_t node,
                                     std::size_t n, double p, std::size_t reps,
                                     std::uint64_t replication_offset = 0);

// Exceedance frequencies P(W_p >= epsilon) across a threshold list, with
// Clopper-Pearson 95% intervals and the two reference envelopes.  Refuses to
// run when reps x envelope(smallest epsilon) < 5 expected exceedances.
std::vector<TailEstimate> estimate_tail(const StudyScenario& scenario,
                                        std::size_t node, std::size_t n, double p,
                                        std::span<const double> epsilons,
                                        std::size_t reps);

// Pathwise gap between particle 1 of the n-particle system and its i.i.d.
// limit copy driven by the same Brownian path: per replication, sup over
// nodes of the squared state gap plus the dt-weighted sum of squared control
// gaps.  The limit copy is solved on the same path bundle (extended by
// coupling_multiple) against the frozen pre-solved law flow.
RateStudy estimate_process_error(const StudyScenario& scenario,
                                 std::span<const std::size_t> ns, std::size_t reps);

// Monte Carlo estimate of the k-block sum of squared sup state gaps, the
// upper-bound proxy for the block-measure transport distance.  With
// k_block = 1 this equals estimate_process_error's state-gap component on the
// same seeds; by exchangeability it scales linearly in k_block.
double chaos_block_bound(const StudyScenario& scenario, std::size_t n,
                         std::size_t k_block, std::size_t reps);

// The same block statistic over a particle-count ladder with standard errors
// and a reference curve (k_block times the process-error reference).
RateStudy estimate_block_bounds(const StudyScenario& scenario,
                                std::span<const std::size_t> ns,
                                std::size_t k_block, std::size_t reps);

}  // namespace chaoslab
