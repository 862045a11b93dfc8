#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaoslab/brownian.hpp"
#include "chaoslab/chaos_estimators.hpp"
#include "chaoslab/exact_sum.hpp"
#include "chaoslab/mean_field.hpp"

using namespace chaoslab;

namespace {

BasisSpec study_basis() {
  BasisSpec basis;
  basis.degree = 3;
  basis.include_group_mean = true;
  basis.group_degree = 1;
  return basis;
}

StudyScenario direct_gaussian_scenario(std::uint64_t seed) {
  StudyScenario sc;
  sc.direct_gaussian = true;
  sc.horizon = 1.0;
  sc.steps = 16;
  sc.seed = seed;
  sc.rate.m = 1;
  sc.rate.p = 1.0;
  sc.rate.q = 1.5;
  sc.rate.k = 2.5;
  return sc;
}

StudyScenario mean_interaction_scenario(std::uint64_t seed) {
  StudyScenario sc;
  sc.interaction = make_mean_linear(0.5);
  sc.terminal = make_terminal_affine(1.0, 1.0);
  sc.basis = study_basis();
  sc.horizon = 1.0;
  sc.steps = 16;
  sc.seed = seed;
  sc.reference_cloud_size = 2048;
  sc.system_batch = 8;
  sc.coupling_multiple = 2;
  sc.rate.m = 1;
  sc.rate.p = 1.0;
  sc.rate.q = 1.5;
  sc.rate.k = 2.5;
  return sc;
}

StudyScenario mean_kernel_scenario(std::uint64_t seed) {
  StudyScenario sc = mean_interaction_scenario(seed);
  sc.interaction = make_mean_kernel(0.5);
  sc.process_reference = ProcessReference::inverse_n;
  return sc;
}

StudyScenario deterministic_scenario(std::uint64_t seed) {
  StudyScenario sc;
  sc.interaction = make_null_interaction();
  sc.terminal = make_terminal_constant(0.75);
  sc.basis = study_basis();
  sc.horizon = 1.0;
  sc.steps = 8;
  sc.seed = seed;
  sc.reference_cloud_size = 64;
  sc.system_batch = 4;
  sc.coupling_multiple = 2;
  sc.rate.m = 1;
  sc.rate.p = 1.0;
  sc.rate.q = 1.5;
  sc.rate.k = 2.5;
  return sc;
}

double mean_of(std::span<const double> xs) {
  ExactSum acc;
  for (double x : xs) acc.add(x);
  return acc.round() / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("degenerate law gives zero marginal error at every n") {
  const StudyScenario sc = deterministic_scenario(41);
  const std::vector<std::size_t> ns = {2, 4, 8, 16};
  const RateStudy study = estimate_marginal_chaos(sc, 4, ns, 30, 1.0);
  REQUIRE(study.errors.size() == 4);
  for (double e : study.errors) CHECK(e == 0.0);
  CHECK_FALSE(study.fit_valid);
  CHECK(study.excluded == 0);

  const RateStudy sup = estimate_sup_chaos(sc, ns, 30, 1.0);
  for (double e : sup.errors) CHECK(e <= 1e-24);
}

TEST_CASE("gaussian martingale marginal study recovers the root-n rate") {
  const StudyScenario sc = direct_gaussian_scenario(77);
  const std::vector<std::size_t> ns = {8, 16, 32, 64, 128};
  const RateStudy study = estimate_marginal_chaos(sc, sc.steps, ns, 48, 1.0);
  REQUIRE(study.fit_valid);
  CHECK(study.fit.slope > -0.65);
  CHECK(study.fit.slope < -0.35);
  for (std::size_t j = 0; j < ns.size(); ++j) {
    CHECK(study.errors[j] > 0.0);
    CHECK(study.stderrs[j] > 0.0);
    if (j > 0) CHECK(study.reference[j] < study.reference[j - 1]);
  }
}

TEST_CASE("sup statistic dominates fixed-node statistic sample by sample") {
  const StudyScenario sc = direct_gaussian_scenario(91);
  const std::vector<std::size_t> ns = {8, 16, 32, 64};
  const std::size_t reps = 32;
  const RateStudy sup = estimate_sup_chaos(sc, ns, reps, 1.0);
  const RateStudy fixed = estimate_marginal_chaos(sc, sc.steps / 2, ns, reps, 1.0);
  REQUIRE(sup.samples.size() == ns.size());
  REQUIRE(fixed.samples.size() == ns.size());
  std::size_t dominated = 0;
  std::size_t total = 0;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    REQUIRE(sup.samples[j].size() == reps);
    REQUIRE(fixed.samples[j].size() == reps);
    for (std::size_t r = 0; r < reps; ++r) {
      ++total;
      if (sup.samples[j][r] >= fixed.samples[j][r]) ++dominated;
    }
  }
  CHECK(dominated == total);
  REQUIRE(sup.fit_valid);
  REQUIRE(fixed.fit_valid);
  CHECK(sup.fit.slope <= fixed.fit.slope + 0.1);
}

TEST_CASE("mean-interaction marginal study stays near the root-n envelope") {
  const StudyScenario sc = mean_interaction_scenario(2026);
  const std::vector<std::size_t> ns = {8, 16, 32, 64};
  const RateStudy study = estimate_marginal_chaos(sc, sc.steps / 2, ns, 32, 1.0);
  REQUIRE(study.fit_valid);
  CHECK(study.fit.slope > -0.8);
  CHECK(study.fit.slope < -0.2);
  // Normalized at the first ladder point, estimates stay below 10x the
  // reference curve.
  for (std::size_t j = 0; j < ns.size(); ++j) {
    const double est = study.errors[j] / study.errors[0];
    const double ref = study.reference[j] / study.reference[0];
    CHECK(est <= 10.0 * ref);
  }
}

TEST_CASE("tail estimates are monotone in the threshold with exact intervals") {
  const StudyScenario sc = direct_gaussian_scenario(123);
  const std::size_t n = 32;
  const std::size_t node = 8;
  const std::size_t reps = 200;
  // Calibrate thresholds on an independent replication window.
  std::vector<double> calib = sample_distances(sc, node, n, 1.0, reps, reps);
  std::sort(calib.begin(), calib.end());
  const double p20 = calib[39];
  const double p80 = calib[159];
  const std::vector<double> epsilons = {0.0, p20, p80, 100.0};
  const std::vector<TailEstimate> tails = estimate_tail(sc, node, n, 1.0, epsilons, reps);
  REQUIRE(tails.size() == 4);
  CHECK(tails[0].probability == 1.0);
  CHECK(tails[0].hits == reps);
  CHECK(tails[3].probability == 0.0);
  for (std::size_t j = 1; j < tails.size(); ++j) {
    CHECK(tails[j].probability <= tails[j - 1].probability);
  }
  for (const TailEstimate& t : tails) {
    CHECK(t.ci_low <= t.probability);
    CHECK(t.probability <= t.ci_high);
    CHECK(t.reference_a >= 0.0);  // extreme thresholds underflow to zero
    CHECK(t.reference_a <= 1.0);
  }
  CHECK(std::abs(tails[1].probability - 0.8) <= 0.08);
  CHECK(std::abs(tails[2].probability - 0.2) <= 0.08);
}

TEST_CASE("tail estimates do not increase when the system grows") {
  const StudyScenario sc = direct_gaussian_scenario(321);
  const std::size_t node = 8;
  const std::size_t reps = 200;
  std::vector<double> calib = sample_distances(sc, node, 16, 1.0, reps, reps);
  std::sort(calib.begin(), calib.end());
  const std::vector<double> epsilons = {calib[99]};
  const auto small = estimate_tail(sc, node, 16, 1.0, epsilons, reps);
  const auto large = estimate_tail(sc, node, 32, 1.0, epsilons, reps);
  CHECK(large[0].probability <= small[0].probability);
}

TEST_CASE("tail study refuses starved replication budgets") {
  const StudyScenario sc = direct_gaussian_scenario(5);
  const std::vector<double> epsilons = {0.5};
  try {
    estimate_tail(sc, 8, 64, 1.0, epsilons, 10);
    CHECK(false);
  } catch (const std::invalid_argument& err) {
    CHECK(std::string(err.what()).find("precondition") != std::string::npos);
  }
}

TEST_CASE("process error on a pair-kernel scenario decays like one over n") {
  const StudyScenario sc = mean_kernel_scenario(404);
  const std::vector<std::size_t> ns = {8, 16, 32, 64};
  const RateStudy study = estimate_process_error(sc, ns, 16);
  REQUIRE(study.fit_valid);
  CHECK(study.fit.slope > -1.4);
  CHECK(study.fit.slope < -0.6);
  CHECK(study.reference[0] == 0.125);
  REQUIRE(study.y_samples.size() == ns.size());
  for (std::size_t j = 0; j < ns.size(); ++j) {
    REQUIRE(study.y_samples[j].size() == 16);
    for (std::size_t r = 0; r < 16; ++r) {
      CHECK(study.y_samples[j][r] <= study.samples[j][r]);
    }
  }
}

TEST_CASE("law-independent scenarios leave only regression noise in the gap") {
  StudyScenario sc = mean_interaction_scenario(13);
  sc.interaction = make_null_interaction();
  sc.terminal = make_terminal_affine(0.2, 1.0);
  sc.rate.q = 3.0;  // reference curve is evaluated at order 2
  sc.rate.k = 4.0;
  const std::vector<std::size_t> ns = {8, 32};
  const RateStudy study = estimate_process_error(sc, ns, 8);
  CHECK(study.errors[0] < 0.5);
  CHECK(study.errors[1] < study.errors[0]);
}

TEST_CASE("single-particle block bound matches the process-error state component") {
  const StudyScenario sc = mean_kernel_scenario(55);
  const std::vector<std::size_t> ns = {6};
  const std::size_t reps = 8;
  const RateStudy study = estimate_process_error(sc, ns, reps);
  const double block = chaos_block_bound(sc, 6, 1, reps);
  ExactSum acc;
  for (double y : study.y_samples[0]) acc.add(y);
  CHECK(block == acc.round() / static_cast<double>(reps));
}

TEST_CASE("block bound scales linearly in the block size") {
  const StudyScenario sc = mean_kernel_scenario(812);
  const std::size_t reps = 64;
  const double one = chaos_block_bound(sc, 8, 1, reps);
  const double four = chaos_block_bound(sc, 8, 4, reps);
  REQUIRE(one > 0.0);
  const double ratio = four / one;
  CHECK(ratio > 3.2);
  CHECK(ratio < 4.8);
}

TEST_CASE("block bound is exactly zero for a deterministic terminal") {
  const StudyScenario sc = deterministic_scenario(2);
  CHECK(chaos_block_bound(sc, 8, 8, 4) == 0.0);
}

TEST_CASE("block ladder reproduces the scalar bound point by point") {
  const StudyScenario sc = mean_kernel_scenario(313);
  const std::vector<std::size_t> ns = {4, 8};
  const std::size_t reps = 6;
  const RateStudy study = estimate_block_bounds(sc, ns, 2, reps);
  REQUIRE(study.ns == ns);
  // Same replication keys, same exact-sum order: the ladder means are
  // bit-identical to the standalone bound.
  for (std::size_t j = 0; j < ns.size(); ++j) {
    CHECK(study.errors[j] == chaos_block_bound(sc, ns[j], 2, reps));
    CHECK(study.stderrs[j] > 0.0);
    // Pair-kernel scenario: the reference is k_block times the 1/n curve.
    CHECK(study.reference[j] == 2.0 / static_cast<double>(ns[j]));
  }
  CHECK_THROWS_AS(estimate_block_bounds(sc, ns, 5, reps), std::invalid_argument);
  CHECK_THROWS_AS(estimate_block_bounds(sc, ns, 0, reps), std::invalid_argument);
}

TEST_CASE("empirical mean approaches the exponential flow as n grows") {
  // Strong-law check at the initial node over a ladder with common seeds.
  const double target = std::exp(0.5);
  const InteractionSpec spec = make_mean_linear(0.5);
  const TerminalSpec terminal = make_terminal_affine(1.0, 1.0);
  const BasisSpec basis = study_basis();
  const TimeGrid grid = make_grid(1.0, 32);
  const std::vector<std::size_t> ns = {8, 32, 128, 512};
  const std::size_t reps = 16;
  std::vector<double> deviation;
  for (std::size_t n : ns) {
    ExactSum acc;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const BrownianBundle bundle = sample_brownian(
          9177, replication_tag(StreamPurpose::system_paths, static_cast<std::uint32_t>(rep)),
          static_cast<int>(4 * n), 1, grid);
      SchemeParams params;
      params.group_size = n;
      const SystemSolution sys = solve_interacting(spec, terminal, bundle, basis, params);
      acc.add(std::abs(mean_of(sys.group_slice(0, 0)) - target));
    }
    deviation.push_back(acc.round() / static_cast<double>(reps));
  }
  for (std::size_t j = 1; j < deviation.size(); ++j) {
    CHECK(deviation[j] < deviation[j - 1]);
  }
}

TEST_CASE("standard errors halve when replications quadruple") {
  const StudyScenario sc = direct_gaussian_scenario(64);
  const std::vector<std::size_t> ns = {16, 32, 64, 128};
  const RateStudy lean = estimate_marginal_chaos(sc, sc.steps, ns, 40, 1.0);
  const RateStudy rich = estimate_marginal_chaos(sc, sc.steps, ns, 160, 1.0);
  ExactSum acc;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    acc.add(lean.stderrs[j] / rich.stderrs[j]);
  }
  const double mean_ratio = acc.round() / 4.0;
  CHECK(mean_ratio > 1.4);
  CHECK(mean_ratio < 2.6);
}

TEST_CASE("study inputs are validated") {
  const StudyScenario direct = direct_gaussian_scenario(1);
  const std::vector<std::size_t> ns = {8, 16, 32, 64};
  const std::vector<std::size_t> bad = {8, 8, 16, 32};
  CHECK_THROWS_AS(estimate_marginal_chaos(direct, 4, ns, 29, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_marginal_chaos(direct, 4, bad, 30, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_marginal_chaos(direct, 99, ns, 30, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_marginal_chaos(direct, 4, ns, 30, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(estimate_process_error(direct, ns, 8), std::invalid_argument);
  const StudyScenario solver = mean_kernel_scenario(1);
  CHECK_THROWS_AS(chaos_block_bound(solver, 4, 5, 4), std::invalid_argument);
  CHECK_THROWS_AS(chaos_block_bound(solver, 4, 0, 4), std::invalid_argument);
}
