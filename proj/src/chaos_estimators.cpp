#include "chaoslab/chaos_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/beta.hpp>

#include "chaoslab/brownian.hpp"
#include "chaoslab/exact_sum.hpp"
#include "chaoslab/transport.hpp"

namespace chaoslab {

namespace {

void validate_order(double p) {
  if (!(p >= 1.0 && p <= 2.0)) {
    throw std::invalid_argument("chaos study: order p must lie in [1, 2]");
  }
}

void validate_ladder(std::span<const std::size_t> ns) {
  if (ns.empty()) throw std::invalid_argument("chaos study: empty particle-count ladder");
  std::size_t prev = 0;
  for (std::size_t n : ns) {
    if (n < 1 || n <= prev) {
      throw std::invalid_argument(
          "chaos study: particle counts must be positive and strictly increasing");
    }
    prev = n;
  }
}

TimeGrid study_grid(const StudyScenario& sc) {
  return make_grid(sc.horizon, static_cast<int>(sc.steps));
}

// Limit solution shared by every replication of a study.
MkvSolution solve_reference(const StudyScenario& sc) {
  if (sc.reference_cloud_size < 2) {
    throw std::invalid_argument("chaos study: reference cloud needs >= 2 particles");
  }
  const TimeGrid grid = study_grid(sc);
  const BrownianBundle bundle =
      sample_brownian(sc.seed, replication_tag(StreamPurpose::reference_cloud, 0),
                      static_cast<int>(sc.reference_cloud_size), sc.dimension, grid);
  return solve_mkv(sc.interaction, sc.terminal, bundle, sc.basis, sc.mkv);
}

// Group-0 system values and the node-matched comparison-cloud values of one
// replication, node-major.  Both studies that compare marginals are built on
// this one routine, so common-seed runs see identical samples.
struct Realization {
  std::size_t n = 0;
  std::size_t nodes = 0;
  std::vector<double> system;
  std::vector<double> reference;

  std::span<const double> sys_at(std::size_t k) const {
    return {system.data() + k * n, n};
  }
  std::span<const double> ref_at(std::size_t k) const {
    return {reference.data() + k * n, n};
  }
};

Realization realize(const StudyScenario& sc, std::size_t n, std::uint32_t rep,
                    const MkvSolution* limit) {
  const TimeGrid grid = study_grid(sc);
  const std::size_t nodes = sc.steps + 1;
  Realization out;
  out.n = n;
  out.nodes = nodes;
  out.system.resize(nodes * n);
  out.reference.resize(nodes * n);

  if (sc.direct_gaussian) {
    if (sc.dimension != 1) {
      throw std::invalid_argument("direct martingale scenario is one-dimensional");
    }
    // Martingale scenario: the solution value at a node is the Brownian value
    // there, and the limit law is sampled by fresh i.i.d. paths.
    const BrownianBundle sys =
        sample_brownian(sc.seed, replication_tag(StreamPurpose::system_paths, rep),
                        static_cast<int>(n), 1, grid);
    const BrownianBundle ref =
        sample_brownian(sc.seed, replication_tag(StreamPurpose::reference_draws, rep),
                        static_cast<int>(n), 1, grid);
    for (std::size_t i = 0; i < n; ++i) {
      double sys_val = 0.0;
      double ref_val = 0.0;
      out.system[i] = 0.0;
      out.reference[i] = 0.0;
      for (std::size_t k = 1; k < nodes; ++k) {
        sys_val += sys.increment(static_cast<int>(i), static_cast<int>(k) - 1, 0);
        ref_val += ref.increment(static_cast<int>(i), static_cast<int>(k) - 1, 0);
        out.system[k * n + i] = sys_val;
        out.reference[k * n + i] = ref_val;
      }
    }
    return out;
  }

  if (limit == nullptr) {
    throw std::logic_error("chaos study: missing pre-solved limit solution");
  }
  const std::size_t batch = std::max<std::size_t>(1, sc.system_batch);
  const BrownianBundle bundle =
      sample_brownian(sc.seed, replication_tag(StreamPurpose::system_paths, rep),
                      static_cast<int>(batch * n), sc.dimension, grid);
  SchemeParams params = sc.scheme;
  params.group_size = n;
  const SystemSolution sys =
      solve_interacting(sc.interaction, sc.terminal, bundle, sc.basis, params);

  const UniformStream draws(sc.seed,
                            replication_tag(StreamPurpose::reference_draws, rep));
  std::vector<int> index(n);
  for (std::size_t j = 0; j < n; ++j) {
    index[j] = draws.uniform_index(j, static_cast<int>(limit->cloud_size));
  }
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::span<const double> slice = sys.group_slice(k, 0);
    std::copy(slice.begin(), slice.end(), out.system.begin() + k * n);
    for (std::size_t j = 0; j < n; ++j) {
      out.reference[k * n + j] = limit->core.y_at(k, index[j]);
    }
  }
  return out;
}

double node_power_distance(const Realization& r, std::size_t k, double p) {
  return std::pow(wasserstein_1d(r.sys_at(k), r.ref_at(k), p), p);
}

double sup_power_distance(const Realization& r, double p) {
  double out = 0.0;
  for (std::size_t k = 0; k < r.nodes; ++k) {
    out = std::max(out, node_power_distance(r, k, p));
  }
  return out;
}

void append_point(RateStudy& out, std::size_t n, std::vector<double> samples,
                  double reference) {
  if (samples.empty()) {
    throw std::runtime_error("chaos study: every replication failed at n = " +
                             std::to_string(n));
  }
  ExactSum acc;
  for (double s : samples) acc.add(s);
  const double mean = acc.round() / static_cast<double>(samples.size());
  double stderr_mean = 0.0;
  if (samples.size() >= 2) {
    ExactSum dev;
    for (double s : samples) dev.add((s - mean) * (s - mean));
    const double var = dev.round() / static_cast<double>(samples.size() - 1);
    stderr_mean = std::sqrt(var / static_cast<double>(samples.size()));
  }
  out.ns.push_back(n);
  out.errors.push_back(mean);
  out.stderrs.push_back(stderr_mean);
  out.reference.push_back(reference);
  out.samples.push_back(std::move(samples));
}

void finalize_fit(RateStudy& out) {
  if (out.ns.size() < 4) return;
  for (double e : out.errors) {
    if (!(e > 0.0)) return;
  }
  std::vector<double> ns_real(out.ns.begin(), out.ns.end());
  out.fit = fit_rate(ns_real, out.errors);
  out.fit_valid = true;
}

RateParams rate_params_at(const StudyScenario& sc, std::size_t n, double p) {
  RateParams params = sc.rate;
  params.n = n;
  params.p = p;
  return params;
}

// Per-particle gap components between the n-particle system and its limit
// copies on shared Brownian paths, for the first group.
struct CoupledGaps {
  std::vector<double> sup_y2;
  std::vector<double> z_int2;
};

CoupledGaps coupled_gaps(const StudyScenario& sc, const DriverSpec& driver,
                         const MkvSolution& limit, std::size_t n, std::uint32_t rep) {
  const TimeGrid grid = study_grid(sc);
  const std::size_t batch = std::max<std::size_t>(1, sc.system_batch);
  const std::size_t multiple = std::max<std::size_t>(1, sc.coupling_multiple);

  const BrownianBundle system_bundle =
      sample_brownian(sc.seed, replication_tag(StreamPurpose::system_paths, rep),
                      static_cast<int>(batch * n), sc.dimension, grid);
  SchemeParams params = sc.scheme;
  params.group_size = n;
  const SystemSolution sys =
      solve_interacting(sc.interaction, sc.terminal, system_bundle, sc.basis, params);

  // Same purpose tag, larger bundle: the first batch x n paths coincide with
  // the system's, which is exactly the coupling.
  const BrownianBundle limit_bundle =
      sample_brownian(sc.seed, replication_tag(StreamPurpose::system_paths, rep),
                      static_cast<int>(multiple * batch * n), sc.dimension, grid);
  SolveOptions options;
  options.regression = sc.scheme.regression;
  if (driver.depends_on_law) options.law_flow = &limit.law_flow;
  const BsdeSolution tilde =
      solve_backward(driver, sc.terminal, limit_bundle, sc.basis, options);

  CoupledGaps gaps;
  gaps.sup_y2.assign(n, 0.0);
  gaps.z_int2.assign(n, 0.0);
  const std::size_t nodes = sc.steps + 1;
  const int dim = sc.dimension;
  for (std::size_t i = 0; i < n; ++i) {
    double sup = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      const double diff = sys.core.y_at(k, i) - tilde.y_at(k, i);
      sup = std::max(sup, diff * diff);
    }
    double zsum = 0.0;
    for (std::size_t k = 0; k + 1 < nodes; ++k) {
      const std::span<const double> zs = sys.core.z_at(k, i);
      const std::span<const double> zt = tilde.z_at(k, i);
      for (int c = 0; c < dim; ++c) {
        const double diff = zs[c] - zt[c];
        zsum += diff * diff;
      }
    }
    gaps.sup_y2[i] = sup;
    gaps.z_int2[i] = grid.dt * zsum;
  }
  return gaps;
}

}  // namespace

RateStudy estimate_marginal_chaos(const StudyScenario& sc, std::size_t node,
                                  std::span<const std::size_t> ns, std::size_t reps,
                                  double p) {
  validate_order(p);
  validate_ladder(ns);
  if (node > sc.steps) throw std::invalid_argument("chaos study: node beyond the grid");
  if (reps < 30) throw std::invalid_argument("chaos study: needs at least 30 replications");

  MkvSolution limit;
  if (!sc.direct_gaussian) limit = solve_reference(sc);

  RateStudy out;
  out.reps = reps;
  for (std::size_t n : ns) {
    std::vector<double> samples;
    samples.reserve(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      try {
        const Realization r = realize(sc, n, static_cast<std::uint32_t>(rep),
                                      sc.direct_gaussian ? nullptr : &limit);
        samples.push_back(node_power_distance(r, node, p));
      } catch (const std::invalid_argument&) {
        throw;  // scenario misconfiguration, not a per-replication failure
      } catch (const std::exception&) {
        ++out.excluded;
      }
    }
    append_point(out, n, std::move(samples), rate_reference(rate_params_at(sc, n, p)));
  }
  finalize_fit(out);
  return out;
}

RateStudy estimate_sup_chaos(const StudyScenario& sc, std::span<const std::size_t> ns,
                             std::size_t reps, double p) {
  validate_order(p);
  validate_ladder(ns);
  if (reps < 30) throw std::invalid_argument("chaos study: needs at least 30 replications");

  MkvSolution limit;
  if (!sc.direct_gaussian) limit = solve_reference(sc);

  RateStudy out;
  out.reps = reps;
  for (std::size_t n : ns) {
    std::vector<double> samples;
    samples.reserve(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      try {
        const Realization r = realize(sc, n, static_cast<std::uint32_t>(rep),
                                      sc.direct_gaussian ? nullptr : &limit);
        samples.push_back(sup_power_distance(r, p));
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception&) {
        ++out.excluded;
      }
    }
    append_point(out, n, std::move(samples),
                 sup_rate_reference(n, sc.rate.m, p));
  }
  finalize_fit(out);
  return out;
}

std::vector<double> sample_distances(const StudyScenario& sc, std::size_t node,
                                     std::size_t n, double p, std::size_t reps,
                                     std::uint64_t replication_offset) {
  validate_order(p);
  if (n < 1) throw std::invalid_argument("chaos study: n must be positive");
  if (node > sc.steps) throw std::invalid_argument("chaos study: node beyond the grid");
  if (reps < 1) throw std::invalid_argument("chaos study: needs replications");

  MkvSolution limit;
  if (!sc.direct_gaussian) limit = solve_reference(sc);

  std::vector<double> out;
  out.reserve(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const auto tag = static_cast<std::uint32_t>(replication_offset + rep);
    const Realization r = realize(sc, n, tag, sc.direct_gaussian ? nullptr : &limit);
    out.push_back(wasserstein_1d(r.sys_at(node), r.ref_at(node), p));
  }
  return out;
}

std::vector<TailEstimate> estimate_tail(const StudyScenario& sc, std::size_t node,
                                        std::size_t n, double p,
                                        std::span<const double> epsilons,
                                        std::size_t reps) {
  validate_order(p);
  if (epsilons.empty()) throw std::invalid_argument("tail study: empty threshold list");
  for (double eps : epsilons) {
    if (!(eps >= 0.0)) throw std::invalid_argument("tail study: thresholds must be >= 0");
  }
  if (reps < 1) throw std::invalid_argument("tail study: needs replications");

  const double eps_min = *std::min_element(epsilons.begin(), epsilons.end());
  const double floor_tail = tail_envelope_a(n, eps_min, sc.rate.m, p);
  if (static_cast<double>(reps) * floor_tail < 5.0) {
    throw std::invalid_argument(
        "tail study precondition: reps x expected tail at the smallest threshold = " +
        std::to_string(static_cast<double>(reps) * floor_tail) +
        " < 5; increase reps or raise the thresholds");
  }

  const std::vector<double> distances = sample_distances(sc, node, n, p, reps, 0);
  const double delta = sc.tail_delta > 0.0 ? sc.tail_delta : sc.rate.k / 10.0;

  std::vector<TailEstimate> out;
  out.reserve(epsilons.size());
  for (double eps : epsilons) {
    TailEstimate est;
    est.epsilon = eps;
    est.reps = reps;
    for (double d : distances) {
      if (d >= eps) ++est.hits;
    }
    est.probability = static_cast<double>(est.hits) / static_cast<double>(reps);
    const double a = 0.05;
    if (est.hits == 0) {
      est.ci_low = 0.0;
    } else {
      boost::math::beta_distribution<double> lower(
          static_cast<double>(est.hits), static_cast<double>(reps - est.hits + 1));
      est.ci_low = boost::math::quantile(lower, a / 2.0);
    }
    if (est.hits == reps) {
      est.ci_high = 1.0;
    } else {
      boost::math::beta_distribution<double> upper(
          static_cast<double>(est.hits + 1), static_cast<double>(reps - est.hits));
      est.ci_high = boost::math::quantile(upper, 1.0 - a / 2.0);
    }
    est.reference_a = tail_envelope_a(n, eps, sc.rate.m, p);
    est.reference_b = eps > 0.0 ? tail_envelope_b(n, eps, sc.rate.k, p, delta)
                                : std::numeric_limits<double>::infinity();
    out.push_back(est);
  }
  return out;
}

RateStudy estimate_process_error(const StudyScenario& sc,
                                 std::span<const std::size_t> ns, std::size_t reps) {
  validate_ladder(ns);
  if (sc.direct_gaussian) {
    throw std::invalid_argument("process-error study needs a solver-backed scenario");
  }
  if (reps < 2) throw std::invalid_argument("chaos study: needs at least 2 replications");

  const MkvSolution limit = solve_reference(sc);
  const DriverSpec driver = interaction_driver(sc.interaction);

  RateStudy out;
  out.reps = reps;
  for (std::size_t n : ns) {
    std::vector<double> samples;
    std::vector<double> y_samples;
    samples.reserve(reps);
    y_samples.reserve(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      try {
        const CoupledGaps gaps =
            coupled_gaps(sc, driver, limit, n, static_cast<std::uint32_t>(rep));
        samples.push_back(gaps.sup_y2[0] + gaps.z_int2[0]);
        y_samples.push_back(gaps.sup_y2[0]);
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception&) {
        ++out.excluded;
      }
    }
    const double reference = sc.process_reference == ProcessReference::inverse_n
                                 ? 1.0 / static_cast<double>(n)
                                 : rate_reference(rate_params_at(sc, n, 2.0));
    append_point(out, n, std::move(samples), reference);
    out.y_samples.push_back(std::move(y_samples));
  }
  finalize_fit(out);
  return out;
}

double chaos_block_bound(const StudyScenario& sc, std::size_t n, std::size_t k_block,
                         std::size_t reps) {
  if (sc.direct_gaussian) {
    throw std::invalid_argument("block study needs a solver-backed scenario");
  }
  if (n < 1) throw std::invalid_argument("block study: n must be positive");
  if (k_block < 1 || k_block > n) {
    throw std::invalid_argument("block study: k_block must lie in [1, n]");
  }
  if (reps < 1) throw std::invalid_argument("block study: needs replications");

  const MkvSolution limit = solve_reference(sc);
  const DriverSpec driver = interaction_driver(sc.interaction);

  ExactSum acc;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const CoupledGaps gaps =
        coupled_gaps(sc, driver, limit, n, static_cast<std::uint32_t>(rep));
    ExactSum block;
    for (std::size_t i = 0; i < k_block; ++i) block.add(gaps.sup_y2[i]);
    acc.add(block.round());
  }
  return acc.round() / static_cast<double>(reps);
}

RateStudy estimate_block_bounds(const StudyScenario& sc,
                                std::span<const std::size_t> ns,
                                std::size_t k_block, std::size_t reps) {
  validate_ladder(ns);
  if (sc.direct_gaussian) {
    throw std::invalid_argument("block study needs a solver-backed scenario");
  }
  if (k_block < 1 || k_block > ns.front()) {
    throw std::invalid_argument("block study: k_block must lie in [1, smallest n]");
  }
  if (reps < 2) throw std::invalid_argument("chaos study: needs at least 2 replications");

  const MkvSolution limit = solve_reference(sc);
  const DriverSpec driver = interaction_driver(sc.interaction);

  RateStudy out;
  out.reps = reps;
  for (std::size_t n : ns) {
    std::vector<double> samples;
    samples.reserve(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      try {
        const CoupledGaps gaps =
            coupled_gaps(sc, driver, limit, n, static_cast<std::uint32_t>(rep));
        ExactSum block;
        for (std::size_t i = 0; i < k_block; ++i) block.add(gaps.sup_y2[i]);
        samples.push_back(block.round());
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception&) {
        ++out.excluded;
      }
    }
    const double unit = sc.process_reference == ProcessReference::inverse_n
                            ? 1.0 / static_cast<double>(n)
                            : rate_reference(rate_params_at(sc, n, 2.0));
    append_point(out, n, std::move(samples), static_cast<double>(k_block) * unit);
  }
  finalize_fit(out);
  return out;
}

}  // namespace chaoslab
