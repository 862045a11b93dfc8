#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaoslab/time_grid.hpp"

namespace chaoslab {

// n x N x d field of Brownian increments, N(0, dt) per component.
//
// Increment (particle i, step k, component c) is derived from a dedicated
// counter, keyed by (seed, replication_id), so:
//   * identical arguments reproduce the array bit-exactly,
//   * extending n (or d, or N) keeps existing entries unchanged,
//   * any sub-array can be regenerated in isolation.
struct BrownianBundle {
  TimeGrid grid;
  int particles = 0;
  int dimension = 1;
  std::uint64_t seed = 0;
  std::uint32_t replication_id = 0;

  // Layout: particle-major, ((i * N) + k) * d + c.
  std::vector<double> increments;

  double increment(int i, int k, int c = 0) const {
    return increments[(static_cast<std::size_t>(i) * grid.steps + k) * dimension + c];
  }

  // Brownian value at node k (sum of increments over steps < k).
  double value_at(int i, int k, int c = 0) const;

  // Little-endian 64-bit floats, particle-major (same order as `increments`).
  void dump_binary(const std::string& path) const;
  void dump_csv(const std::string& path) const;
};

BrownianBundle sample_brownian(std::uint64_t seed, std::uint32_t replication_id, int particles,
                               int dimension, const TimeGrid& grid);

// Replication identifiers are partitioned by purpose so distinct uses of the
// same seed never share counters.
enum class StreamPurpose : std::uint32_t {
  system_paths = 0,
  reference_cloud = 1,
  reference_draws = 2,
  initial_draws = 3,
};

std::uint32_t replication_tag(StreamPurpose purpose, std::uint32_t index);

// Replication index carried inside a tag (the purpose byte stripped).
std::uint32_t replication_index(std::uint32_t tag);

// Deterministic uniform stream for auxiliary draws (e.g. resampling indices),
// keyed like the bundle but under its own purpose tag.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint32_t replication_id)
      : seed_(seed), replication_id_(replication_id) {}

  // j-th uniform in (0,1) of this stream.
  double uniform(std::uint64_t j) const;

  // j-th uniform index in {0, ..., n-1}.
  int uniform_index(std::uint64_t j, int n) const;

 private:
  std::uint64_t seed_;
  std::uint32_t replication_id_;
};

}  // namespace chaoslab
