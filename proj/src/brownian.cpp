#include "chaoslab/brownian.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "chaoslab/exact_sum.hpp"
#include "chaoslab/normal.hpp"
#include "chaoslab/philox.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary dumps assume a little-endian host");

namespace chaoslab {

TimeGrid make_grid(double horizon, int steps) {
  if (!(horizon > 0.0)) throw std::invalid_argument("make_grid: horizon must be positive");
  if (steps < 1) throw std::invalid_argument("make_grid: steps must be >= 1");
  TimeGrid g;
  g.horizon = horizon;
  g.steps = steps;
  g.dt = horizon / steps;
  g.nodes.resize(steps + 1);
  g.nodes[0] = 0.0;
  for (int k = 1; k < steps; ++k) g.nodes[k] = (horizon * k) / steps;
  g.nodes[steps] = horizon;
  return g;
}

int nearest_node(const TimeGrid& grid, double t) {
  if (!(t >= 0.0 && t <= grid.horizon)) throw std::invalid_argument("nearest_node: t outside [0,T]");
  int best = 0;
  double best_gap = std::fabs(grid.nodes[0] - t);
  for (int k = 1; k <= grid.steps; ++k) {
    const double gap = std::fabs(grid.nodes[k] - t);
    if (gap < best_gap) {
      best = k;
      best_gap = gap;
    }
  }
  return best;
}

double BrownianBundle::value_at(int i, int k, int c) const {
  ExactSum acc;
  for (int j = 0; j < k; ++j) acc.add(increment(i, j, c));
  return acc.round();
}

BrownianBundle sample_brownian(std::uint64_t seed, std::uint32_t replication_id, int particles,
                               int dimension, const TimeGrid& grid) {
  if (particles < 1) throw std::invalid_argument("sample_brownian: particles must be >= 1");
  if (dimension < 1) throw std::invalid_argument("sample_brownian: dimension must be >= 1");

  BrownianBundle b;
  b.grid = grid;
  b.particles = particles;
  b.dimension = dimension;
  b.seed = seed;
  b.replication_id = replication_id;
  b.increments.resize(static_cast<std::size_t>(particles) * grid.steps * dimension);

  const auto key = philox_key(seed);
  const double scale = std::sqrt(grid.dt);
  const int blocks = (dimension + 1) / 2;

  std::size_t out = 0;
  for (int i = 0; i < particles; ++i) {
    for (int k = 0; k < grid.steps; ++k) {
      for (int blk = 0; blk < blocks; ++blk) {
        const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(blk),
                                         static_cast<std::uint32_t>(k),
                                         static_cast<std::uint32_t>(i), replication_id};
        const auto u = philox_uniform2(ctr, key);
        b.increments[out++] = scale * inverse_normal_cdf(u[0]);
        if (2 * blk + 1 < dimension) b.increments[out++] = scale * inverse_normal_cdf(u[1]);
      }
    }
  }
  return b;
}

void BrownianBundle::dump_binary(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("dump_binary: cannot open " + path);
  const std::size_t written =
      std::fwrite(increments.data(), sizeof(double), increments.size(), f);
  std::fclose(f);
  if (written != increments.size()) throw std::runtime_error("dump_binary: short write to " + path);
}

void BrownianBundle::dump_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("dump_csv: cannot open " + path);
  std::fprintf(f, "particle,step,component,increment\n");
  for (int i = 0; i < particles; ++i)
    for (int k = 0; k < grid.steps; ++k)
      for (int c = 0; c < dimension; ++c)
        std::fprintf(f, "%d,%d,%d,%.17g\n", i, k, c, increment(i, k, c));
  std::fclose(f);
}

std::uint32_t replication_tag(StreamPurpose purpose, std::uint32_t index) {
  if (index >= (1u << 24)) throw std::invalid_argument("replication_tag: index exceeds 2^24");
  return (static_cast<std::uint32_t>(purpose) << 24) | index;
}

std::uint32_t replication_index(std::uint32_t tag) { return tag & 0x00FFFFFFu; }

double UniformStream::uniform(std::uint64_t j) const {
  const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(j & 0xFFFFFFFFu),
                                   static_cast<std::uint32_t>(j >> 32), 0xA5A5A5A5u,
                                   replication_id_};
  return philox_uniform2(ctr, philox_key(seed_))[0];
}

int UniformStream::uniform_index(std::uint64_t j, int n) const {
  if (n < 1) throw std::invalid_argument("uniform_index: n must be >= 1");
  int idx = static_cast<int>(uniform(j) * n);
  if (idx >= n) idx = n - 1;  // guards the u -> 1 edge
  return idx;
}

}  // namespace chaoslab
