#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaoslab/scenario.hpp"

namespace chaoslab {

// One experiment run: load a scenario file, dispatch a subcommand, persist a
// CSV payload plus a JSON sidecar under an output directory keyed by the
// scenario hash.  The CSV bytes are a pure function of (scenario file
// contents, effective seed, code version); the sidecar additionally records
// the timestamp and machine-readable error information.

inline constexpr const char* kCodeVersion = "chaoslab 0.1.0";
inline constexpr const char* kSeedEnvVar = "CHAOSLAB_SEED";

struct RunOptions {
  std::string scenario_path;
  std::string subcommand;
  std::string out_dir = "results";
  bool seed_overridden = false;  // --seed beats the environment variable
  std::uint64_t seed = 0;
  int threads = 1;  // recorded in the sidecar; reductions are order-exact
  bool emit_svg = true;
};

struct RunOutcome {
  int exit_code = 0;
  std::string error_code;  // empty | io | config_parse | config_validation |
                           // precondition | solver
  std::string message;
  std::string scenario_hash;
  std::string output_dir;
  std::string csv_path;
  std::string sidecar_path;
  std::string csv_digest;  // hex SHA-256 of the CSV bytes
};

const std::vector<std::string>& runner_subcommands();

RunOutcome run_scenario(const RunOptions& options);

}  // namespace chaoslab
