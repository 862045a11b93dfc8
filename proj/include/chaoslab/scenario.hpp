#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaoslab/chaos_estimators.hpp"
#include "chaoslab/pde.hpp"
#include "chaoslab/rates.hpp"

namespace chaoslab {

// Structured-text experiment configuration.  A scenario file is the
// reproducibility artifact: it names the system, the coefficient presets, the
// grid, the sampling layout, and the reference-curve parameters, and every
// field it omits is filled with a documented default before anything runs.

// Raised when the file is not valid YAML or a field has the wrong shape;
// validation problems (bad ranges, unknown presets) use invalid_argument.
struct ScenarioParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SystemKind { interacting, linear_interaction, mkv, pde };

std::string kind_name(SystemKind kind);

// A named coefficient preset with its scalar parameters (defaults filled).
struct PresetConfig {
  std::string preset;
  std::map<std::string, double> parameters;
};

struct GridConfig {
  double horizon = 1.0;
  int steps = 64;
};

struct SizesConfig {
  std::vector<std::size_t> ns;  // particle-count ladder (may be empty)
  std::size_t cloud = 4096;     // reference / limit cloud size
  std::size_t reps = 64;        // replications per ladder point
  std::size_t batch = 16;       // systems solved jointly per replication
  std::size_t coupling = 4;     // limit-bundle size multiplier for couplings
};

// Regression settings shared by every solver a scenario reaches.
struct RegressionBlock {
  int degree = 3;
  bool group_mean = true;  // condition on the interaction group's state mean
  int group_degree = 1;
  double ridge = 1e-8;
};

struct PicardBlock {
  double tol = 1e-4;
  int max_iters = 50;
};

// Knobs specific to the estimator subcommands.
struct StudyConfig {
  double node_time = -1.0;        // study node; negative resolves to T/2
  double order = 1.0;             // W_p order for distance statistics
  std::size_t block = 1;          // block size for the blocks subcommand
  std::vector<double> epsilons;   // thresholds for the tails subcommand
  std::string process_reference;  // "moment" | "inverse"; empty = by kind
};

// Inputs of the transport subcommand: two point clouds in CSV form.
struct TransportConfig {
  bool configured = false;
  std::string cloud_a;
  std::string cloud_b;
  std::string method = "assignment";  // assignment | sorted | entropic | path-sup
  double order = 2.0;
  double reg = 0.05;
  int iterations = 500;
};

struct Scenario {
  std::string name;
  SystemKind kind = SystemKind::mkv;
  PresetConfig driver;
  PresetConfig terminal;
  int m = 1;  // driving Brownian dimension
  int d = 1;  // forward state dimension (pde systems)
  GridConfig grid;
  SizesConfig sizes;
  RateParams rate;  // the n field is ignored; set per evaluation
  double tail_delta = 0.0;
  RegressionBlock regression;
  PicardBlock picard;
  StudyConfig study;
  TransportConfig transport;
  std::uint64_t seed = 0;
};

// Parse + validate.  Unknown keys, unknown presets, and out-of-range values
// are rejected with messages naming the offending field.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

// Canonical rendering: every field (defaults included) on its own line in a
// fixed order, numbers printed round-trip exact.  Two files that parse to the
// same configuration render identically regardless of key order.
std::string canonical_scenario(const Scenario& scenario);

// Hex SHA-256 of the canonical rendering.
std::string scenario_hash(const Scenario& scenario);

// Hex SHA-256 of arbitrary bytes (content digests of inputs and payloads).
std::string sha256_hex(std::string_view bytes);

// Registered preset names, for error messages and documentation.
const std::vector<std::string>& interaction_preset_names();
const std::vector<std::string>& terminal_preset_names();
const std::vector<std::string>& pde_preset_names();

// Instantiate the presets a scenario names.
InteractionSpec build_interaction(const PresetConfig& config);
TerminalSpec build_terminal(const PresetConfig& config);

// Assemble the estimator-facing study description (non-pde kinds).
StudyScenario build_study(const Scenario& scenario);

// Assemble the forward/backward scenario (pde kind only).
PdeScenario build_pde(const Scenario& scenario);

}  // namespace chaoslab
