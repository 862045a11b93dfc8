#include "chaoslab/scenario.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

namespace chaoslab {

namespace {

// ---- preset registries ----------------------------------------------------

struct PresetDef {
  std::string name;
  std::map<std::string, double> defaults;
};

const std::vector<PresetDef>& interaction_presets() {
  static const std::vector<PresetDef> presets{
      {"convolution", {{"scale", 1.0}}},
      {"direct-gaussian", {}},
      {"mean-kernel", {{"alpha", 0.5}}},
      {"mean-linear", {{"alpha", 0.5}}},
      {"mean-reversion", {{"speed", 1.0}}},
      {"null", {}},
  };
  return presets;
}

const std::vector<PresetDef>& terminal_presets() {
  static const std::vector<PresetDef> presets{
      {"affine", {{"base", 1.0}, {"spread", 1.0}, {"coordinate", 0.0}}},
      {"constant", {{"value", 1.0}}},
      {"supnorm", {{"base", 1.0}, {"scale", 1.0}}},
  };
  return presets;
}

const std::vector<PresetDef>& pde_presets() {
  static const std::vector<PresetDef> presets{
      {"affine", {{"beta", 1.0}, {"gamma", 1.0}}},
      {"constant", {{"value", 1.0}}},
      {"discounted", {{"beta", 1.0}, {"gamma", 1.0}, {"discount", 1.0}}},
  };
  return presets;
}

std::string joined_names(const std::vector<PresetDef>& presets) {
  std::string out;
  for (const PresetDef& p : presets) {
    if (!out.empty()) out += ", ";
    out += p.name;
  }
  return out;
}

const PresetDef& find_preset(const std::vector<PresetDef>& presets,
                             const std::string& name, const std::string& family) {
  for (const PresetDef& p : presets) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown " + family + " preset '" + name +
                              "'; registered presets: " + joined_names(presets));
}

// ---- YAML helpers ---------------------------------------------------------

void expect_map(const YAML::Node& node, const std::string& where) {
  if (!node.IsMap()) {
    throw ScenarioParseError("scenario: '" + where + "' must be a mapping");
  }
}

void expect_keys(const YAML::Node& node, const std::string& where,
                 std::initializer_list<const char*> keys) {
  for (const auto& entry : node) {
    const std::string key = entry.first.as<std::string>();
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) {
      throw ScenarioParseError("scenario: unknown field '" +
                               (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
T field_as(const YAML::Node& node, const std::string& name) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioParseError("scenario: field '" + name + "' has the wrong type");
  }
}

template <typename T>
void read_scalar(const YAML::Node& map, const char* key, const std::string& where,
                 T* out) {
  if (const YAML::Node node = map[key]) {
    *out = field_as<T>(node, where.empty() ? key : where + "." + std::string(key));
  }
}

template <typename T>
void read_list(const YAML::Node& map, const char* key, const std::string& where,
               std::vector<T>* out) {
  const YAML::Node node = map[key];
  if (!node) return;
  if (!node.IsSequence()) {
    throw ScenarioParseError("scenario: field '" + where + "." + key +
                             "' must be a list");
  }
  out->clear();
  for (const auto& entry : node) {
    out->push_back(field_as<T>(entry, where + "." + std::string(key) + " entry"));
  }
}

PresetConfig read_preset(const YAML::Node& node, const std::string& where,
                         const std::vector<PresetDef>& presets) {
  expect_map(node, where);
  const YAML::Node name = node["preset"];
  if (!name) {
    throw ScenarioParseError("scenario: '" + where + "' needs a 'preset' field");
  }
  PresetConfig out;
  out.preset = field_as<std::string>(name, where + ".preset");
  const PresetDef& def = find_preset(presets, out.preset, where);
  out.parameters = def.defaults;
  for (const auto& entry : node) {
    const std::string key = entry.first.as<std::string>();
    if (key == "preset") continue;
    if (def.defaults.find(key) == def.defaults.end()) {
      throw std::invalid_argument(where + " preset '" + out.preset +
                                  "' has no parameter '" + key + "'");
    }
    out.parameters[key] = field_as<double>(entry.second, where + "." + key);
  }
  return out;
}

double preset_parameter(const PresetConfig& config, const char* key) {
  const auto it = config.parameters.find(key);
  if (it == config.parameters.end()) {
    throw std::invalid_argument("preset '" + config.preset +
                                "' is missing parameter '" + key + "'");
  }
  return it->second;
}

// ---- validation -----------------------------------------------------------

void validate(const Scenario& sc) {
  if (sc.name.empty()) throw std::invalid_argument("scenario: name must not be empty");
  if (sc.m < 1) throw std::invalid_argument("dimensions: m must be >= 1");
  if (sc.d < 1) throw std::invalid_argument("dimensions: d must be >= 1");
  if (!(sc.grid.horizon > 0.0)) throw std::invalid_argument("grid: T must be positive");
  if (sc.grid.steps < 1) throw std::invalid_argument("grid: N must be >= 1");

  std::size_t prev = 0;
  for (std::size_t n : sc.sizes.ns) {
    if (n < 1 || n <= prev) {
      throw std::invalid_argument("sizes: ns must be positive and strictly increasing");
    }
    prev = n;
  }
  if (sc.sizes.cloud < 2) throw std::invalid_argument("sizes: cloud must be >= 2");
  if (sc.sizes.reps < 1) throw std::invalid_argument("sizes: reps must be >= 1");
  if (sc.sizes.batch < 1) throw std::invalid_argument("sizes: batch must be >= 1");
  if (sc.sizes.coupling < 1) throw std::invalid_argument("sizes: coupling must be >= 1");

  if (sc.rate.p < 1.0 || sc.rate.p > 2.0) {
    throw std::invalid_argument("rate params: order p must lie in [1, 2]");
  }
  if (!(sc.rate.p < sc.rate.q) || !(sc.rate.q < sc.rate.k)) {
    throw std::invalid_argument("rate params: must satisfy p<q<k");
  }
  if (sc.tail_delta < 0.0 || sc.tail_delta >= sc.rate.k) {
    throw std::invalid_argument("rate params: delta must lie in [0, k)");
  }

  if (sc.regression.degree < 1) {
    throw std::invalid_argument("regression: degree must be >= 1");
  }
  if (sc.regression.group_degree < 1) {
    throw std::invalid_argument("regression: group_degree must be >= 1");
  }
  if (sc.regression.ridge < 0.0) {
    throw std::invalid_argument("regression: ridge must be nonnegative");
  }
  if (!(sc.picard.tol > 0.0)) throw std::invalid_argument("picard: tol must be positive");
  if (sc.picard.max_iters < 1) {
    throw std::invalid_argument("picard: max_iters must be >= 1");
  }

  if (sc.study.order < 1.0 || sc.study.order > 2.0) {
    throw std::invalid_argument("study: order must lie in [1, 2]");
  }
  if (sc.study.block < 1) throw std::invalid_argument("study: block must be >= 1");
  if (sc.study.node_time < 0.0 || sc.study.node_time > sc.grid.horizon) {
    throw std::invalid_argument("study: t must lie in [0, T]");
  }
  for (double eps : sc.study.epsilons) {
    if (!(eps > 0.0)) throw std::invalid_argument("study: epsilons must be positive");
  }
  if (sc.study.process_reference != "moment" && sc.study.process_reference != "inverse") {
    throw std::invalid_argument(
        "study: process_reference must be 'moment' or 'inverse'");
  }

  if (sc.transport.configured) {
    if (sc.transport.cloud_a.empty() || sc.transport.cloud_b.empty()) {
      throw std::invalid_argument("transport: two input clouds required (fields a, b)");
    }
    const std::string& m = sc.transport.method;
    if (m != "assignment" && m != "sorted" && m != "entropic" && m != "path-sup") {
      throw std::invalid_argument(
          "transport: method must be one of assignment, sorted, entropic, path-sup");
    }
    if (sc.transport.order < 1.0 || sc.transport.order > 2.0) {
      throw std::invalid_argument("transport: order must lie in [1, 2]");
    }
    if (!(sc.transport.reg > 0.0)) {
      throw std::invalid_argument("transport: reg must be positive");
    }
    if (sc.transport.iterations < 1) {
      throw std::invalid_argument("transport: iterations must be >= 1");
    }
  }

  if (sc.kind == SystemKind::pde) {
    if (sc.d != 1) throw std::invalid_argument("pde presets are one-dimensional");
    if (sc.grid.horizon != 1.0) {
      throw std::invalid_argument("pde presets fix the horizon at 1");
    }
  }
}

// ---- canonical rendering --------------------------------------------------

std::string num(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void render_preset(std::ostringstream& out, const std::string& prefix,
                   const PresetConfig& preset) {
  out << prefix << ".preset=" << preset.preset << "\n";
  for (const auto& [key, value] : preset.parameters) {
    out << prefix << "." << key << "=" << num(value) << "\n";
  }
}

}  // namespace

std::string kind_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::interacting: return "interacting";
    case SystemKind::linear_interaction: return "linear-interaction";
    case SystemKind::mkv: return "mkv";
    case SystemKind::pde: return "pde";
  }
  return "unknown";
}

const std::vector<std::string>& interaction_preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const PresetDef& p : interaction_presets()) out.push_back(p.name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& terminal_preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const PresetDef& p : terminal_presets()) out.push_back(p.name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& pde_preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const PresetDef& p : pde_presets()) out.push_back(p.name);
    return out;
  }();
  return names;
}

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioParseError("scenario parse error at line " +
                             std::to_string(e.mark.line + 1) + ", column " +
                             std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) {
    throw ScenarioParseError("scenario: top level must be a mapping");
  }
  expect_keys(root, "",
              {"name", "kind", "driver", "terminal", "dimensions", "grid", "sizes",
               "rate", "regression", "picard", "study", "transport", "seed"});

  Scenario sc;
  if (const YAML::Node node = root["name"]) {
    sc.name = field_as<std::string>(node, "name");
  } else {
    throw ScenarioParseError("scenario: 'name' is required");
  }
  if (const YAML::Node node = root["kind"]) {
    const std::string kind = field_as<std::string>(node, "kind");
    if (kind == "interacting") {
      sc.kind = SystemKind::interacting;
    } else if (kind == "linear-interaction") {
      sc.kind = SystemKind::linear_interaction;
    } else if (kind == "mkv") {
      sc.kind = SystemKind::mkv;
    } else if (kind == "pde") {
      sc.kind = SystemKind::pde;
    } else {
      throw std::invalid_argument(
          "scenario: kind must be one of interacting, linear-interaction, mkv, pde");
    }
  } else {
    throw ScenarioParseError("scenario: 'kind' is required");
  }

  if (const YAML::Node node = root["dimensions"]) {
    expect_map(node, "dimensions");
    expect_keys(node, "dimensions", {"m", "d"});
    read_scalar(node, "m", "dimensions", &sc.m);
    read_scalar(node, "d", "dimensions", &sc.d);
  }
  if (const YAML::Node node = root["grid"]) {
    expect_map(node, "grid");
    expect_keys(node, "grid", {"T", "N"});
    read_scalar(node, "T", "grid", &sc.grid.horizon);
    read_scalar(node, "N", "grid", &sc.grid.steps);
  }
  if (const YAML::Node node = root["sizes"]) {
    expect_map(node, "sizes");
    expect_keys(node, "sizes", {"ns", "cloud", "reps", "batch", "coupling"});
    read_list(node, "ns", "sizes", &sc.sizes.ns);
    read_scalar(node, "cloud", "sizes", &sc.sizes.cloud);
    read_scalar(node, "reps", "sizes", &sc.sizes.reps);
    read_scalar(node, "batch", "sizes", &sc.sizes.batch);
    read_scalar(node, "coupling", "sizes", &sc.sizes.coupling);
  }
  if (const YAML::Node node = root["rate"]) {
    expect_map(node, "rate");
    expect_keys(node, "rate", {"p", "q", "k", "delta"});
    read_scalar(node, "p", "rate", &sc.rate.p);
    read_scalar(node, "q", "rate", &sc.rate.q);
    read_scalar(node, "k", "rate", &sc.rate.k);
    read_scalar(node, "delta", "rate", &sc.tail_delta);
  }
  if (const YAML::Node node = root["regression"]) {
    expect_map(node, "regression");
    expect_keys(node, "regression", {"degree", "group_mean", "group_degree", "ridge"});
    read_scalar(node, "degree", "regression", &sc.regression.degree);
    read_scalar(node, "group_mean", "regression", &sc.regression.group_mean);
    read_scalar(node, "group_degree", "regression", &sc.regression.group_degree);
    read_scalar(node, "ridge", "regression", &sc.regression.ridge);
  }
  if (const YAML::Node node = root["picard"]) {
    expect_map(node, "picard");
    expect_keys(node, "picard", {"tol", "max_iters"});
    read_scalar(node, "tol", "picard", &sc.picard.tol);
    read_scalar(node, "max_iters", "picard", &sc.picard.max_iters);
  }
  if (const YAML::Node node = root["study"]) {
    expect_map(node, "study");
    expect_keys(node, "study", {"t", "order", "block", "epsilons", "process_reference"});
    read_scalar(node, "t", "study", &sc.study.node_time);
    read_scalar(node, "order", "study", &sc.study.order);
    read_scalar(node, "block", "study", &sc.study.block);
    read_list(node, "epsilons", "study", &sc.study.epsilons);
    read_scalar(node, "process_reference", "study", &sc.study.process_reference);
  }
  if (const YAML::Node node = root["transport"]) {
    expect_map(node, "transport");
    expect_keys(node, "transport", {"a", "b", "method", "order", "reg", "iterations"});
    sc.transport.configured = true;
    read_scalar(node, "a", "transport", &sc.transport.cloud_a);
    read_scalar(node, "b", "transport", &sc.transport.cloud_b);
    read_scalar(node, "method", "transport", &sc.transport.method);
    read_scalar(node, "order", "transport", &sc.transport.order);
    read_scalar(node, "reg", "transport", &sc.transport.reg);
    read_scalar(node, "iterations", "transport", &sc.transport.iterations);
  }
  read_scalar(root, "seed", "", &sc.seed);

  // Coefficient presets: the pde kind bundles its terminal into the preset.
  if (sc.kind == SystemKind::pde) {
    if (root["terminal"]) {
      throw std::invalid_argument("pde presets define their own terminal");
    }
    if (const YAML::Node node = root["driver"]) {
      sc.driver = read_preset(node, "driver", pde_presets());
    } else {
      sc.driver.preset = "constant";
      sc.driver.parameters = {{"value", 1.0}};
    }
  } else {
    if (const YAML::Node node = root["driver"]) {
      sc.driver = read_preset(node, "driver", interaction_presets());
    } else {
      sc.driver.preset = "null";
    }
    if (const YAML::Node node = root["terminal"]) {
      sc.terminal = read_preset(node, "terminal", terminal_presets());
    } else {
      sc.terminal.preset = "constant";
      sc.terminal.parameters = {{"value", 1.0}};
    }
  }

  // Fill the remaining defaults so the canonical form echoes every value.
  if (sc.study.node_time < 0.0) sc.study.node_time = sc.grid.horizon / 2.0;
  if (sc.study.process_reference.empty()) {
    sc.study.process_reference =
        sc.kind == SystemKind::linear_interaction ? "inverse" : "moment";
  }
  sc.rate.m = sc.m;
  sc.rate.n = 1;

  validate(sc);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScenarioParseError("cannot read scenario file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string canonical_scenario(const Scenario& sc) {
  std::ostringstream out;
  out << "name=" << sc.name << "\n";
  out << "kind=" << kind_name(sc.kind) << "\n";
  render_preset(out, "driver", sc.driver);
  if (sc.kind != SystemKind::pde) render_preset(out, "terminal", sc.terminal);
  out << "dimensions.m=" << sc.m << "\n";
  out << "dimensions.d=" << sc.d << "\n";
  out << "grid.T=" << num(sc.grid.horizon) << "\n";
  out << "grid.N=" << sc.grid.steps << "\n";
  out << "sizes.ns=";
  for (std::size_t i = 0; i < sc.sizes.ns.size(); ++i) {
    out << (i ? "," : "") << sc.sizes.ns[i];
  }
  out << "\n";
  out << "sizes.cloud=" << sc.sizes.cloud << "\n";
  out << "sizes.reps=" << sc.sizes.reps << "\n";
  out << "sizes.batch=" << sc.sizes.batch << "\n";
  out << "sizes.coupling=" << sc.sizes.coupling << "\n";
  out << "rate.p=" << num(sc.rate.p) << "\n";
  out << "rate.q=" << num(sc.rate.q) << "\n";
  out << "rate.k=" << num(sc.rate.k) << "\n";
  out << "rate.delta=" << num(sc.tail_delta) << "\n";
  out << "regression.degree=" << sc.regression.degree << "\n";
  out << "regression.group_mean=" << (sc.regression.group_mean ? 1 : 0) << "\n";
  out << "regression.group_degree=" << sc.regression.group_degree << "\n";
  out << "regression.ridge=" << num(sc.regression.ridge) << "\n";
  out << "picard.tol=" << num(sc.picard.tol) << "\n";
  out << "picard.max_iters=" << sc.picard.max_iters << "\n";
  out << "study.t=" << num(sc.study.node_time) << "\n";
  out << "study.order=" << num(sc.study.order) << "\n";
  out << "study.block=" << sc.study.block << "\n";
  out << "study.epsilons=";
  for (std::size_t i = 0; i < sc.study.epsilons.size(); ++i) {
    out << (i ? "," : "") << num(sc.study.epsilons[i]);
  }
  out << "\n";
  out << "study.process_reference=" << sc.study.process_reference << "\n";
  if (sc.transport.configured) {
    out << "transport.a=" << sc.transport.cloud_a << "\n";
    out << "transport.b=" << sc.transport.cloud_b << "\n";
    out << "transport.method=" << sc.transport.method << "\n";
    out << "transport.order=" << num(sc.transport.order) << "\n";
    out << "transport.reg=" << num(sc.transport.reg) << "\n";
    out << "transport.iterations=" << sc.transport.iterations << "\n";
  }
  out << "seed=" << sc.seed << "\n";
  return out.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0x0f];
  }
  return out;
}

std::string scenario_hash(const Scenario& scenario) {
  return sha256_hex(canonical_scenario(scenario));
}

InteractionSpec build_interaction(const PresetConfig& config) {
  if (config.preset == "mean-linear") {
    return make_mean_linear(preset_parameter(config, "alpha"));
  }
  if (config.preset == "mean-reversion") {
    return make_mean_reversion(preset_parameter(config, "speed"));
  }
  if (config.preset == "convolution") {
    return make_convolution(preset_parameter(config, "scale"));
  }
  if (config.preset == "mean-kernel") {
    return make_mean_kernel(preset_parameter(config, "alpha"));
  }
  if (config.preset == "null" || config.preset == "direct-gaussian") {
    return make_null_interaction();
  }
  throw std::invalid_argument("unknown interaction preset '" + config.preset +
                              "'; registered presets: " +
                              joined_names(interaction_presets()));
}

TerminalSpec build_terminal(const PresetConfig& config) {
  if (config.preset == "affine") {
    return make_terminal_affine(preset_parameter(config, "base"),
                                preset_parameter(config, "spread"),
                                static_cast<int>(preset_parameter(config, "coordinate")));
  }
  if (config.preset == "constant") {
    return make_terminal_constant(preset_parameter(config, "value"));
  }
  if (config.preset == "supnorm") {
    return make_terminal_supnorm(preset_parameter(config, "base"),
                                 preset_parameter(config, "scale"));
  }
  throw std::invalid_argument("unknown terminal preset '" + config.preset +
                              "'; registered presets: " +
                              joined_names(terminal_presets()));
}

StudyScenario build_study(const Scenario& scenario) {
  if (scenario.kind == SystemKind::pde) {
    throw std::invalid_argument("pde scenarios use the pde-compare subcommand");
  }
  StudyScenario sc;
  sc.direct_gaussian = scenario.driver.preset == "direct-gaussian";
  sc.interaction = build_interaction(scenario.driver);
  sc.terminal = build_terminal(scenario.terminal);
  sc.basis.degree = scenario.regression.degree;
  sc.basis.include_group_mean = scenario.regression.group_mean;
  sc.basis.group_degree = scenario.regression.group_degree;
  sc.horizon = scenario.grid.horizon;
  sc.steps = static_cast<std::size_t>(scenario.grid.steps);
  sc.dimension = scenario.m;
  sc.seed = scenario.seed;
  sc.reference_cloud_size = scenario.sizes.cloud;
  sc.system_batch = scenario.sizes.batch;
  sc.coupling_multiple = scenario.sizes.coupling;
  sc.rate = scenario.rate;
  sc.rate.m = scenario.m;
  sc.process_reference = scenario.study.process_reference == "inverse"
                             ? ProcessReference::inverse_n
                             : ProcessReference::moment_rate;
  sc.tail_delta = scenario.tail_delta;
  sc.scheme.regression.ridge = scenario.regression.ridge;
  sc.mkv.regression.ridge = scenario.regression.ridge;
  sc.mkv.tol = scenario.picard.tol;
  sc.mkv.max_iters = scenario.picard.max_iters;
  return sc;
}

PdeScenario build_pde(const Scenario& scenario) {
  if (scenario.kind != SystemKind::pde) {
    throw std::invalid_argument("scenario kind '" + kind_name(scenario.kind) +
                                "' has no pde preset");
  }
  if (scenario.driver.preset == "affine") {
    return make_pde_affine(preset_parameter(scenario.driver, "beta"),
                           preset_parameter(scenario.driver, "gamma"));
  }
  if (scenario.driver.preset == "discounted") {
    return make_pde_discounted(preset_parameter(scenario.driver, "beta"),
                               preset_parameter(scenario.driver, "gamma"),
                               preset_parameter(scenario.driver, "discount"));
  }
  if (scenario.driver.preset == "constant") {
    return make_pde_constant(preset_parameter(scenario.driver, "value"));
  }
  throw std::invalid_argument("unknown pde preset '" + scenario.driver.preset +
                              "'; registered presets: " + joined_names(pde_presets()));
}

}  // namespace chaoslab
