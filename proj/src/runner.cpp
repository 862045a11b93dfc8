#include "chaoslab/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/brownian.hpp"
#include "chaoslab/chaos_estimators.hpp"
#include "chaoslab/exact_sum.hpp"
#include "chaoslab/mean_field.hpp"
#include "chaoslab/pde.hpp"
#include "chaoslab/transport.hpp"

namespace chaoslab {

namespace {

using nlohmann::json;

std::string cell(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

// Whole-payload CSV assembly: render to one string so the written bytes are a
// pure function of the data.
struct CsvDoc {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out += (i ? "," : "") + columns[i];
    }
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out += (i ? "," : "") + row[i];
      }
      out += "\n";
    }
    return out;
  }
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

json fit_json(const RateFit& fit, bool valid) {
  if (!valid) return nullptr;
  json out;
  out["slope"] = fit.slope;
  out["intercept"] = fit.intercept;
  out["slope_stderr"] = fit.slope_stderr;
  out["ci_low"] = fit.ci_low;
  out["ci_high"] = fit.ci_high;
  return out;
}

// ---- minimal SVG line chart (log-log estimate + reference curves) ---------

std::string svg_chart(std::span<const std::size_t> ns, std::span<const double> est,
                      std::span<const double> ref) {
  const double width = 480.0;
  const double height = 360.0;
  const double margin = 48.0;
  std::vector<double> xs;
  std::vector<double> y_est;
  std::vector<double> y_ref;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (est[i] > 0.0 && ref[i] > 0.0) {
      xs.push_back(std::log10(static_cast<double>(ns[i])));
      y_est.push_back(std::log10(est[i]));
      y_ref.push_back(std::log10(ref[i]));
    }
  }
  if (xs.size() < 2) return {};
  const auto [x_lo_it, x_hi_it] = std::minmax_element(xs.begin(), xs.end());
  double y_lo = *std::min_element(y_est.begin(), y_est.end());
  double y_hi = *std::max_element(y_est.begin(), y_est.end());
  y_lo = std::min(y_lo, *std::min_element(y_ref.begin(), y_ref.end()));
  y_hi = std::max(y_hi, *std::max_element(y_ref.begin(), y_ref.end()));
  const double x_lo = *x_lo_it;
  const double x_span = std::max(*x_hi_it - x_lo, 1e-12);
  const double y_span = std::max(y_hi - y_lo, 1e-12);

  const auto px = [&](double x) {
    return margin + (x - x_lo) / x_span * (width - 2.0 * margin);
  };
  const auto py = [&](double y) {
    return height - margin - (y - y_lo) / y_span * (height - 2.0 * margin);
  };
  const auto polyline = [&](const std::vector<double>& ys) {
    std::string pts;
    char buffer[64];
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::snprintf(buffer, sizeof(buffer), "%.2f,%.2f ", px(xs[i]), py(ys[i]));
      pts += buffer;
    }
    if (!pts.empty()) pts.pop_back();
    return pts;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" "
         "viewBox=\"0 0 480 360\">\n"
      << "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n"
      << "<line x1=\"48\" y1=\"312\" x2=\"432\" y2=\"312\" stroke=\"black\"/>\n"
      << "<line x1=\"48\" y1=\"48\" x2=\"48\" y2=\"312\" stroke=\"black\"/>\n"
      << "<polyline points=\"" << polyline(y_ref)
      << "\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"5,4\"/>\n"
      << "<polyline points=\"" << polyline(y_est)
      << "\" fill=\"none\" stroke=\"#1f6fb4\" stroke-width=\"1.5\"/>\n"
      << "<text x=\"240\" y=\"344\" text-anchor=\"middle\" font-size=\"12\">"
         "log10 n</text>\n"
      << "<text x=\"16\" y=\"180\" font-size=\"12\" "
         "transform=\"rotate(-90 16 180)\" text-anchor=\"middle\">log10 value</text>\n"
      << "</svg>\n";
  return out.str();
}

// ---- transport inputs ------------------------------------------------------

std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("transport: cannot read cloud file '" + path + "'");
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string token =
          line.substr(start, comma == std::string::npos ? std::string::npos
                                                        : comma - start);
      char* end = nullptr;
      const double value = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') {
        throw std::invalid_argument("transport: cloud file '" + path + "' line " +
                                    std::to_string(line_no) + " is not numeric");
      }
      row.push_back(value);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("transport: cloud file '" + path +
                                  "' has ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::invalid_argument("transport: cloud file '" + path + "' is empty");
  }
  return rows;
}

EmpiricalMeasure cloud_measure(const std::vector<std::vector<double>>& rows) {
  const int dim = static_cast<int>(rows.front().size());
  std::vector<double> points;
  points.reserve(rows.size() * rows.front().size());
  for (const auto& row : rows) points.insert(points.end(), row.begin(), row.end());
  return EmpiricalMeasure(dim, std::move(points));
}

PathCloud cloud_paths(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.front().size();
  if (cols < 2) {
    throw std::invalid_argument(
        "transport: path-sup needs at least two columns per row");
  }
  PathCloud cloud;
  cloud.grid = make_grid(1.0, static_cast<int>(cols) - 1);
  cloud.dim = 1;
  cloud.size = static_cast<int>(rows.size());
  cloud.values.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    cloud.values.insert(cloud.values.end(), row.begin(), row.end());
  }
  return cloud;
}

// ---- subcommand payloads ---------------------------------------------------

void summary_rows(CsvDoc* doc, const TimeGrid& grid,
                  const std::function<std::span<const double>(std::size_t)>& slice) {
  for (int k = 0; k < grid.node_count(); ++k) {
    const std::span<const double> values = slice(static_cast<std::size_t>(k));
    ExactSum acc;
    for (double v : values) acc.add(v);
    const double mean = acc.round() / static_cast<double>(values.size());
    acc.reset();
    for (double v : values) acc.add(v * v);
    const double moment2 = acc.round() / static_cast<double>(values.size());
    doc->rows.push_back(
        {std::to_string(k), cell(grid.nodes[k]), cell(mean), cell(moment2)});
  }
}

CsvDoc diagnostics_doc(const std::vector<StepDiagnostics>& diagnostics, int iteration) {
  CsvDoc doc;
  doc.columns = {"iteration", "node", "residual_rms", "condition"};
  for (const StepDiagnostics& d : diagnostics) {
    doc.rows.push_back({std::to_string(iteration), std::to_string(d.node),
                        cell(d.residual_rms), cell(d.condition)});
  }
  return doc;
}

CsvDoc run_simulate(const Scenario& sc, json* extras, CsvDoc* diagnostics) {
  const StudyScenario study = build_study(sc);
  const TimeGrid grid = make_grid(sc.grid.horizon, sc.grid.steps);
  CsvDoc doc;
  doc.columns = {"node", "time", "mean", "second_moment"};

  if (sc.kind == SystemKind::mkv) {
    const BrownianBundle bundle = sample_brownian(
        sc.seed, replication_tag(StreamPurpose::reference_cloud, 0),
        static_cast<int>(sc.sizes.cloud), sc.m, grid);
    const MkvSolution sol =
        solve_mkv(study.interaction, study.terminal, bundle, study.basis, study.mkv);
    for (int k = 0; k < grid.node_count(); ++k) {
      doc.rows.push_back({std::to_string(k), cell(grid.nodes[k]),
                          cell(sol.law_flow[k].mean()), cell(sol.law_flow[k].moment(2.0))});
    }
    (*extras)["picard"] = {{"iterations", sol.picard.iterations},
                           {"converged", sol.picard.converged},
                           {"distances", sol.picard.distances}};
    *diagnostics = diagnostics_doc(sol.core.diagnostics, sol.picard.iterations);
    return doc;
  }

  if (sc.sizes.ns.empty()) {
    throw std::invalid_argument("simulate needs sizes.ns (first entry = group size)");
  }
  const std::size_t n = sc.sizes.ns.front();
  const BrownianBundle bundle = sample_brownian(
      sc.seed, replication_tag(StreamPurpose::system_paths, 0),
      static_cast<int>(sc.sizes.batch * n), sc.m, grid);
  SchemeParams params = study.scheme;
  params.group_size = n;
  const SystemSolution sol =
      sc.kind == SystemKind::interacting
          ? solve_interacting(study.interaction, study.terminal, bundle, study.basis,
                              params)
          : solve_linear_interaction(study.interaction, study.terminal, bundle,
                                     study.basis, params);
  summary_rows(&doc, grid, [&](std::size_t k) { return sol.group_slice(k, 0); });
  (*extras)["groups"] = sol.groups;
  (*extras)["n"] = sol.n;
  *diagnostics = diagnostics_doc(sol.core.diagnostics, 0);
  return doc;
}

CsvDoc run_ladder_study(const Scenario& sc, const std::string& sub, json* extras) {
  const StudyScenario study = build_study(sc);
  const TimeGrid grid = make_grid(sc.grid.horizon, sc.grid.steps);
  RateStudy result;
  if (sub == "rate-study") {
    const std::size_t node =
        static_cast<std::size_t>(nearest_node(grid, sc.study.node_time));
    result = estimate_marginal_chaos(study, node, sc.sizes.ns, sc.sizes.reps,
                                     sc.study.order);
  } else if (sub == "sup-study") {
    result = estimate_sup_chaos(study, sc.sizes.ns, sc.sizes.reps, sc.study.order);
  } else if (sub == "process-error") {
    result = estimate_process_error(study, sc.sizes.ns, sc.sizes.reps);
  } else {
    result = estimate_block_bounds(study, sc.sizes.ns, sc.study.block, sc.sizes.reps);
  }

  CsvDoc doc;
  doc.columns = {"n", "estimate", "stderr", "reference"};
  for (std::size_t i = 0; i < result.ns.size(); ++i) {
    doc.rows.push_back({std::to_string(result.ns[i]), cell(result.errors[i]),
                        cell(result.stderrs[i]), cell(result.reference[i])});
  }
  (*extras)["fit"] = fit_json(result.fit, result.fit_valid);
  (*extras)["reps"] = result.reps;
  (*extras)["excluded"] = result.excluded;
  (*extras)["chart"] = {{"estimates", result.errors}, {"reference", result.reference}};
  return doc;
}

CsvDoc run_tails(const Scenario& sc, json* extras) {
  if (sc.sizes.ns.empty()) {
    throw std::invalid_argument("tails study needs sizes.ns");
  }
  if (sc.study.epsilons.empty()) {
    throw std::invalid_argument("tails study needs study.epsilons");
  }
  const StudyScenario study = build_study(sc);
  const TimeGrid grid = make_grid(sc.grid.horizon, sc.grid.steps);
  const std::size_t node =
      static_cast<std::size_t>(nearest_node(grid, sc.study.node_time));

  CsvDoc doc;
  doc.columns = {"n",        "epsilon", "probability", "ci_low",
                 "ci_high",  "reference_a", "reference_b"};
  for (std::size_t n : sc.sizes.ns) {
    const std::vector<TailEstimate> tails = estimate_tail(
        study, node, n, sc.study.order, sc.study.epsilons, sc.sizes.reps);
    for (const TailEstimate& t : tails) {
      doc.rows.push_back({std::to_string(n), cell(t.epsilon), cell(t.probability),
                          cell(t.ci_low), cell(t.ci_high), cell(t.reference_a),
                          cell(t.reference_b)});
    }
  }
  (*extras)["reps"] = sc.sizes.reps;
  return doc;
}

CsvDoc run_pde_compare(const Scenario& sc, json* extras) {
  const PdeScenario pde = build_pde(sc);
  PdeStudyOptions options;
  options.basis.degree = sc.regression.degree;
  options.basis.include_group_mean = sc.regression.group_mean;
  options.basis.group_degree = sc.regression.group_degree;
  options.system_batch = sc.sizes.batch;
  options.steps = sc.grid.steps;
  options.seed = sc.seed;
  options.regression.ridge = sc.regression.ridge;
  const PdeComparison cmp =
      compare_pde(pde, sc.sizes.ns, sc.sizes.reps, sc.sizes.cloud, options);

  CsvDoc doc;
  doc.columns = {"n", "gap_estimate", "stderr", "epsilon_n", "epsilon_n_plus_r"};
  for (std::size_t i = 0; i < cmp.ns.size(); ++i) {
    doc.rows.push_back({std::to_string(cmp.ns[i]), cell(cmp.gap_first[i]),
                        cell(cmp.stderr_first[i]), cell(cmp.epsilon[i]),
                        cell(cmp.epsilon_plus_rate[i])});
  }
  (*extras)["fit"] = fit_json(cmp.fit, cmp.fit_valid);
  (*extras)["reps"] = cmp.reps;
  (*extras)["gap_average"] = cmp.gap_average;
  (*extras)["chart"] = {{"estimates", cmp.gap_first}, {"reference", cmp.epsilon}};
  return doc;
}

CsvDoc run_transport(const Scenario& sc, json* extras) {
  if (!sc.transport.configured) {
    throw std::invalid_argument("transport subcommand needs a transport block");
  }
  const auto rows_a = read_numeric_csv(sc.transport.cloud_a);
  const auto rows_b = read_numeric_csv(sc.transport.cloud_b);
  const double p = sc.transport.order;

  double distance = 0.0;
  if (sc.transport.method == "assignment") {
    distance = wasserstein_assignment(cloud_measure(rows_a), cloud_measure(rows_b), p);
  } else if (sc.transport.method == "sorted") {
    if (rows_a.front().size() != 1 || rows_b.front().size() != 1) {
      throw std::invalid_argument(
          "transport: the sorted method needs one-dimensional clouds");
    }
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& row : rows_a) a.push_back(row.front());
    for (const auto& row : rows_b) b.push_back(row.front());
    distance = wasserstein_1d(a, b, p);
  } else if (sc.transport.method == "entropic") {
    const SinkhornResult result =
        wasserstein_entropic(cloud_measure(rows_a), cloud_measure(rows_b), p,
                             sc.transport.reg, sc.transport.iterations);
    distance = result.value;
    (*extras)["entropic"] = {{"iterations", result.iterations},
                             {"converged", result.converged},
                             {"reg", sc.transport.reg}};
  } else {
    distance = path_wasserstein_supnorm(cloud_paths(rows_a), cloud_paths(rows_b), p);
  }

  CsvDoc doc;
  doc.columns = {"method", "order", "distance"};
  doc.rows.push_back({sc.transport.method, cell(p), cell(distance)});
  return doc;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write output file '" + path.string() + "'");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("cannot write output file '" + path.string() + "'");
  }
}

}  // namespace

const std::vector<std::string>& runner_subcommands() {
  static const std::vector<std::string> subcommands{
      "simulate",      "rate-study", "sup-study", "tails",
      "process-error", "blocks",     "pde-compare", "transport"};
  return subcommands;
}

RunOutcome run_scenario(const RunOptions& options) {
  RunOutcome outcome;
  json sidecar;
  sidecar["schema_version"] = 1;
  sidecar["code_version"] = kCodeVersion;
  sidecar["operation"] = options.subcommand;
  sidecar["scenario_file"] = options.scenario_path;
  sidecar["threads"] = options.threads;
  sidecar["error"] = nullptr;

  const auto fail = [&](const std::string& code, const std::string& message) {
    outcome.exit_code = 1;
    outcome.error_code = code;
    outcome.message = message;
    sidecar["error"] = {{"code", code}, {"message", message}};
  };

  // The sidecar goes next to the payload when the scenario is usable, and
  // into a directory keyed by the raw input digest when it is not.
  const auto persist_sidecar = [&](const std::string& dir_key) {
    if (dir_key.empty()) return;
    const std::filesystem::path dir =
        std::filesystem::path(options.out_dir) / dir_key;
    std::filesystem::create_directories(dir);
    outcome.output_dir = dir.string();
    const std::filesystem::path path = dir / (options.subcommand + ".json");
    sidecar["timestamp_utc"] = utc_timestamp();
    write_file(path, sidecar.dump(2) + "\n");
    outcome.sidecar_path = path.string();
  };

  if (std::find(runner_subcommands().begin(), runner_subcommands().end(),
                options.subcommand) == runner_subcommands().end()) {
    fail("config_validation", "unknown subcommand '" + options.subcommand + "'");
    return outcome;
  }

  // Read the input (digest recorded even when parsing fails later).
  std::string text;
  {
    std::ifstream in(options.scenario_path, std::ios::binary);
    if (!in) {
      fail("io", "cannot read scenario file '" + options.scenario_path + "'");
      return outcome;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
  const std::string input_digest = sha256_hex(text);
  sidecar["input_digest"] = input_digest;

  Scenario scenario;
  try {
    scenario = parse_scenario(text);
  } catch (const ScenarioParseError& e) {
    fail("config_parse", e.what());
    persist_sidecar("invalid-" + input_digest.substr(0, 12));
    return outcome;
  } catch (const std::invalid_argument& e) {
    fail("config_validation", e.what());
    persist_sidecar("invalid-" + input_digest.substr(0, 12));
    return outcome;
  }

  // Seed precedence: --seed flag, then the environment, then the file.
  std::string seed_source = "file";
  if (options.seed_overridden) {
    scenario.seed = options.seed;
    seed_source = "flag";
  } else if (const char* env = std::getenv(kSeedEnvVar)) {
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      fail("config_validation",
           std::string(kSeedEnvVar) + " must be an unsigned integer");
      persist_sidecar("invalid-" + input_digest.substr(0, 12));
      return outcome;
    }
    scenario.seed = parsed;
    seed_source = "environment";
  }

  outcome.scenario_hash = scenario_hash(scenario);
  sidecar["scenario_name"] = scenario.name;
  sidecar["scenario_hash"] = outcome.scenario_hash;
  sidecar["seed"] = scenario.seed;
  sidecar["seed_source"] = seed_source;
  const std::string dir_key = outcome.scenario_hash.substr(0, 12);

  CsvDoc doc;
  CsvDoc diagnostics;
  json extras;
  try {
    if (options.subcommand == "simulate") {
      doc = run_simulate(scenario, &extras, &diagnostics);
    } else if (options.subcommand == "tails") {
      doc = run_tails(scenario, &extras);
    } else if (options.subcommand == "pde-compare") {
      doc = run_pde_compare(scenario, &extras);
    } else if (options.subcommand == "transport") {
      doc = run_transport(scenario, &extras);
    } else {
      doc = run_ladder_study(scenario, options.subcommand, &extras);
    }
  } catch (const std::invalid_argument& e) {
    fail("precondition", e.what());
    persist_sidecar(dir_key);
    return outcome;
  } catch (const std::exception& e) {
    fail("solver", e.what());
    persist_sidecar(dir_key);
    return outcome;
  }

  for (auto& [key, value] : extras.items()) {
    if (key != "chart") sidecar[key] = value;
  }

  try {
    const std::filesystem::path dir = std::filesystem::path(options.out_dir) / dir_key;
    std::filesystem::create_directories(dir);
    outcome.output_dir = dir.string();

    const std::string payload = doc.render();
    outcome.csv_digest = sha256_hex(payload);
    const std::filesystem::path csv_path = dir / (options.subcommand + ".csv");
    write_file(csv_path, payload);
    outcome.csv_path = csv_path.string();
    sidecar["csv"] = {{"file", csv_path.filename().string()},
                      {"digest", outcome.csv_digest},
                      {"columns", doc.columns}};

    if (!diagnostics.columns.empty()) {
      const std::filesystem::path diag_path = dir / "diagnostics.csv";
      write_file(diag_path, diagnostics.render());
      sidecar["diagnostics"] = {{"file", diag_path.filename().string()},
                                {"columns", diagnostics.columns}};
    }

    if (options.emit_svg && extras.contains("chart")) {
      const std::vector<double> est = extras["chart"]["estimates"];
      const std::vector<double> ref = extras["chart"]["reference"];
      const std::string svg = svg_chart(scenario.sizes.ns, est, ref);
      if (!svg.empty()) {
        const std::filesystem::path svg_path = dir / (options.subcommand + ".svg");
        write_file(svg_path, svg);
        sidecar["chart"] = svg_path.filename().string();
      }
    }

    persist_sidecar(dir_key);
  } catch (const std::exception& e) {
    fail("io", e.what());
    return outcome;
  }
  return outcome;
}

}  // namespace chaoslab
