#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chaoslab/scenario.hpp"

#include <array>
#include <string>

namespace {

using namespace chaoslab;

const std::string kMinimal = "name: tiny\nkind: mkv\n";

std::string study_text() {
  return R"(name: ladder
kind: interacting
driver:
  preset: mean-kernel
  alpha: 0.25
terminal:
  preset: affine
  base: 2
  spread: 0.5
dimensions:
  m: 2
grid:
  T: 2
  N: 32
sizes:
  ns: [8, 16, 32]
  cloud: 512
  reps: 40
  batch: 8
  coupling: 2
rate:
  p: 1
  q: 3
  k: 4
  delta: 0.2
regression:
  degree: 2
  group_mean: false
  ridge: 1e-6
picard:
  tol: 1e-5
  max_iters: 20
study:
  t: 0.75
  order: 2
  block: 3
  epsilons: [0.1, 0.2]
  process_reference: inverse
seed: 11
)";
}

}  // namespace

TEST_CASE("a minimal scenario fills the documented defaults") {
  const Scenario sc = parse_scenario(kMinimal);
  CHECK(sc.name == "tiny");
  CHECK(sc.kind == SystemKind::mkv);
  CHECK(sc.m == 1);
  CHECK(sc.d == 1);
  CHECK(sc.grid.horizon == 1.0);
  CHECK(sc.grid.steps == 64);
  CHECK(sc.sizes.cloud == 4096);
  CHECK(sc.sizes.reps == 64);
  CHECK(sc.sizes.batch == 16);
  CHECK(sc.sizes.coupling == 4);
  CHECK(sc.regression.degree == 3);
  CHECK(sc.regression.group_mean);
  CHECK(sc.regression.ridge == 1e-8);
  CHECK(sc.picard.tol == 1e-4);
  CHECK(sc.picard.max_iters == 50);
  CHECK(sc.study.node_time == 0.5);  // resolved to T/2
  CHECK(sc.study.order == 1.0);
  CHECK(sc.study.block == 1);
  CHECK(sc.study.process_reference == "moment");
  CHECK(sc.rate.p == 1.0);
  CHECK(sc.rate.q == 1.5);
  CHECK(sc.rate.k == 2.0);
  CHECK(sc.rate.m == 1);
  CHECK(sc.seed == 0);
  CHECK(sc.driver.preset == "null");
  CHECK(sc.terminal.preset == "constant");
  CHECK_FALSE(sc.transport.configured);
}

TEST_CASE("linear-interaction scenarios default to the sharper reference") {
  const Scenario sc = parse_scenario("name: x\nkind: linear-interaction\n");
  CHECK(sc.kind == SystemKind::linear_interaction);
  CHECK(sc.study.process_reference == "inverse");
}

TEST_CASE("missing required fields are parse errors") {
  CHECK_THROWS_AS(parse_scenario("kind: mkv\n"), ScenarioParseError);
  CHECK_THROWS_AS(parse_scenario("name: x\n"), ScenarioParseError);
  CHECK_THROWS_AS(parse_scenario("not yaml: [\n"), ScenarioParseError);
}

TEST_CASE("unknown fields are parse errors naming the field") {
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "bogus: 1\n"),
                       doctest::Contains("unknown field 'bogus'"),
                       ScenarioParseError);
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "grid:\n  Q: 2\n"),
                       doctest::Contains("grid.Q"), ScenarioParseError);
}

TEST_CASE("wrong field types are parse errors naming the field") {
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "grid:\n  N: sixty\n"),
                       doctest::Contains("grid.N"), ScenarioParseError);
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "seed: [1]\n"),
                       doctest::Contains("seed"), ScenarioParseError);
}

TEST_CASE("rate parameters must be ordered") {
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "rate:\n  q: 1\n"),
                       doctest::Contains("p<q<k"), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario(kMinimal + "rate:\n  p: 3\n  q: 4\n  k: 5\n"),
                  std::invalid_argument);
}

TEST_CASE("unknown presets list the registered names") {
  CHECK_THROWS_WITH_AS(
      parse_scenario("name: x\nkind: mkv\ndriver:\n  preset: tornado\n"),
      doctest::Contains("mean-kernel"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_scenario("name: x\nkind: mkv\nterminal:\n  preset: tornado\n"),
      doctest::Contains("affine"), std::invalid_argument);
}

TEST_CASE("unknown preset parameters are rejected") {
  CHECK_THROWS_WITH_AS(
      parse_scenario(
          "name: x\nkind: mkv\ndriver:\n  preset: mean-linear\n  beta: 2\n"),
      doctest::Contains("has no parameter 'beta'"), std::invalid_argument);
}

TEST_CASE("size and grid validation names the offending field") {
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "sizes:\n  ns: [8, 8]\n"),
                       doctest::Contains("strictly increasing"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "sizes:\n  cloud: 1\n"),
                       doctest::Contains("cloud"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "grid:\n  T: 0\n"),
                       doctest::Contains("T"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_scenario(kMinimal + "study:\n  t: 2\n"),
                       doctest::Contains("t must lie"), std::invalid_argument);
}

TEST_CASE("the canonical form is stable under key reordering") {
  const std::string a =
      "name: same\nkind: interacting\nseed: 7\n"
      "driver:\n  preset: mean-linear\n  alpha: 0.5\n"
      "grid:\n  N: 16\n  T: 1\n";
  const std::string b =
      "driver:\n  alpha: 0.5\n  preset: mean-linear\n"
      "grid:\n  T: 1\n  N: 16\n"
      "seed: 7\nkind: interacting\nname: same\n";
  const Scenario sa = parse_scenario(a);
  const Scenario sb = parse_scenario(b);
  CHECK(canonical_scenario(sa) == canonical_scenario(sb));
  CHECK(scenario_hash(sa) == scenario_hash(sb));

  Scenario sc = sa;
  sc.seed = 8;
  CHECK(scenario_hash(sc) != scenario_hash(sa));
  sc = sa;
  sc.driver.parameters["alpha"] = 0.75;
  CHECK(scenario_hash(sc) != scenario_hash(sa));
}

TEST_CASE("explicit defaults hash like omitted ones") {
  const Scenario implicit = parse_scenario(kMinimal);
  const Scenario explicit_defaults =
      parse_scenario(kMinimal + "grid:\n  T: 1\n  N: 64\nsizes:\n  cloud: 4096\n");
  CHECK(scenario_hash(implicit) == scenario_hash(explicit_defaults));
}

TEST_CASE("the study builder maps every field onto the estimator configuration") {
  const Scenario sc = parse_scenario(study_text());
  const StudyScenario study = build_study(sc);
  CHECK(study.horizon == 2.0);
  CHECK(study.steps == 32);
  CHECK(study.dimension == 2);
  CHECK(study.seed == 11);
  CHECK(study.reference_cloud_size == 512);
  CHECK(study.system_batch == 8);
  CHECK(study.coupling_multiple == 2);
  CHECK(study.process_reference == ProcessReference::inverse_n);
  CHECK(study.tail_delta == 0.2);
  CHECK_FALSE(study.direct_gaussian);
  CHECK(study.basis.degree == 2);
  CHECK_FALSE(study.basis.include_group_mean);
  CHECK(study.scheme.regression.ridge == 1e-6);
  CHECK(study.mkv.tol == 1e-5);
  CHECK(study.mkv.max_iters == 20);
  CHECK(study.rate.p == 1.0);
  CHECK(study.rate.q == 3.0);
  CHECK(study.rate.k == 4.0);
  CHECK(study.rate.m == 2);

  // The interaction preset reaches the estimators with its parameter applied:
  // the mean-kernel pair map is F(a) = alpha a on the plain pair average.
  CHECK(study.interaction.outer(0.0, 0.0, {}, 2.0) == doctest::Approx(0.25 * 2.0));
  CHECK(study.interaction.kernel_other(0.0, 3.0) == doctest::Approx(3.0));

  // The terminal preset applies base + spread x.
  const TimeGrid grid = make_grid(2.0, 2);
  const std::array<double, 3> path{0.0, 0.0, 3.0};
  CHECK(study.terminal.evaluate(grid, path) == doctest::Approx(2.0 + 0.5 * 3.0));
}

TEST_CASE("the direct gaussian preset flips the estimator shortcut") {
  const Scenario sc =
      parse_scenario("name: x\nkind: mkv\ndriver:\n  preset: direct-gaussian\n");
  CHECK(build_study(sc).direct_gaussian);
}

TEST_CASE("pde scenarios reject a terminal block and pinned-grid violations") {
  CHECK_THROWS_WITH_AS(
      parse_scenario("name: x\nkind: pde\ndriver:\n  preset: affine\n"
                     "terminal:\n  preset: affine\n"),
      doctest::Contains("define their own terminal"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_scenario("name: x\nkind: pde\ndriver:\n"
                                      "  preset: affine\ngrid:\n  T: 2\n"),
                       doctest::Contains("horizon"), std::invalid_argument);
}

TEST_CASE("the pde builder selects and parameterizes the preset") {
  const Scenario sc = parse_scenario(
      "name: x\nkind: pde\ndriver:\n  preset: affine\n  beta: 2\n  gamma: 0.5\n");
  const PdeScenario pde = build_pde(sc);
  CHECK(pde.preset == "affine");
  CHECK(pde.dimension == 1);
  const std::array<double, 1> x{1.5};
  CHECK(pde.exact_value(0.0, x, 3.0) == doctest::Approx(2.0 * 1.5 + 0.5 * 3.0));

  const Scenario constant = parse_scenario(
      "name: x\nkind: pde\ndriver:\n  preset: constant\n  value: 4\n");
  CHECK(build_pde(constant).exact_value(0.3, x, -1.0) == doctest::Approx(4.0));

  CHECK_THROWS_WITH_AS(build_study(sc), doctest::Contains("pde-compare"),
                       std::invalid_argument);
}

TEST_CASE("transport blocks parse with their defaults") {
  const Scenario sc = parse_scenario(kMinimal +
                                     "transport:\n  a: left.csv\n  b: right.csv\n");
  CHECK(sc.transport.configured);
  CHECK(sc.transport.cloud_a == "left.csv");
  CHECK(sc.transport.method == "assignment");
  CHECK(sc.transport.order == 2.0);
  CHECK_THROWS_WITH_AS(
      parse_scenario(kMinimal + "transport:\n  a: l.csv\n  b: r.csv\n"
                                "  method: teleport\n"),
      doctest::Contains("method"), std::invalid_argument);
}
