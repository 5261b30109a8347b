#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "qsc/scenario.hpp"

using namespace qsc;
using io::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qsc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_of(const json& j) {
  try {
    scenario::ScenarioConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("model descriptor defaults and field paths") {
  const auto m = io::ModelDescriptor::from_json(json::parse(R"({"d": 2, "n": 3, "N": 2})"));
  CHECK(m.mult.rho == std::vector<double>{1.0, 1.0});
  CHECK(m.init.m == 1);
  CHECK(m.grid.T == 1.0);
  CHECK(io::ModelDescriptor::from_json(m.to_json()).to_json() == m.to_json());
  try {
    io::ModelDescriptor::from_json(json::parse(R"({"d": 2, "rho": [1, 0.5], "n": 3, "N": 2})"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model.rho[1]") != std::string::npos);
  }
  CHECK_THROWS_AS(io::ModelDescriptor::from_json(json::parse(R"({"d": 1, "n": 3})")), ConfigError);
}

TEST_CASE("weights parse from arrays, objects and the command line") {
  CHECK(io::weight_from_json(json::parse("[1, 0.5, 2]"), "p") == WeightTriple{1, 0.5, 2});
  CHECK(io::weight_from_json(json::parse(R"({"p2": 3})"), "p") == WeightTriple{0, 3, 0});
  CHECK(io::parse_weight("1,0.5,1") == WeightTriple{1, 0.5, 1});
  CHECK_THROWS_AS(io::parse_weight("1,2"), ConfigError);
}

TEST_CASE("quadruple descriptor presets and dump references") {
  auto model = build_model(MultiplicityConfig::uniform(2), InitialConfig::trivial(), {1.0, 2}, 2);
  const fs::path dir = scratch("quad");
  io::write_file(dir / "g.csv", dump_csv(basic_process({BasicKind::annihilation, 1}, 0, model)));
  const json desc = json::parse(R"({
    "default": {"E3": ["identity", "zero"]},
    "slices": [{"E4": "scaled:0.5", "E1": [["zero", "zero"], ["identity", "zero"]]},
               {"E2": ["zero", "g.csv"]}]
  })");
  const IntegrandQuadruple q = io::load_quadruple(desc, model, dir);
  CHECK(linalg::max_abs(SparseMat(q.E4[0].mat - linalg::identity(model->dim()) * cplx(0.5))) == 0.0);
  CHECK(q.E1[0][1][0].mat.nonZeros() == model->dim());
  CHECK(q.E3[1][0].mat.nonZeros() == model->dim());
  CHECK(q.E3[1][1].mat.nonZeros() == 0);
  CHECK(q.E2[1][1].mat.nonZeros() == 0);  // A_2(t_0) = 0

  const json saved = io::save_quadruple(q, dir, "rt");
  CHECK(saved["slices"][0]["E4"] == "scaled:0.5");
  CHECK(saved["slices"][0]["E3"][0] == "identity");
  const IntegrandQuadruple back = io::load_quadruple(saved, model, dir);
  for (int k = 0; k < 2; ++k)
    CHECK(linalg::max_abs(SparseMat(back.E4[k].mat - q.E4[k].mat)) == 0.0);

  CHECK_THROWS_AS(io::load_quadruple(json::parse(R"({"slices": [{"E4": "scaled:x"}]})"), model, dir),
                  ConfigError);
  CHECK_THROWS_AS(io::load_quadruple(json::parse(R"({"slices": [{"E4": "missing.csv"}]})"), model, dir),
                  ConfigError);
}

TEST_CASE("process dumps round-trip") {
  auto model = build_model(MultiplicityConfig::uniform(1), InitialConfig::trivial(), {1.0, 3}, 2);
  const fs::path dir = scratch("proc");
  const ProcessSample P = basic_process_sample({BasicKind::creation, 0}, model) * cplx(0.5, 1.0);
  const json desc = io::save_process(P, dir, "xi");
  const ProcessSample Q = io::load_process(desc, model, dir);
  for (int k = 0; k < P.size(); ++k) CHECK(linalg::max_abs(SparseMat(P.ops[k].mat - Q.ops[k].mat)) == 0.0);
  json bad = desc;
  bad["ops"].erase(bad["ops"].begin());
  CHECK_THROWS_AS(io::load_process(bad, model, dir), ConfigError);
}

TEST_CASE("config validation: unknown kind, missing model, weight hypothesis") {
  CHECK(error_of(json::parse(R"({"scenarios": [{"kind": "nope", "model": {"d":1,"n":1,"N":1}}]})"))
            .find("scenarios[0].kind") != std::string::npos);
  CHECK(error_of(json::parse(R"({"scenarios": [{"kind": "pairing"}]})")).find("scenarios[0].model") !=
        std::string::npos);
  const std::string msg = error_of(json::parse(
      R"({"model": {"d":1,"n":2,"N":2}, "p": [0,0,0], "q": [0,1,0],
          "scenarios": [{"kind": "pairing"}, {"kind": "extract"}]})"));
  CHECK(msg.find("scenarios[1]") != std::string::npos);
  CHECK(msg.find("p - q") != std::string::npos);
}

TEST_CASE("empty scenario list passes with an empty report") {
  const auto cfg = scenario::ScenarioConfig::from_json(json::parse(R"({"scenarios": []})"));
  const auto rep = scenario::run(cfg);
  CHECK(rep.pass());
  CHECK(rep.checks.empty());
  CHECK(rep.to_json()["summary"]["checks"] == 0);
}

TEST_CASE("reports are byte-stable for a fixed seed, sequential or parallel") {
  const json j = json::parse(R"({
    "seed": 7,
    "model": {"d": 1, "n": 2, "N": 3},
    "scenarios": [
      {"name": "a", "kind": "oracle", "inputs": {"trials": 2}},
      {"name": "b", "kind": "extract", "inputs": {"trials": 2}},
      {"name": "c", "kind": "isometry", "inputs": {"samples": 2000}}
    ]})");
  const auto cfg = scenario::ScenarioConfig::from_json(j);
  const auto a = scenario::run(cfg).to_json().dump();
  const auto b = scenario::run(cfg).to_json().dump();
  scenario::RunOptions par;
  par.parallel = true;
  const auto c = scenario::run(cfg, par).to_json().dump();
  CHECK(a == b);
  CHECK(a == c);
  scenario::RunOptions other;
  other.seed = 8;
  CHECK(scenario::run(cfg, other).to_json().dump() != a);
}

TEST_CASE("a failing scenario is reported, not thrown") {
  const json j = json::parse(R"({"scenarios": [
      {"name": "big", "kind": "pairing", "model": {"d": 3, "n": 40, "N": 8}}]})");
  const auto rep = scenario::run(scenario::ScenarioConfig::from_json(j));
  CHECK_FALSE(rep.pass());
  REQUIRE(rep.errors.size() == 1);
  CHECK(rep.errors[0].find("exceeds budget") != std::string::npos);
}

TEST_CASE("convergence study fits the slope") {
  const auto r = scenario::convergence_study([](int n) { return 3.0 / (n * n); }, {4, 8, 16});
  CHECK(r.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.monotone);
  CHECK_FALSE(r.exact);
  const auto e = scenario::convergence_study([](int) { return 1e-16; }, {4, 8});
  CHECK(e.exact);
  CHECK(std::isnan(e.slope));
  const auto bumpy = scenario::convergence_study([](int n) { return n == 8 ? 1.0 : 0.5; }, {4, 8, 16});
  CHECK_FALSE(bumpy.monotone);
}

TEST_CASE("constant integrands are exact under the oracle") {
  const auto r = scenario::named_convergence("oracle-constant", {2, 4});
  CHECK(r.exact);
  CHECK(scenario::convergence_table(r).find("exact") != std::string::npos);
  CHECK_THROWS_AS(scenario::named_convergence("nope", {2}), ConfigError);
}
