#pragma once

// Scenario runner: builds models from a config, runs the named check suites
// and collects one line per check.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qsc/io.hpp"

namespace qsc::scenario {

using io::json;
namespace fs = std::filesystem;

enum class Kind {
  pairing,
  integrate,
  extract,
  ito_table,
  oracle,
  gronwall,
  regularity,
  weyl,
  isometry,
  pipeline,
};

Kind kind_from_string(const std::string& s, const std::string& path);
std::string to_string(Kind k);
/// Kinds whose martingales live in L(G_p, G_q) and so need p - q >= 0.
bool needs_dominating_weights(Kind k);

struct Scenario {
  std::string name;
  Kind kind = Kind::pairing;
  json inputs = json::object();
  json tolerances = json::object();
  std::optional<std::uint64_t> seed;
  std::optional<io::ModelDescriptor> model;
  std::optional<WeightTriple> p, q;
};

struct ScenarioConfig {
  std::optional<io::ModelDescriptor> model;
  WeightTriple p, q;
  std::uint64_t seed = 20240611;
  std::vector<Scenario> scenarios;
  fs::path base_dir;

  /// Validates every field; errors carry the JSON path.
  static ScenarioConfig from_json(const json& j, const fs::path& base_dir = {});
  static ScenarioConfig load(const fs::path& file);
};

struct Check {
  std::string scenario;
  std::string name;
  double measured = 0.0;
  /// "==": |measured - expected| <= tolerance; "<=" / ">=": against the bound in `expected`.
  std::string relation = "==";
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  static Check equal(std::string name, double measured, double expected, double tol);
  static Check at_most(std::string name, double measured, double bound);
  static Check at_least(std::string name, double measured, double bound);
};

struct CheckReport {
  std::vector<Check> checks;
  std::vector<std::string> errors;  // scenarios that threw

  bool pass() const;
  json to_json() const;
  std::string table() const;
  std::string csv() const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  bool parallel = false;
  /// Directory for per-scenario artefacts; empty disables them.
  fs::path out;
};

/// Runs one scenario. p and q default to the config's.
std::vector<Check> run_scenario(const Scenario& s, const ScenarioConfig& cfg,
                                std::uint64_t seed, const fs::path& out = {});

/// Runs every scenario in order. A scenario that throws is recorded as an
/// error and fails the report.
CheckReport run(const ScenarioConfig& cfg, const RunOptions& opts = {});

struct ConvergenceResult {
  std::vector<int> ns;
  std::vector<double> dts, errors;
  double slope = 0.0;
  bool exact = false;     // every error below the exact threshold; slope undefined
  bool monotone = true;   // errors decrease as n grows
};

/// Least-squares slope of log(error) against log(dt) with dt = T/n.
ConvergenceResult convergence_study(const std::function<double(int)>& error_at,
                                    const std::vector<int>& ns, double T = 1.0,
                                    double exact_below = 1e-13);

/// Named studies: "weyl-euler", "weyl-euler-half-dt", "ito-table", "oracle-constant".
/// `opts` may set T, d and N for the studies that build models.
ConvergenceResult named_convergence(const std::string& which, const std::vector<int>& ns,
                                    const json& opts = json::object());
std::vector<std::string> convergence_names();

std::string convergence_table(const ConvergenceResult& r);

}  // namespace qsc::scenario
