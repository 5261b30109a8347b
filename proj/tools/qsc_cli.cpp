// qsc: scenario runner and file-level front end for the library.

#include <cstdio>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "qsc/scenario.hpp"

namespace fs = std::filesystem;
using namespace qsc;
using io::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool parallel = false;
};

void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  io::write_file(fs::path(c.out) / name, text);
  std::cerr << "wrote " << (fs::path(c.out) / name).string() << "\n";
}

ModelPtr load_model(const std::string& path) {
  return io::ModelDescriptor::from_json(io::read_json(path), "model").build();
}

ProcessSample load_input(const std::string& process, const std::string& quadruple,
                         const ModelPtr& model) {
  if (!process.empty() == !quadruple.empty())
    throw ConfigError("give exactly one of --process and --quadruple");
  if (!process.empty()) return io::load_process_file(process, model);
  return qs_integrate(io::load_quadruple_file(quadruple, model));
}

int cmd_run(const std::string& config, const Common& c) {
  const auto cfg = scenario::ScenarioConfig::load(config);
  scenario::RunOptions opts;
  opts.seed = c.seed;
  opts.parallel = c.parallel;
  if (!c.out.empty()) opts.out = c.out;
  const auto rep = scenario::run(cfg, opts);
  std::cout << rep.table();
  if (!c.out.empty()) {
    io::write_file(fs::path(c.out) / "report.json", rep.to_json().dump(2) + "\n");
    io::write_file(fs::path(c.out) / "report.csv", rep.csv());
    io::write_file(fs::path(c.out) / "report.txt", rep.table());
  }
  return rep.pass() ? 0 : 1;
}

int cmd_extract(const std::string& model_path, const std::string& process,
                const std::string& quadruple, const std::string& p_text, const std::string& q_text,
                const Common& c) {
  const ModelPtr model = load_model(model_path);
  const WeightTriple p = io::parse_weight(p_text), q = io::parse_weight(q_text);
  if (!p.dominates(q))
    throw ConfigError("--p/--q: p - q must lie in R_+^3 for the representation to apply");
  ProcessSample P = load_input(process, quadruple, model);
  P.p = p;
  P.q = q;
  const ExtractionResult ex = extract_blocks(P, p, q);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  const json desc = io::save_quadruple(ex.quad, dir, "extracted");
  io::write_file(dir / "quadruple.json", desc.dump(2) + "\n");
  io::write_file(dir / "defect.csv", io::defect_csv(ex));

  const PipelineResult pr = run_pipeline(P, ex, p, q);
  const ProcessSample R = qs_integrate(ex.quad, P.ops[0]);
  double reint = 0.0;
  for (int k = 0; k < R.size(); ++k)
    reint = std::max(reint, linalg::max_abs(SparseMat(R.ops[k].mat - P.ops[k].mat)));
  const json summary = {{"max_defect", ex.max_defect()},
                        {"max_E4", ex.max_E4()},
                        {"pipeline_vs_blocks", pr.max_diff_vs_blocks},
                        {"z_residual", pr.z_residual},
                        {"reintegration_residual", reint},
                        {"p", io::weight_to_json(p)},
                        {"q", io::weight_to_json(q)}};
  io::write_file(dir / "crossval.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_regularity(const std::string& model_path, const std::string& process,
                   const std::string& quadruple, const std::string& p_text,
                   const std::string& q_text, const std::string& measure, bool squared,
                   const Common& c) {
  const ModelPtr model = load_model(model_path);
  const WeightTriple p = io::parse_weight(p_text), q = io::parse_weight(q_text);
  ProcessSample P = load_input(process, quadruple, model);
  P.p = p;
  P.q = q;
  RadonMeasureEstimate m;
  if (!measure.empty()) {
    m = io::measure_from_json(io::read_json(measure), model->n(), model->dt());
  } else {
    const ExtractionResult ex = extract_blocks(P, p, q);
    m = regularity_from_integrands(ex.quad.E3, ex.quad.E2, p, q, squared);
  }
  const RegularityReport rep = regularity_estimate(P, p, q, m);
  emit(c, "regularity.csv", io::regularity_csv(rep));
  if (!c.out.empty())
    io::write_file(fs::path(c.out) / "measure.json", io::measure_to_json(m).dump(2) + "\n");
  return rep.pass ? 0 : 1;
}

std::vector<int> parse_ns(const std::string& text) {
  std::vector<int> ns;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const int v = std::stoi(tok);
    if (v < 1) throw ConfigError("--ns: grid sizes must be positive");
    ns.push_back(v);
  }
  if (ns.empty()) throw ConfigError("--ns: empty list");
  return ns;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete quantum stochastic integration and martingale representation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Override every scenario seed");
    sub->add_option("--out", common.out, "Output directory");
    sub->add_flag("--parallel", common.parallel, "Run independent work concurrently");
  };

  std::string config;
  auto* run = app.add_subcommand("run", "Run the scenarios of a config file");
  run->add_option("config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  add_common(run);

  std::string model_path;
  auto* basis = app.add_subcommand("basis", "Basis utilities");
  basis->require_subcommand(1);
  auto* dump = basis->add_subcommand("dump", "List the canonical basis as CSV");
  dump->add_option("--model", model_path, "Model descriptor (JSON)")->required()->check(CLI::ExistingFile);
  add_common(dump);

  std::string process, quadruple, p_text = "0,0,0", q_text = "0,0,0";
  auto* extract = app.add_subcommand("extract", "Recover the integrands of a sampled martingale");
  extract->add_option("--model", model_path, "Model descriptor (JSON)")->required()->check(CLI::ExistingFile);
  extract->add_option("--process", process, "Process descriptor (JSON with operator dumps)");
  extract->add_option("--quadruple", quadruple, "Quadruple descriptor to integrate first");
  extract->add_option("--p", p_text, "Domain weight p1,p2,p3");
  extract->add_option("--q", q_text, "Range weight q1,q2,q3");
  add_common(extract);

  std::string measure;
  bool squared = false;
  auto* reg = app.add_subcommand("regularity", "Check the regularity inequalities on every grid pair");
  reg->add_option("--model", model_path, "Model descriptor (JSON)")->required()->check(CLI::ExistingFile);
  reg->add_option("--process", process, "Process descriptor (JSON with operator dumps)");
  reg->add_option("--quadruple", quadruple, "Quadruple descriptor to integrate first");
  reg->add_option("--p", p_text, "Domain weight p1,p2,p3");
  reg->add_option("--q", q_text, "Range weight q1,q2,q3");
  reg->add_option("--measure", measure, "Measure density (JSON); default built from the integrands");
  reg->add_flag("--squared", squared, "Use squared integrand norms in the default measure");
  add_common(reg);

  std::string study, ns_text = "4,8,16,32";
  double T = 1.0;
  auto* conv = app.add_subcommand("convergence", "Fit the error order of a named study");
  std::string names;
  for (const auto& n : scenario::convergence_names()) names += (names.empty() ? "" : ", ") + n;
  conv->add_option("study", study, "One of: " + names)->required();
  conv->add_option("--ns", ns_text, "Grid sizes, comma separated");
  conv->add_option("--T", T, "Horizon");
  add_common(conv);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, common);
    if (*dump) {
      emit(common, "basis.csv", basis_csv(*load_model(model_path)));
      return 0;
    }
    if (*extract) return cmd_extract(model_path, process, quadruple, p_text, q_text, common);
    if (*reg)
      return cmd_regularity(model_path, process, quadruple, p_text, q_text, measure, squared, common);
    if (*conv) {
      const auto r = scenario::named_convergence(study, parse_ns(ns_text), json{{"T", T}});
      emit(common, "convergence.csv", scenario::convergence_table(r));
      return 0;
    }
  } catch (const qsc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
