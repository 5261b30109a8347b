#include "qsc/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <random>
#include <sstream>

namespace qsc::scenario {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

const std::vector<std::pair<Kind, const char*>>& kind_names() {
  static const std::vector<std::pair<Kind, const char*>> names = {
      {Kind::pairing, "pairing"},       {Kind::integrate, "integrate"},
      {Kind::extract, "extract"},       {Kind::ito_table, "ito_table"},
      {Kind::oracle, "oracle"},         {Kind::gronwall, "gronwall"},
      {Kind::regularity, "regularity"}, {Kind::weyl, "weyl"},
      {Kind::isometry, "isometry"},     {Kind::pipeline, "pipeline"},
  };
  return names;
}

std::string wstr(const WeightTriple& w) {
  return "(" + io::fmt(w.p1) + "," + io::fmt(w.p2) + "," + io::fmt(w.p3) + ")";
}

// Scenario-local view of inputs and tolerances with path-carrying errors.
struct Ctx {
  const Scenario& s;
  ModelPtr model;
  WeightTriple p, q;
  std::uint64_t seed;
  fs::path base, out;
  std::vector<Check> checks;

  std::string at(const std::string& key) const { return "scenario '" + s.name + "'." + key; }

  double num(const char* key, double dflt) const {
    if (!s.inputs.contains(key)) return dflt;
    if (!s.inputs[key].is_number()) fail(at(std::string("inputs.") + key), "expected a number");
    return s.inputs[key].get<double>();
  }
  int integer(const char* key, int dflt, int lo = 0) const {
    if (!s.inputs.contains(key)) return dflt;
    if (!s.inputs[key].is_number_integer())
      fail(at(std::string("inputs.") + key), "expected an integer");
    const int v = s.inputs[key].get<int>();
    if (v < lo) fail(at(std::string("inputs.") + key), "must be >= " + std::to_string(lo));
    return v;
  }
  bool flag(const char* key, bool dflt) const {
    if (!s.inputs.contains(key)) return dflt;
    if (!s.inputs[key].is_boolean()) fail(at(std::string("inputs.") + key), "expected true/false");
    return s.inputs[key].get<bool>();
  }
  std::vector<int> ints(const char* key, std::vector<int> dflt) const {
    if (!s.inputs.contains(key)) return dflt;
    const json& j = s.inputs[key];
    if (!j.is_array() || j.empty()) fail(at(std::string("inputs.") + key), "expected a list of integers");
    std::vector<int> out;
    for (const auto& v : j) {
      if (!v.is_number_integer() || v.get<int>() < 1)
        fail(at(std::string("inputs.") + key), "expected positive integers");
      out.push_back(v.get<int>());
    }
    return out;
  }
  double tol(const char* key, double dflt) const {
    if (!s.tolerances.contains(key)) return dflt;
    if (!s.tolerances[key].is_number()) fail(at(std::string("tolerances.") + key), "expected a number");
    return s.tolerances[key].get<double>();
  }

  void add(Check c) {
    c.scenario = s.name;
    checks.push_back(std::move(c));
  }
  std::mt19937_64 rng(std::uint64_t salt = 0) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
  }
};

Eigen::VectorXcd unit_vector(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd u(m);
  for (int i = 0; i < m; ++i) u(i) = cplx(g(rng), g(rng));
  return u / u.norm();
}

Eigen::VectorXcd first_basis(int m) {
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(m);
  u(0) = 1.0;
  return u;
}

// Real step function with entries in [-1, 1], rescaled to norm `norm`.
StepFunction random_step(int n, int d, double dt, double norm, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  StepFunction f = StepFunction::zero(n, d);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < d; ++i) f.values(s, i) = U(rng);
  const double cur = std::sqrt(f.norm_sq(dt));
  return cur > 0 ? f * cplx(norm / cur) : f;
}

OperatorMatrix random_initial(const ModelPtr& model, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd X(model->m(), model->m());
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < X.cols(); ++c) X(r, c) = cplx(g(rng), g(rng));
  X /= std::max(1.0, linalg::spectral_norm(X));
  return initial_operator(X, model);
}

// The three (vector, test function) pairs that make up the 9-element battery.
std::vector<std::pair<Eigen::VectorXcd, StepFunction>> battery(const ModelSpace& model) {
  const int n = model.n(), d = model.d(), m = model.m();
  std::vector<std::pair<Eigen::VectorXcd, StepFunction>> b;
  b.emplace_back(first_basis(m), StepFunction::constant(n, d, 0.5));
  Eigen::VectorXcd u1 = Eigen::VectorXcd::Ones(m);
  for (int i = 0; i < m; ++i) u1(i) = cplx(1.0, 0.5 * i);
  b.emplace_back(u1 / u1.norm(), StepFunction::channel_indicator(n, d, 0, 0, (n + 1) / 2, 0.8));
  StepFunction alt = StepFunction::zero(n, d);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < d; ++i) alt.values(s, i) = (s % 2 ? -0.6 : 0.6) * (1.0 + 0.25 * i);
  Eigen::VectorXcd u2 = Eigen::VectorXcd::Zero(m);
  u2(m - 1) = 1.0;
  b.emplace_back(u2, alt);
  return b;
}

struct Source {
  std::string name;
  ProcessSample P;
  std::optional<IntegrandQuadruple> quad;
};

ProcessSample with_weights(ProcessSample P, const WeightTriple& p, const WeightTriple& q) {
  P.p = p;
  P.q = q;
  return P;
}

IntegrandQuadruple preset_quadruple(const BasicProcessSpec& spec, const ModelPtr& model) {
  IntegrandQuadruple q = IntegrandQuadruple::zero(model);
  for (int k = 0; k < model->n(); ++k) {
    switch (spec.kind) {
      case BasicKind::conservation: q.E1[k][spec.i][spec.j] = OperatorMatrix::identity(model); break;
      case BasicKind::annihilation: q.E2[k][spec.i] = OperatorMatrix::identity(model); break;
      case BasicKind::creation: q.E3[k][spec.i] = OperatorMatrix::identity(model); break;
    }
  }
  return q;
}

std::vector<BasicProcessSpec> all_specs(int d) {
  std::vector<BasicProcessSpec> out;
  for (int i = 0; i < d; ++i) {
    out.push_back({BasicKind::annihilation, i});
    out.push_back({BasicKind::creation, i});
    for (int j = 0; j < d; ++j) out.push_back({BasicKind::conservation, i, j});
  }
  return out;
}

// Sources given as files in the inputs, integrated when they are quadruples.
void file_sources(Ctx& c, std::vector<Source>& out) {
  if (c.s.inputs.contains("quadruple")) {
    if (!c.s.inputs["quadruple"].is_string()) fail(c.at("inputs.quadruple"), "expected a path");
    const fs::path f = c.base / c.s.inputs["quadruple"].get<std::string>();
    IntegrandQuadruple q = io::load_quadruple_file(f, c.model);
    out.push_back({f.filename().string(), with_weights(qs_integrate(q), c.p, c.q), q});
  }
  if (c.s.inputs.contains("process")) {
    if (!c.s.inputs["process"].is_string()) fail(c.at("inputs.process"), "expected a path");
    const fs::path f = c.base / c.s.inputs["process"].get<std::string>();
    out.push_back({f.filename().string(), with_weights(io::load_process_file(f, c.model), c.p, c.q),
                   std::nullopt});
  }
}

// ---------------------------------------------------------------------------

void run_pairing(Ctx& c) {
  const auto& model = c.model;
  const int n = model->n(), d = model->d();
  const StepFunction f = StepFunction::constant(n, d, c.num("f", 1.0));
  const StepFunction g = StepFunction::constant(n, d, c.num("g", 1.0));
  const cplx val = pair_bilinear(exponential_vector(f, model), exponential_vector(g, model));
  const double expected = std::exp(f.bilinear(g, model->dt()).real());
  c.add(Check::equal("<phi_f, phi_g> = exp<f,g>", val.real(), expected, c.tol("abs", 1e-6)));
  const double tail = truncation_bound(f, model->dt(), model->N()) *
                      truncation_bound(g, model->dt(), model->N());
  c.add(Check::at_most("pairing error within truncation tail", std::abs(val - expected),
                       tail + 1e-14 * expected));
}

void run_ito(Ctx& c) {
  const auto& model = c.model;
  std::vector<ItoCell> agg;
  for (int k = 0; k < model->n(); ++k) {
    const ItoReport rep = verify_ito_table(k, model, c.tol("zero", 1e-12));
    if (agg.empty()) agg = rep.cells;
    for (std::size_t i = 0; i < rep.cells.size(); ++i) {
      agg[i].residual = std::max(agg[i].residual, rep.cells[i].residual);
      agg[i].tolerance = std::max(agg[i].tolerance, rep.cells[i].tolerance);
      agg[i].pass = agg[i].pass && rep.cells[i].pass;
    }
  }
  for (const auto& cell : agg) {
    Check ch = Check::at_most(cell.left + " " + cell.right + " = " + cell.expected,
                              cell.residual, cell.tolerance);
    ch.pass = cell.pass;
    c.add(ch);
  }
  json opts = {{"d", model->d()}, {"N", model->N()}, {"T", model->grid().T}};
  const auto r = named_convergence("ito-table", c.ints("ns", {4, 8, 16, 32}), opts);
  c.add(Check::at_least("Ito remainder order", r.slope, c.tol("min_order", 1.9)));
}

void run_oracle(Ctx& c) {
  const auto& model = c.model;
  const int trials = c.integer("trials", 20);
  const auto bat = battery(*model);
  const double dt = model->dt();
  auto compare = [&](const IntegrandQuadruple& q, double& worst, double& tol_min) {
    const ProcessSample P = qs_integrate(q);
    for (const auto& [u, f] : bat)
      for (const auto& [v, g] : bat) {
        const double tol = std::max(c.tol("abs", 1e-9), truncation_bound(f, dt, model->N()) *
                                                            truncation_bound(g, dt, model->N()));
        tol_min = std::min(tol_min, tol);
        for (int K = 1; K <= model->n(); ++K) {
          const cplx a = matrix_element(P.ops[K], u, f, v, g);
          const cplx b = oracle_matrix_element(q, u, f, v, g, K);
          worst = std::max(worst, std::abs(a - b));
        }
      }
    return P;
  };
  auto rng = c.rng();
  RandomQuadrupleOptions opts;
  opts.time = true;
  double worst = 0.0, tol_min = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) compare(random_adapted_quadruple(model, rng, opts), worst, tol_min);
  if (trials > 0)
    c.add(Check::at_most("matrix path vs oracle, " + std::to_string(trials) + " random quadruples",
                         worst, tol_min));
  double pw = 0.0, ptol = std::numeric_limits<double>::infinity(), sample_diff = 0.0;
  for (const auto& spec : all_specs(model->d())) {
    const ProcessSample P = compare(preset_quadruple(spec, model), pw, ptol);
    const ProcessSample B = basic_process_sample(spec, model);
    for (int k = 0; k < P.size(); ++k)
      sample_diff = std::max(sample_diff, linalg::max_abs(SparseMat(P.ops[k].mat - B.ops[k].mat)));
  }
  {
    IntegrandQuadruple q = IntegrandQuadruple::zero(model);
    for (int k = 0; k < model->n(); ++k) q.E4[k] = OperatorMatrix::identity(model);
    compare(q, pw, ptol);
  }
  c.add(Check::at_most("matrix path vs oracle, basic-process presets", pw, c.tol("exact", 1e-12)));
  c.add(Check::at_most("preset integrals equal basic processes", sample_diff, c.tol("exact", 1e-12)));
}

void run_gronwall(Ctx& c) {
  const auto& model = c.model;
  const int trials = c.integer("trials", 100);
  auto rng = c.rng();
  std::uniform_real_distribution<double> U(0.05, 1.0);
  RandomQuadrupleOptions opts;
  opts.time = true;
  opts.max_norm = c.num("max_norm", 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    IntegrandQuadruple q = random_adapted_quadruple(model, rng, opts);
    q.p = c.p;
    const Eigen::VectorXcd u = unit_vector(model->m(), rng);
    const StepFunction f = random_step(model->n(), model->d(), model->dt(), U(rng), rng);
    const ProcessSample P = qs_integrate(q);
    const StateVector psi = tensor_with_initial(model, u, f);
    for (int K = 1; K <= model->n(); ++K) {
      const double lhs = std::pow(weighted_norm(c.p, P.ops[K].apply(psi)), 2);
      const double bound = gronwall_bound(q, u, f, c.p, K);
      if (bound > 0) worst = std::max(worst, lhs / bound);
      else if (lhs > 0) worst = std::numeric_limits<double>::infinity();
    }
  }
  c.add(Check::at_most("max |Xi u phi_f|_p^2 / bound over " + std::to_string(trials) + " trials",
                       worst, c.tol("ratio", 1.05)));
}

void run_integrate(Ctx& c) {
  const auto& model = c.model;
  const int trials = c.integer("trials", 20);
  auto rng = c.rng();
  std::vector<Source> sources;
  file_sources(c, sources);
  RandomQuadrupleOptions opts;
  for (int t = 0; t < trials; ++t) {
    IntegrandQuadruple q = random_adapted_quadruple(model, rng, opts);
    sources.push_back({"random", qs_integrate(q), q});
  }
  double defect = 0.0, adapt = 0.0;
  for (const auto& src : sources) {
    adapt = std::max(adapt, adaptedness_check(src.P).max_residual);
    defect = std::max(defect, martingale_defect(src.P));
  }
  if (!sources.empty()) {
    c.add(Check::at_most("adaptedness residual of integrals", adapt, c.tol("adapted", 1e-12)));
    c.add(Check::at_most("martingale defect, E4 = 0", defect, c.tol("defect", 1e-10)));
  }
  const double scale = c.num("time_scale", 1.0);
  IntegrandQuadruple q = IntegrandQuadruple::zero(model);
  for (int k = 0; k < model->n(); ++k) q.E4[k] = OperatorMatrix::identity(model) * cplx(scale);
  const ProcessSample P = qs_integrate(q);
  double worst = 0.0;
  for (int s = 0; s < P.size(); ++s) {
    const Eigen::MatrixXcd base = past_block(P.ops[s], s, 0, 0);
    for (int t = s + 1; t < P.size(); ++t) {
      const Eigen::MatrixXcd diff = past_block(P.ops[t], s, 0, 0) - base;
      const double gap = scale * (P.time(t) - P.time(s));
      worst = std::max(worst, linalg::max_abs(Eigen::MatrixXcd(
                                  diff - gap * Eigen::MatrixXcd::Identity(diff.rows(), diff.cols()))));
    }
  }
  c.add(Check::at_most("dt integral: E_s[Xi(t)] - Xi(s) - (t-s) I", worst, c.tol("exact", 1e-12)));
  c.add(Check::equal("dt integral defect", martingale_defect(P), scale * model->grid().T,
                     c.tol("exact", 1e-12)));
}

void run_extract(Ctx& c) {
  const auto& model = c.model;
  const int trials = c.integer("trials", 20);
  auto rng = c.rng();
  std::vector<Source> sources;
  file_sources(c, sources);
  RandomQuadrupleOptions opts;
  for (int t = 0; t < trials; ++t) {
    IntegrandQuadruple q = random_adapted_quadruple(model, rng, opts);
    const OperatorMatrix xi0 = random_initial(model, rng);
    sources.push_back({"random", with_weights(qs_integrate(q, xi0), c.p, c.q), q});
  }
  double recover = 0.0, defect = 0.0, e4 = 0.0, reint = 0.0;
  bool any_quad = false;
  for (const auto& src : sources) {
    const ExtractionResult ex = extract_blocks(src.P, c.p, c.q);
    defect = std::max(defect, ex.max_defect());
    e4 = std::max(e4, ex.max_E4());
    if (src.quad) {
      any_quad = true;
      const auto& q = *src.quad;
      for (int k = 0; k < model->n(); ++k)
        for (int i = 0; i < model->d(); ++i) {
          for (int j = 0; j < model->d(); ++j)
            recover = std::max(recover, observable_diff(ex.quad.E1[k][i][j], q.E1[k][i][j], k));
          recover = std::max(recover, observable_diff(ex.quad.E2[k][i], q.E2[k][i], k));
          recover = std::max(recover, observable_diff(ex.quad.E3[k][i], q.E3[k][i], k));
        }
    }
    const ProcessSample R = qs_integrate(ex.quad, src.P.ops[0]);
    for (int k = 0; k < R.size(); ++k)
      reint = std::max(reint, linalg::max_abs(SparseMat(R.ops[k].mat - src.P.ops[k].mat)));
    if (!c.out.empty() && src.name != "random") {
      const std::string stem = c.s.name + "_" + fs::path(src.name).stem().string();
      io::write_file(c.out / (stem + "_quadruple.json"),
                     io::save_quadruple(ex.quad, c.out, stem).dump(2) + "\n");
      io::write_file(c.out / (stem + "_defect.csv"), io::defect_csv(ex));
    }
  }
  if (sources.empty()) return;
  if (any_quad)
    c.add(Check::at_most("recovered integrands vs originals", recover, c.tol("recover", 1e-10)));
  c.add(Check::at_most("representability defect", defect, c.tol("defect", 1e-10)));
  c.add(Check::at_most("time integrand E4", e4, c.tol("defect", 1e-10)));
  c.add(Check::at_most("re-integration vs Xi", reint, c.tol("exact", 1e-12)));
}

std::vector<std::pair<WeightTriple, WeightTriple>> weight_pairs(const Ctx& c) {
  if (!c.s.inputs.contains("weights")) return {{{}, {}}, {{1.0, 0.5, 1.0}, {}}};
  const json& w = c.s.inputs["weights"];
  if (!w.is_array()) fail(c.at("inputs.weights"), "expected a list of [p, q] pairs");
  std::vector<std::pair<WeightTriple, WeightTriple>> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const std::string path = c.at("inputs.weights[" + std::to_string(i) + "]");
    if (!w[i].is_array() || w[i].size() != 2) fail(path, "expected [p, q]");
    out.emplace_back(io::weight_from_json(w[i][0], path + "[0]"),
                     io::weight_from_json(w[i][1], path + "[1]"));
  }
  return out;
}

void run_regularity(Ctx& c) {
  const auto& model = c.model;
  const int trials = c.integer("trials", 10);
  const bool squared = c.flag("squared", false);
  auto rng = c.rng();
  std::vector<Source> sources;
  file_sources(c, sources);
  if (c.flag("creation_preset", true)) {
    const BasicProcessSpec a1{BasicKind::creation, 0};
    sources.push_back({"A1*", basic_process_sample(a1, model), preset_quadruple(a1, model)});
  }
  RandomQuadrupleOptions opts;
  opts.conservation = false;
  for (int t = 0; t < trials; ++t) {
    IntegrandQuadruple q = random_adapted_quadruple(model, rng, opts);
    sources.push_back({"random" + std::to_string(t), qs_integrate(q), q});
  }
  for (const auto& [p, q] : weight_pairs(c)) {
    const std::string w = " p=" + wstr(p) + " q=" + wstr(q);
    double reg_ratio = 0.0, wl_ratio = 0.0, wf_ratio = 0.0, mono = 0.0;
    bool reg_pass = true, wl_pass = true, mono_pass = true;
    for (const auto& src : sources) {
      const ProcessSample P = with_weights(src.P, p, q);
      ExtractionResult ex;
      if (src.quad) {
        ex.quad = *src.quad;
        ex.p = p;
        ex.q = q;
      } else {
        ex = extract_blocks(P, p, q);
      }
      const RadonMeasureEstimate m = regularity_from_integrands(ex.quad.E3, ex.quad.E2, p, q, squared);
      const RegularityReport rep = regularity_estimate(P, p, q, m);
      for (const auto& pr : rep.pairs)
        if (pr.m > 0) reg_ratio = std::max(reg_ratio, std::max(pr.lhs_forward, pr.lhs_adjoint) / pr.m);
      reg_pass = reg_pass && rep.pass;
      const WeakLimitSums wl = weak_limit_sums(ex, p, q, m);
      wl_ratio = std::max(wl_ratio, wl.worst_ratio);
      wl_pass = wl_pass && wl.pass;
      for (std::size_t k = 0; k < wl.bound.size(); ++k) {
        const double lhs = std::max(std::exp(2.0 * q.p2) * wl.ops.G_norm[k],
                                    std::exp(-2.0 * p.p2) * wl.ops.F_norm[k]);
        if (wl.bound[k] > 0) wf_ratio = std::max(wf_ratio, lhs / wl.bound[k]);
      }
      const MonotonicityReport mr = norm_monotonicity(P, p, q, c.tol("monotone", 1e-10));
      mono = std::max(mono, mr.max_violation);
      mono_pass = mono_pass && mr.pass;
      if (!c.out.empty() && src.name.rfind("random", 0) != 0) {
        const std::string stem = c.s.name + "_" + fs::path(src.name).stem().string() + "_p" +
                                 io::fmt(p.p1) + "_" + io::fmt(p.p2) + "_" + io::fmt(p.p3);
        io::write_file(c.out / (stem + "_regularity.csv"), io::regularity_csv(rep));
      }
    }
    Check reg = Check::at_most("regularity max lhs/m" + w, reg_ratio, 1.0 + 1e-10);
    reg.pass = reg_pass;
    c.add(reg);
    Check wl = Check::at_most("weak-limit max(|G|,|F|)/m'" + w, wl_ratio, 1.0 + 1e-10);
    wl.pass = wl_pass;
    c.add(wl);
    c.add(Check::at_most("weak-limit max(e^{2q2}|G|,e^{-2p2}|F|)/m'" + w, wf_ratio, 1.0 + 1e-10));
    Check mo = Check::at_most("norm monotonicity violation" + w, mono, c.tol("monotone", 1e-10));
    mo.pass = mono_pass;
    c.add(mo);
  }
}

void run_weyl(Ctx& c) {
  const auto& model = c.model;
  const ProcessSample U = weyl_martingale_U(0, UScheme::closed_form, model);
  const StateVector vac = StateVector::basis(model, model->vacuum());
  double worst = 0.0, bound = std::numeric_limits<double>::infinity();
  for (int k = 0; k < U.size(); ++k) {
    const double t = U.time(k);
    const cplx val = std::exp(-0.5 * t) * inner(vac, U.ops[k].apply(vac));
    worst = std::max(worst, std::abs(val - std::exp(-0.5 * t)));
    const StepFunction h = StepFunction::channel_indicator(model->n(), model->d(), 0, 0, k);
    bound = std::min(bound, std::max(c.tol("abs", 1e-12), truncation_bound(h, model->dt(), model->N())));
  }
  c.add(Check::at_most("<Omega, e^{-t/2} U(t) Omega> - e^{-t/2}", worst, bound));
  const auto ns = c.ints("ns", {4, 8, 16, 32});
  const json opts = {{"T", model->grid().T}};
  const auto e = named_convergence("weyl-euler", ns, opts);
  c.add(Check::at_least("U recursion (I + dA* - dA) order", e.slope, c.tol("min_order", 0.9)));
  const auto h = named_convergence("weyl-euler-half-dt", ns, opts);
  c.add(Check::at_most("U recursion with -dt/2 I term: order", h.slope, c.tol("max_bad_order", 0.5)));
  c.add(Check::at_least("U recursion with -dt/2 I term: final error", h.errors.back(),
                        c.tol("plateau", 0.25)));
}

void run_isometry(Ctx& c) {
  const auto& model = c.model;
  const int n = model->n(), d = model->d();
  const double dt = model->dt();
  const long long samples = static_cast<long long>(c.num("samples", 1e5));
  const int workers = c.integer("workers", 1, 1);
  const double sigmas = c.tol("sigmas", 4.0);
  StepFunction alt = StepFunction::zero(n, d);
  for (int s = 0; s < n; ++s) alt.values(s, 0) = s % 2 ? -0.8 : 0.8;
  const std::vector<std::pair<StepFunction, StepFunction>> cases = {
      {StepFunction::constant(n, d, 1.0), StepFunction::constant(n, d, 1.0)},
      {StepFunction::channel_indicator(n, d, 0, 0, (n + 1) / 2, 0.5), StepFunction::constant(n, d, 0.3)},
      {alt, StepFunction::channel_indicator(n, d, d - 1, 0, n, -0.5)},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto rep = wiener_isometry_check(cases[i].first, cases[i].second, dt, samples,
                                           c.seed + 7919 * i, workers, sigmas);
    Check ch = Check::at_most("case " + std::to_string(i + 1) + ": |E[e(f)e(g)] - exp<f,g>|",
                              std::abs(rep.estimate - rep.expected), sigmas * rep.std_error);
    c.add(ch);
  }
}

void run_pipeline_kind(Ctx& c) {
  const auto& model = c.model;
  const int d = model->d();
  std::vector<Source> sources;
  file_sources(c, sources);
  if (c.flag("presets", true)) {
    const BasicProcessSpec a1{BasicKind::creation, 0}, l11{BasicKind::conservation, 0, 0};
    sources.push_back({"A1*", basic_process_sample(a1, model), std::nullopt});
    sources.push_back({"Lambda11", basic_process_sample(l11, model), std::nullopt});
    if (d >= 2) {
      const BasicProcessSpec l12{BasicKind::conservation, 0, 1};
      sources.push_back({"Lambda12", basic_process_sample(l12, model), std::nullopt});
    }
    const int o = d >= 2 ? 1 : 0;
    ProcessSample mixed = basic_process_sample(a1, model) +
                          basic_process_sample({BasicKind::conservation, 0, o}, model) * cplx(0.5) +
                          basic_process_sample({BasicKind::annihilation, o}, model) * cplx(0.25, -0.5) +
                          basic_process_sample({BasicKind::conservation, o, 0}, model) * cplx(-0.3);
    sources.push_back({"mixed", mixed, std::nullopt});
  }
  auto rng = c.rng();
  RandomQuadrupleOptions opts;
  for (int t = 0, T = c.integer("trials", 5); t < T; ++t) {
    IntegrandQuadruple q = random_adapted_quadruple(model, rng, opts);
    const OperatorMatrix xi0 = random_initial(model, rng);
    sources.push_back({"random" + std::to_string(t), qs_integrate(q, xi0), q});
  }
  double worst_diff = 0.0, worst_z = 0.0;
  for (const auto& src : sources) {
    const ProcessSample P = with_weights(src.P, c.p, c.q);
    const ExtractionResult ex = extract_blocks(P, c.p, c.q);
    const PipelineResult pr = run_pipeline(P, ex, c.p, c.q);
    c.add(Check::at_most("E_ij pipeline vs blocks [" + src.name + "]", pr.max_diff_vs_blocks,
                         c.tol("agree", 1e-6)));
    worst_diff = std::max(worst_diff, pr.max_diff_vs_blocks);
    worst_z = std::max(worst_z, pr.z_residual);
  }
  c.add(Check::at_most("Z(t) - Z(0) - sum E_ij dLambda_ij", worst_z, c.tol("residual", 1e-6)));
}

}  // namespace

// ---------------------------------------------------------------------------

Kind kind_from_string(const std::string& s, const std::string& path) {
  for (const auto& [k, name] : kind_names())
    if (s == name) return k;
  std::string all;
  for (const auto& [k, name] : kind_names()) all += (all.empty() ? "" : ", ") + std::string(name);
  fail(path, "unknown kind '" + s + "' (expected one of " + all + ")");
}

std::string to_string(Kind k) {
  for (const auto& [kk, name] : kind_names())
    if (kk == k) return name;
  return "?";
}

bool needs_dominating_weights(Kind k) { return k == Kind::extract || k == Kind::pipeline; }

Check Check::equal(std::string name, double measured, double expected, double tol) {
  Check c;
  c.name = std::move(name);
  c.measured = measured;
  c.expected = expected;
  c.tolerance = tol;
  c.relation = "==";
  c.pass = std::abs(measured - expected) <= tol;
  return c;
}

Check Check::at_most(std::string name, double measured, double bound) {
  Check c;
  c.name = std::move(name);
  c.measured = measured;
  c.expected = bound;
  c.relation = "<=";
  c.pass = measured <= bound;
  return c;
}

Check Check::at_least(std::string name, double measured, double bound) {
  Check c;
  c.name = std::move(name);
  c.measured = measured;
  c.expected = bound;
  c.relation = ">=";
  c.pass = measured >= bound;
  return c;
}

ScenarioConfig ScenarioConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) fail("config", "expected an object");
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  if (j.contains("model")) cfg.model = io::ModelDescriptor::from_json(j["model"], "model");
  if (j.contains("p")) cfg.p = io::weight_from_json(j["p"], "p");
  if (j.contains("q")) cfg.q = io::weight_from_json(j["q"], "q");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (!j.contains("scenarios")) return cfg;
  if (!j["scenarios"].is_array()) fail("scenarios", "expected an array");
  const json& list = j["scenarios"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string at = "scenarios[" + std::to_string(i) + "]";
    const json& e = list[i];
    if (!e.is_object()) fail(at, "expected an object");
    Scenario s;
    if (!e.contains("kind") || !e["kind"].is_string()) fail(at + ".kind", "missing");
    s.kind = kind_from_string(e["kind"].get<std::string>(), at + ".kind");
    s.name = e.contains("name") && e["name"].is_string() ? e["name"].get<std::string>()
                                                         : to_string(s.kind) + std::to_string(i);
    if (e.contains("model")) s.model = io::ModelDescriptor::from_json(e["model"], at + ".model");
    if (!s.model && !cfg.model) fail(at + ".model", "missing and no top-level model is given");
    if (e.contains("p")) s.p = io::weight_from_json(e["p"], at + ".p");
    if (e.contains("q")) s.q = io::weight_from_json(e["q"], at + ".q");
    if (e.contains("inputs")) {
      if (!e["inputs"].is_object()) fail(at + ".inputs", "expected an object");
      s.inputs = e["inputs"];
    }
    if (e.contains("tolerances")) {
      if (!e["tolerances"].is_object()) fail(at + ".tolerances", "expected an object");
      s.tolerances = e["tolerances"];
    }
    if (e.contains("seed")) {
      if (!e["seed"].is_number_unsigned()) fail(at + ".seed", "expected a non-negative integer");
      s.seed = e["seed"].get<std::uint64_t>();
    }
    const WeightTriple p = s.p.value_or(cfg.p), q = s.q.value_or(cfg.q);
    if (needs_dominating_weights(s.kind) && !p.dominates(q))
      fail(at + (s.p ? ".p" : ".q"),
           "p - q = " + wstr({p.p1 - q.p1, p.p2 - q.p2, p.p3 - q.p3}) + " must lie in R_+^3: the "
           "the representation needs p - q >= 0 componentwise for " + to_string(s.kind));
    cfg.scenarios.push_back(std::move(s));
  }
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const fs::path& file) {
  return from_json(io::read_json(file), file.parent_path());
}

std::vector<Check> run_scenario(const Scenario& s, const ScenarioConfig& cfg, std::uint64_t seed,
                                const fs::path& out) {
  const io::ModelDescriptor desc = s.model ? *s.model : *cfg.model;
  Ctx c{s, desc.build(), s.p.value_or(cfg.p), s.q.value_or(cfg.q), seed, cfg.base_dir, out, {}};
  switch (s.kind) {
    case Kind::pairing: run_pairing(c); break;
    case Kind::integrate: run_integrate(c); break;
    case Kind::extract: run_extract(c); break;
    case Kind::ito_table: run_ito(c); break;
    case Kind::oracle: run_oracle(c); break;
    case Kind::gronwall: run_gronwall(c); break;
    case Kind::regularity: run_regularity(c); break;
    case Kind::weyl: run_weyl(c); break;
    case Kind::isometry: run_isometry(c); break;
    case Kind::pipeline: run_pipeline_kind(c); break;
  }
  return std::move(c.checks);
}

CheckReport run(const ScenarioConfig& cfg, const RunOptions& opts) {
  const std::size_t count = cfg.scenarios.size();
  std::vector<std::vector<Check>> results(count);
  std::vector<std::string> errors(count);
  auto one = [&](std::size_t i) {
    const Scenario& s = cfg.scenarios[i];
    const std::uint64_t seed = opts.seed ? *opts.seed + i : s.seed.value_or(cfg.seed + i);
    try {
      results[i] = run_scenario(s, cfg, seed, opts.out);
    } catch (const std::exception& e) {
      errors[i] = s.name + ": " + e.what();
    }
  };
  if (opts.parallel) {
    std::vector<std::future<void>> fs;
    for (std::size_t i = 0; i < count; ++i) fs.push_back(std::async(std::launch::async, one, i));
    for (auto& f : fs) f.get();
  } else {
    for (std::size_t i = 0; i < count; ++i) one(i);
  }
  CheckReport rep;
  for (std::size_t i = 0; i < count; ++i) {
    rep.checks.insert(rep.checks.end(), results[i].begin(), results[i].end());
    if (!errors[i].empty()) rep.errors.push_back(errors[i]);
  }
  return rep;
}

bool CheckReport::pass() const {
  if (!errors.empty()) return false;
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

json CheckReport::to_json() const {
  json list = json::array();
  std::size_t failed = 0;
  for (const auto& c : checks) {
    failed += c.pass ? 0 : 1;
    json e = {{"scenario", c.scenario}, {"name", c.name},     {"measured", c.measured},
              {"relation", c.relation}, {"expected", c.expected}, {"pass", c.pass}};
    if (c.relation == "==") e["tolerance"] = c.tolerance;
    list.push_back(e);
  }
  return {{"pass", pass()},
          {"summary", {{"checks", checks.size()}, {"failed", failed}, {"errors", errors.size()}}},
          {"checks", list},
          {"errors", errors}};
}

std::string CheckReport::table() const {
  std::ostringstream os;
  char buf[512];
  for (const auto& c : checks) {
    if (c.relation == "==")
      std::snprintf(buf, sizeof buf, "%-4s %-14s %-58s %13.6e == %13.6e +- %.1e\n",
                    c.pass ? "ok" : "FAIL", c.scenario.c_str(), c.name.c_str(), c.measured,
                    c.expected, c.tolerance);
    else
      std::snprintf(buf, sizeof buf, "%-4s %-14s %-58s %13.6e %s %13.6e\n", c.pass ? "ok" : "FAIL",
                    c.scenario.c_str(), c.name.c_str(), c.measured, c.relation.c_str(), c.expected);
    os << buf;
  }
  for (const auto& e : errors) os << "ERROR " << e << "\n";
  std::size_t failed = 0;
  for (const auto& c : checks) failed += c.pass ? 0 : 1;
  os << checks.size() << " checks, " << failed << " failed, " << errors.size() << " errors\n";
  return os.str();
}

std::string CheckReport::csv() const {
  std::ostringstream os;
  os << "scenario,name,measured,relation,expected,tolerance,pass\n";
  for (const auto& c : checks)
    os << '"' << c.scenario << "\",\"" << c.name << "\"," << io::fmt(c.measured) << ','
       << c.relation << ',' << io::fmt(c.expected) << ',' << io::fmt(c.tolerance) << ','
       << (c.pass ? 1 : 0) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

ConvergenceResult convergence_study(const std::function<double(int)>& error_at,
                                    const std::vector<int>& ns, double T, double exact_below) {
  ConvergenceResult r;
  r.ns = ns;
  for (int n : ns) {
    r.dts.push_back(T / n);
    r.errors.push_back(error_at(n));
  }
  for (std::size_t i = 1; i < r.errors.size(); ++i)
    if (r.errors[i] > r.errors[i - 1]) r.monotone = false;
  r.exact = true;
  for (double e : r.errors) r.exact = r.exact && e < exact_below;
  if (r.exact || ns.size() < 2) {
    r.slope = kNaN;
    return r;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double x = std::log(r.dts[i]), y = std::log(std::max(r.errors[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  r.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return r;
}

std::vector<std::string> convergence_names() {
  return {"weyl-euler", "weyl-euler-half-dt", "ito-table", "oracle-constant"};
}

ConvergenceResult named_convergence(const std::string& which, const std::vector<int>& ns,
                                    const json& opts) {
  auto opt = [&](const char* key, double dflt) {
    return opts.contains(key) && opts[key].is_number() ? opts[key].get<double>() : dflt;
  };
  const double T = opt("T", 1.0);
  const int d = static_cast<int>(opt("d", 1));
  if (which == "weyl-euler")
    return convergence_study([&](int n) { return weyl_weak_error(UScheme::euler, n, T); }, ns, T);
  if (which == "weyl-euler-half-dt")
    return convergence_study([&](int n) { return weyl_weak_error(UScheme::euler_half_dt, n, T); },
                             ns, T);
  if (which == "ito-table") {
    // One slice of width T/n carries the whole table, so a one-slice model suffices.
    const int N = static_cast<int>(opt("N", 4));
    return convergence_study(
        [&](int n) {
          const ModelPtr model = build_model(MultiplicityConfig::uniform(d), InitialConfig::trivial(),
                                             {T / n, 1}, N);
          const ItoReport rep = verify_ito_table(0, model);
          return std::max(rep.max_zero_residual, rep.max_nonzero_residual);
        },
        ns, T);
  }
  if (which == "oracle-constant") {
    const int N = static_cast<int>(opt("N", 3));
    return convergence_study(
        [&](int n) {
          const ModelPtr model = build_model(MultiplicityConfig::uniform(d), InitialConfig::trivial(),
                                             {T, n}, N);
          IntegrandQuadruple q = IntegrandQuadruple::zero(model);
          for (int k = 0; k < n; ++k) {
            for (int i = 0; i < d; ++i) {
              q.E2[k][i] = OperatorMatrix::identity(model) * cplx(0.5);
              q.E3[k][i] = OperatorMatrix::identity(model) * cplx(-0.25);
              for (int j = 0; j < d; ++j) q.E1[k][i][j] = OperatorMatrix::identity(model) * cplx(0.3);
            }
            q.E4[k] = OperatorMatrix::identity(model) * cplx(0.7);
          }
          const ProcessSample P = qs_integrate(q);
          double worst = 0.0;
          const auto bat = battery(*model);
          for (const auto& [u, f] : bat)
            for (const auto& [v, g] : bat)
              worst = std::max(worst, std::abs(matrix_element(P.ops[n], u, f, v, g) -
                                               oracle_matrix_element(q, u, f, v, g, n)));
          return worst;
        },
        ns, T);
  }
  throw ConfigError("convergence study '" + which + "' is unknown");
}

std::string convergence_table(const ConvergenceResult& r) {
  std::ostringstream os;
  char buf[160];
  os << "n,dt,error\n";
  for (std::size_t i = 0; i < r.ns.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.ns[i], r.dts[i], r.errors[i]);
    os << buf;
  }
  if (r.exact) os << "# slope: exact\n";
  else {
    std::snprintf(buf, sizeof buf, "# slope: %.6f\n", r.slope);
    os << buf;
  }
  if (!r.monotone) os << "# warning: errors are not monotone in n\n";
  return os.str();
}

}  // namespace qsc::scenario
