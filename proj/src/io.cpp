#include "qsc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace qsc::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int int_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::vector<double> numbers_at(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

bool is_identity(const SparseMat& m) {
  if (m.nonZeros() != m.rows()) return false;
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMat::InnerIterator it(m, c); it; ++it)
      if (it.row() != it.col() || it.value() != cplx(1.0)) return false;
  return true;
}

// c when m == c I with c real and nonzero.
std::optional<double> scalar_multiple(const SparseMat& m) {
  if (m.nonZeros() != m.rows() || m.rows() == 0) return std::nullopt;
  std::optional<cplx> c;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMat::InnerIterator it(m, k); it; ++it) {
      if (it.row() != it.col()) return std::nullopt;
      if (!c) c = it.value();
      else if (*c != it.value()) return std::nullopt;
    }
  if (!c || c->imag() != 0.0) return std::nullopt;
  return c->real();
}

json entry_for(const OperatorMatrix& op, const fs::path& dir, const std::string& name) {
  SparseMat m = op.mat;
  m.prune(cplx(0.0));
  if (m.nonZeros() == 0) return "zero";
  if (is_identity(m)) return "identity";
  if (auto c = scalar_multiple(m)) return "scaled:" + fmt(*c);
  write_file(dir / (name + ".csv"), dump_csv(op));
  return name + ".csv";
}

}  // namespace

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

ModelDescriptor ModelDescriptor::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const char* key : {"d", "n", "N"})
    if (!j.contains(key)) fail(path + "." + key, "missing");
  ModelDescriptor m;
  m.mult.d = int_at(j["d"], path + ".d");
  if (m.mult.d < 1) fail(path + ".d", "must be >= 1");
  m.mult.rho = j.contains("rho") ? numbers_at(j["rho"], path + ".rho")
                                 : std::vector<double>(m.mult.d, 1.0);
  if (static_cast<int>(m.mult.rho.size()) != m.mult.d)
    fail(path + ".rho", "needs d = " + std::to_string(m.mult.d) + " entries");
  for (std::size_t i = 0; i < m.mult.rho.size(); ++i)
    if (!(m.mult.rho[i] >= 1.0)) fail(path + ".rho[" + std::to_string(i) + "]", "must be >= 1");
  m.init.m = j.contains("m") ? int_at(j["m"], path + ".m") : 1;
  if (m.init.m < 1) fail(path + ".m", "must be >= 1");
  m.init.alpha = j.contains("alpha") ? numbers_at(j["alpha"], path + ".alpha")
                                     : std::vector<double>(m.init.m, 1.0);
  if (static_cast<int>(m.init.alpha.size()) != m.init.m)
    fail(path + ".alpha", "needs m = " + std::to_string(m.init.m) + " entries");
  for (std::size_t i = 0; i < m.init.alpha.size(); ++i)
    if (!(m.init.alpha[i] >= 1.0))
      fail(path + ".alpha[" + std::to_string(i) + "]", "must be >= 1");
  m.grid.T = j.contains("T") ? number_at(j["T"], path + ".T") : 1.0;
  if (!(m.grid.T > 0.0)) fail(path + ".T", "must be positive");
  m.grid.n = int_at(j["n"], path + ".n");
  if (m.grid.n < 1) fail(path + ".n", "must be >= 1");
  m.N = int_at(j["N"], path + ".N");
  if (m.N < 1) fail(path + ".N", "must be >= 1");
  return m;
}

json ModelDescriptor::to_json() const {
  return {{"d", mult.d}, {"rho", mult.rho}, {"m", init.m}, {"alpha", init.alpha},
          {"T", grid.T},  {"n", grid.n},     {"N", N}};
}

ModelPtr ModelDescriptor::build() const { return build_model(mult, init, grid, N); }

WeightTriple weight_from_json(const json& j, const std::string& path) {
  if (j.is_array()) {
    if (j.size() != 3) fail(path, "expected three exponents [p1, p2, p3]");
    return {number_at(j[0], path + "[0]"), number_at(j[1], path + "[1]"),
            number_at(j[2], path + "[2]")};
  }
  if (j.is_object()) {
    WeightTriple w;
    if (j.contains("p1")) w.p1 = number_at(j["p1"], path + ".p1");
    if (j.contains("p2")) w.p2 = number_at(j["p2"], path + ".p2");
    if (j.contains("p3")) w.p3 = number_at(j["p3"], path + ".p3");
    return w;
  }
  fail(path, "expected [p1, p2, p3]");
}

json weight_to_json(const WeightTriple& w) { return json::array({w.p1, w.p2, w.p3}); }

WeightTriple parse_weight(const std::string& text) {
  WeightTriple w;
  char extra;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &w.p1, &w.p2, &w.p3, &extra) != 3)
    throw ConfigError("weight '" + text + "': expected p1,p2,p3");
  return w;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string() + ": cannot write");
  out << text;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

OperatorMatrix load_entry(const json& entry, const ModelPtr& model, const fs::path& base,
                          const std::string& path) {
  std::string s;
  if (entry.is_string()) {
    s = entry.get<std::string>();
  } else if (entry.is_object() && entry.contains("file") && entry["file"].is_string()) {
    s = entry["file"].get<std::string>();
    return load_csv(read_file(base / s), model);
  } else {
    fail(path, "expected a preset name or an operator dump path");
  }
  if (s == "zero") return OperatorMatrix::zero(model);
  if (s == "identity") return OperatorMatrix::identity(model);
  if (s.rfind("scaled:", 0) == 0) {
    const std::string num = s.substr(7);
    double c = 0.0;
    auto r = std::from_chars(num.data(), num.data() + num.size(), c);
    if (r.ec != std::errc() || r.ptr != num.data() + num.size())
      fail(path, "bad scale factor in '" + s + "'");
    return OperatorMatrix::identity(model) * cplx(c);
  }
  try {
    return load_csv(read_file(base / s), model);
  } catch (const ModelMismatch& e) {
    throw ModelMismatch(path + ": " + e.what());
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
}

namespace {

const json* family(const json& slice, const json& dflt, const char* key) {
  if (slice.is_object() && slice.contains(key)) return &slice[key];
  if (dflt.is_object() && dflt.contains(key)) return &dflt[key];
  return nullptr;
}

OperatorMatrix channel_entry(const json* fam, std::vector<int> idx, const ModelPtr& model,
                             const fs::path& base, std::string path) {
  if (!fam) return OperatorMatrix::zero(model);
  const json* cur = fam;
  for (int i : idx) {
    if (!cur->is_array()) break;
    if (i >= static_cast<int>(cur->size()))
      fail(path, "needs " + std::to_string(model->d()) + " channel entries");
    path += "[" + std::to_string(i) + "]";
    cur = &(*cur)[i];
  }
  return load_entry(*cur, model, base, path);
}

}  // namespace

IntegrandQuadruple load_quadruple(const json& desc, const ModelPtr& model, const fs::path& base) {
  if (!desc.is_object()) fail("quadruple", "expected an object");
  WeightTriple p;
  if (desc.contains("p")) p = weight_from_json(desc["p"], "quadruple.p");
  IntegrandQuadruple q = IntegrandQuadruple::zero(model, p);
  const json empty = json::object();
  const json& dflt = desc.contains("default") ? desc["default"] : empty;
  const json* slices = desc.contains("slices") ? &desc["slices"] : nullptr;
  if (slices && !slices->is_array()) fail("quadruple.slices", "expected an array");
  if (slices && static_cast<int>(slices->size()) > model->n())
    fail("quadruple.slices", "has more entries than the model has slices");
  const int d = model->d();
  for (int k = 0; k < model->n(); ++k) {
    const bool own = slices && k < static_cast<int>(slices->size());
    const json& sl = own ? (*slices)[k] : empty;
    const std::string at = own ? "quadruple.slices[" + std::to_string(k) + "]" : "quadruple.default";
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j)
        q.E1[k][i][j] = channel_entry(family(sl, dflt, "E1"), {i, j}, model, base, at + ".E1");
      q.E2[k][i] = channel_entry(family(sl, dflt, "E2"), {i}, model, base, at + ".E2");
      q.E3[k][i] = channel_entry(family(sl, dflt, "E3"), {i}, model, base, at + ".E3");
    }
    q.E4[k] = channel_entry(family(sl, dflt, "E4"), {}, model, base, at + ".E4");
  }
  return q;
}

IntegrandQuadruple load_quadruple_file(const fs::path& file, const ModelPtr& model) {
  return load_quadruple(read_json(file), model, file.parent_path());
}

json save_quadruple(const IntegrandQuadruple& q, const fs::path& dir, const std::string& stem) {
  json slices = json::array();
  const int d = q.channels();
  for (int k = 0; k < q.slices(); ++k) {
    const std::string ks = stem + "_k" + std::to_string(k);
    json e1 = json::array(), e2 = json::array(), e3 = json::array();
    for (int i = 0; i < d; ++i) {
      json row = json::array();
      for (int j = 0; j < d; ++j)
        row.push_back(entry_for(q.E1[k][i][j], dir,
                                ks + "_E1_" + std::to_string(i) + "_" + std::to_string(j)));
      e1.push_back(row);
      e2.push_back(entry_for(q.E2[k][i], dir, ks + "_E2_" + std::to_string(i)));
      e3.push_back(entry_for(q.E3[k][i], dir, ks + "_E3_" + std::to_string(i)));
    }
    slices.push_back({{"E1", e1}, {"E2", e2}, {"E3", e3}, {"E4", entry_for(q.E4[k], dir, ks + "_E4")}});
  }
  return {{"p", weight_to_json(q.p)}, {"slices", slices}};
}

ProcessSample load_process(const json& desc, const ModelPtr& model, const fs::path& base) {
  if (!desc.is_object() || !desc.contains("ops") || !desc["ops"].is_array())
    fail("process.ops", "expected an array of operator dumps");
  ProcessSample P;
  P.model = model;
  if (desc.contains("p")) P.p = weight_from_json(desc["p"], "process.p");
  if (desc.contains("q")) P.q = weight_from_json(desc["q"], "process.q");
  const json& ops = desc["ops"];
  if (static_cast<int>(ops.size()) != model->n() + 1)
    fail("process.ops", "needs n+1 = " + std::to_string(model->n() + 1) + " entries, got " +
                            std::to_string(ops.size()));
  for (std::size_t k = 0; k < ops.size(); ++k)
    P.ops.push_back(load_entry(ops[k], model, base, "process.ops[" + std::to_string(k) + "]"));
  return P;
}

ProcessSample load_process_file(const fs::path& file, const ModelPtr& model) {
  return load_process(read_json(file), model, file.parent_path());
}

json save_process(const ProcessSample& P, const fs::path& dir, const std::string& stem) {
  json ops = json::array();
  for (int k = 0; k < P.size(); ++k)
    ops.push_back(entry_for(P.ops[k], dir, stem + "_" + std::to_string(k)));
  return {{"p", weight_to_json(P.p)}, {"q", weight_to_json(P.q)}, {"ops", ops}};
}

std::string regularity_csv(const RegularityReport& rep) {
  std::ostringstream os;
  os << "v,u,lhs_forward,lhs_adjoint,m,pass\n";
  for (const auto& pr : rep.pairs)
    os << pr.v << ',' << pr.u << ',' << fmt(pr.lhs_forward) << ',' << fmt(pr.lhs_adjoint) << ','
       << fmt(pr.m) << ',' << (pr.pass ? 1 : 0) << '\n';
  return os.str();
}

std::string defect_csv(const ExtractionResult& ex) {
  std::ostringstream os;
  os << "slice,defect,E4\n";
  for (std::size_t k = 0; k < ex.defect.size(); ++k)
    os << k << ',' << fmt(ex.defect[k]) << ',' << fmt(linalg::max_abs(ex.quad.E4[k].mat)) << '\n';
  return os.str();
}

RadonMeasureEstimate measure_from_json(const json& j, int n, double dt) {
  if (j.is_object() && j.contains("constant"))
    return RadonMeasureEstimate::lebesgue(n, dt, number_at(j["constant"], "measure.constant"));
  if (!j.is_object() || !j.contains("density")) fail("measure", "expected density or constant");
  RadonMeasureEstimate m;
  m.dt = dt;
  m.density = numbers_at(j["density"], "measure.density");
  if (static_cast<int>(m.density.size()) != n)
    fail("measure.density", "needs one value per slice (" + std::to_string(n) + ")");
  for (std::size_t k = 0; k < m.density.size(); ++k)
    if (m.density[k] < 0) fail("measure.density[" + std::to_string(k) + "]", "must be >= 0");
  return m;
}

json measure_to_json(const RadonMeasureEstimate& m) {
  return {{"dt", m.dt}, {"density", m.density}, {"from_integrands", m.from_integrands}};
}

}  // namespace qsc::io
