#include "qsc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qsc {

namespace {

void require_model(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (!a.model || !b.model || !a.model->same_as(*b.model))
    throw ModelMismatch("operators belong to different models");
}

std::optional<int> combine_adapted(const std::optional<int>& a, const std::optional<int>& b) {
  if (!a || !b) return std::nullopt;
  return std::max(*a, *b);
}

// Index of `state` with occ[mode] changed by delta, or -1 outside the basis.
int shifted(const ModelSpace& model, int state, int mode, int delta,
            std::vector<Occupation>& buf) {
  auto occ = model.occ_of(state);
  buf.assign(occ.begin(), occ.end());
  const int v = buf[mode] + delta;
  if (v < 0) return -1;
  buf[mode] = static_cast<Occupation>(v);
  auto idx = model.find(model.init_of(state), buf);
  return idx ? *idx : -1;
}

SparseMat from_triplets(int dim, std::vector<Triplet>& t) {
  SparseMat m(dim, dim);
  m.setFromTriplets(t.begin(), t.end());
  m.prune(cplx(0.0));
  return m;
}

void require_shape(const StepFunction& f, const ModelSpace& model) {
  if (f.slices() != model.n() || f.channels() != model.d())
    throw ModelMismatch("step function does not match the model grid");
}

// Largest slice index + 1 carrying a nonzero value.
int support_end(const StepFunction& f) {
  for (int s = f.slices() - 1; s >= 0; --s)
    if (f.values.row(s).cwiseAbs().maxCoeff() > 0.0) return s + 1;
  return 0;
}

}  // namespace

OperatorMatrix OperatorMatrix::zero(ModelPtr model) {
  const int D = model->dim();
  return {std::move(model), SparseMat(D, D), 0};
}

OperatorMatrix OperatorMatrix::identity(ModelPtr model) {
  const int D = model->dim();
  return {std::move(model), linalg::identity(D), 0};
}

StateVector OperatorMatrix::apply(const StateVector& v) const {
  if (!v.model || !model->same_as(*v.model))
    throw ModelMismatch("operator and vector belong to different models");
  return {model, mat * v.coeffs};
}

OperatorMatrix OperatorMatrix::adjoint() const {
  return {model, SparseMat(mat.adjoint()), adapted_at};
}

OperatorMatrix OperatorMatrix::operator+(const OperatorMatrix& o) const {
  require_model(*this, o);
  return {model, SparseMat(mat + o.mat), combine_adapted(adapted_at, o.adapted_at)};
}

OperatorMatrix OperatorMatrix::operator-(const OperatorMatrix& o) const {
  require_model(*this, o);
  return {model, SparseMat(mat - o.mat), combine_adapted(adapted_at, o.adapted_at)};
}

OperatorMatrix OperatorMatrix::operator*(const OperatorMatrix& o) const {
  require_model(*this, o);
  return {model, SparseMat(mat * o.mat), combine_adapted(adapted_at, o.adapted_at)};
}

OperatorMatrix OperatorMatrix::operator*(cplx c) const {
  return {model, SparseMat(mat * c), adapted_at};
}

ProcessSample ProcessSample::operator+(const ProcessSample& o) const {
  ProcessSample out = *this;
  for (int k = 0; k < size(); ++k) out.ops[k] = ops[k] + o.ops.at(k);
  return out;
}

ProcessSample ProcessSample::operator-(const ProcessSample& o) const {
  ProcessSample out = *this;
  for (int k = 0; k < size(); ++k) out.ops[k] = ops[k] - o.ops.at(k);
  return out;
}

ProcessSample ProcessSample::operator*(cplx c) const {
  ProcessSample out = *this;
  for (auto& op : out.ops) op = op * c;
  return out;
}

OperatorMatrix annihilation(const StepFunction& g, const ModelPtr& model) {
  require_shape(g, *model);
  const double sdt = std::sqrt(model->dt());
  std::vector<Triplet> t;
  std::vector<Occupation> buf;
  for (int st = 0; st < model->dim(); ++st) {
    auto occ = model->occ_of(st);
    for (int s = 0; s < model->n(); ++s)
      for (int i = 0; i < model->d(); ++i) {
        const int mo = model->mode(s, i);
        if (occ[mo] == 0 || g(s, i) == 0.0) continue;
        const double nocc = occ[mo];
        const int to = shifted(*model, st, mo, -1, buf);
        t.emplace_back(to, st, g(s, i) * sdt * std::sqrt(nocc));
      }
  }
  return {model, from_triplets(model->dim(), t), support_end(g)};
}

OperatorMatrix creation(const StepFunction& h, const ModelPtr& model) {
  require_shape(h, *model);
  const double sdt = std::sqrt(model->dt());
  std::vector<Triplet> t;
  std::vector<Occupation> buf;
  for (int st = 0; st < model->dim(); ++st) {
    if (model->total_of(st) >= model->N()) continue;
    auto occ = model->occ_of(st);
    for (int s = 0; s < model->n(); ++s)
      for (int i = 0; i < model->d(); ++i) {
        if (h(s, i) == 0.0) continue;
        const int mo = model->mode(s, i);
        const double nocc = occ[mo];
        const int to = shifted(*model, st, mo, +1, buf);
        t.emplace_back(to, st, h(s, i) * sdt * std::sqrt(nocc + 1.0));
      }
  }
  return {model, from_triplets(model->dim(), t), support_end(h)};
}

OperatorMatrix conservation(const Eigen::MatrixXcd& T, int k0, int k1, const ModelPtr& model) {
  const int d = model->d();
  if (T.rows() != d || T.cols() != d) throw ModelMismatch("channel operator must be d x d");
  k0 = std::max(k0, 0);
  k1 = std::min(k1, model->n());
  std::vector<Triplet> t;
  std::vector<Occupation> buf;
  for (int st = 0; st < model->dim(); ++st) {
    auto occ = model->occ_of(st);
    for (int s = k0; s < k1; ++s)
      for (int j = 0; j < d; ++j) {
        const int nj = occ[model->mode(s, j)];
        if (nj == 0) continue;
        for (int i = 0; i < d; ++i) {
          if (T(i, j) == 0.0) continue;
          if (i == j) {
            t.emplace_back(st, st, T(i, i) * double(nj));
            continue;
          }
          const int ni = occ[model->mode(s, i)];
          buf.assign(occ.begin(), occ.end());
          buf[model->mode(s, j)] -= 1;
          buf[model->mode(s, i)] += 1;
          const int to = *model->find(model->init_of(st), buf);
          t.emplace_back(to, st, T(i, j) * std::sqrt(double(nj) * (ni + 1)));
        }
      }
  }
  return {model, from_triplets(model->dim(), t), k1 > k0 ? k1 : 0};
}

OperatorMatrix conservation(const Eigen::MatrixXcd& T, double ta, double tb, const ModelPtr& model) {
  return conservation(T, model->grid().index_of(ta), model->grid().index_of(tb), model);
}

OperatorMatrix second_quantization_diag(const Eigen::MatrixXcd& c, const ModelPtr& model) {
  if (c.rows() != model->n() || c.cols() != model->d())
    throw ModelMismatch("mode scaling must be n x d");
  std::vector<Triplet> t;
  int last = 0;
  for (int s = 0; s < model->n(); ++s)
    for (int i = 0; i < model->d(); ++i)
      if (c(s, i) != 1.0) last = s + 1;
  for (int st = 0; st < model->dim(); ++st) {
    auto occ = model->occ_of(st);
    cplx w = 1.0;
    for (int s = 0; s < model->n(); ++s)
      for (int i = 0; i < model->d(); ++i) {
        const int o = occ[model->mode(s, i)];
        if (o) w *= std::pow(c(s, i), o);
      }
    t.emplace_back(st, st, w);
  }
  return {model, from_triplets(model->dim(), t), last};
}

OperatorMatrix second_quantization(const Eigen::MatrixXcd& C, const ModelPtr& model) {
  const int M = model->modes();
  if (C.rows() != M || C.cols() != M) throw ConfigError("one-particle operator must be nd x nd");
  Eigen::MatrixXcd off = C;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() > 0.0)
    throw ConfigError("second quantization supports only mode-diagonal operators");
  Eigen::MatrixXcd c(model->n(), model->d());
  for (int s = 0; s < model->n(); ++s)
    for (int i = 0; i < model->d(); ++i) c(s, i) = C(model->mode(s, i), model->mode(s, i));
  return second_quantization_diag(c, model);
}

OperatorMatrix weyl(const StepFunction& h, const ModelPtr& model) {
  StepFunction hc{h.values.conjugate()};
  SparseMat gen = creation(h, model).mat - annihilation(hc, model).mat;
  Eigen::MatrixXcd w = linalg::expm(Eigen::MatrixXcd(gen));
  SparseMat sw = w.sparseView(1.0, 0.0);
  return {model, sw, support_end(h)};
}

OperatorMatrix initial_operator(const Eigen::MatrixXcd& X, const ModelPtr& model) {
  if (X.rows() != model->m() || X.cols() != model->m())
    throw ModelMismatch("initial operator must be m x m");
  std::vector<Triplet> t;
  std::vector<Occupation> buf;
  for (int st = 0; st < model->dim(); ++st) {
    auto occ = model->occ_of(st);
    for (int a = 0; a < model->m(); ++a) {
      const cplx x = X(a, model->init_of(st));
      if (x == 0.0) continue;
      const int to = *model->find(a, occ);
      t.emplace_back(to, st, x);
    }
  }
  return {model, from_triplets(model->dim(), t), 0};
}

OperatorMatrix weight_operator(const WeightTriple& p, const ModelPtr& model) {
  return {model, linalg::diagonal(model->weight_vector(p)), std::nullopt};
}

OperatorMatrix basic_process(const BasicProcessSpec& spec, int k, const ModelPtr& model) {
  if (k < 0 || k > model->n()) throw GridError("slice index out of range");
  const int n = model->n(), d = model->d();
  OperatorMatrix out = OperatorMatrix::zero(model);
  switch (spec.kind) {
    case BasicKind::annihilation:
      out = annihilation(StepFunction::channel_indicator(n, d, spec.i, 0, k), model);
      break;
    case BasicKind::creation:
      out = creation(StepFunction::channel_indicator(n, d, spec.i, 0, k), model);
      break;
    case BasicKind::conservation: {
      Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(d, d);
      P(spec.i, spec.j) = 1.0;
      out = conservation(P, 0, k, model);
      break;
    }
  }
  out.adapted_at = k;
  return out;
}

OperatorMatrix basic_process(const BasicProcessSpec& spec, double t, const ModelPtr& model) {
  return basic_process(spec, model->grid().index_of(t), model);
}

OperatorMatrix increment(const BasicProcessSpec& spec, int k, const ModelPtr& model) {
  if (k < 0 || k >= model->n()) throw GridError("increment slice out of range");
  const int n = model->n(), d = model->d();
  OperatorMatrix out = OperatorMatrix::zero(model);
  switch (spec.kind) {
    case BasicKind::annihilation:
      out = annihilation(StepFunction::channel_indicator(n, d, spec.i, k, k + 1), model);
      break;
    case BasicKind::creation:
      out = creation(StepFunction::channel_indicator(n, d, spec.i, k, k + 1), model);
      break;
    case BasicKind::conservation: {
      Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(d, d);
      P(spec.i, spec.j) = 1.0;
      out = conservation(P, k, k + 1, model);
      break;
    }
  }
  out.adapted_at = k + 1;
  return out;
}

ProcessSample basic_process_sample(const BasicProcessSpec& spec, const ModelPtr& model) {
  ProcessSample ps{model, {}, {}, {}};
  for (int k = 0; k <= model->n(); ++k) ps.ops.push_back(basic_process(spec, k, model));
  return ps;
}

OperatorMatrix time_increment(int k, const ModelPtr& model) {
  if (k < 0 || k >= model->n()) throw GridError("increment slice out of range");
  return OperatorMatrix::identity(model) * cplx(model->dt());
}

int future_index(const ModelSpace& model, int k, std::span<const int> occ) {
  std::vector<Occupation> full(model.modes(), 0);
  for (int i = 0; i < model.d(); ++i) full[model.mode(k, i)] = static_cast<Occupation>(occ[i]);
  auto st = model.find(0, full);
  if (!st) throw ModelMismatch("slice occupation exceeds the truncation");
  return model.factorization(k).future_of(*st);
}

int future_one(const ModelSpace& model, int k, int channel) {
  std::vector<int> occ(model.d(), 0);
  occ[channel] = 1;
  return future_index(model, k, occ);
}

OperatorMatrix lift(const Eigen::MatrixXcd& past, int k, const ModelPtr& model) {
  const auto& f = model->factorization(k);
  if (past.rows() != f.past_dim() || past.cols() != f.past_dim())
    throw ModelMismatch("past matrix does not match the factorisation");
  std::vector<Triplet> t;
  for (int fut = 0; fut < f.future_dim(); ++fut) {
    for (int st : f.states_with_future(fut)) {
      const int pc = f.past_of(st);
      for (int pr = 0; pr < f.past_dim(); ++pr) {
        const cplx v = past(pr, pc);
        if (v == 0.0) continue;
        const int to = f.merge(pr, fut);
        if (to >= 0) t.emplace_back(to, st, v);
      }
    }
  }
  return {model, from_triplets(model->dim(), t), k};
}

Eigen::MatrixXcd past_block(const OperatorMatrix& op, int k, int in_future, int out_future) {
  const auto& f = op.model->factorization(k);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(f.past_dim(), f.past_dim());
  for (int st : f.states_with_future(in_future))
    for (SparseMat::InnerIterator it(op.mat, st); it; ++it)
      if (f.future_of(it.row()) == out_future) out(f.past_of(it.row()), f.past_of(st)) = it.value();
  return out;
}

double adaptedness_residual(const OperatorMatrix& op, int k, int max_col_total) {
  OperatorMatrix l = lift(past_block(op, k, 0, 0), k, op.model);
  const SparseMat diff = op.mat - l.mat;
  if (max_col_total < 0) return linalg::max_abs(diff);
  double m = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c) {
    if (op.model->total_of(c) > max_col_total) continue;
    for (SparseMat::InnerIterator it(diff, c); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

namespace {

enum IncKind { kDt = 0, kA = 1, kAstar = 2, kLambda = 3 };

const char* kind_label(int kind) {
  static const char* names[] = {"dt", "dA", "dA*", "dLambda"};
  return names[kind];
}

struct Increment {
  int kind;
  int i, j;
  OperatorMatrix op;
};

std::vector<Increment> increments_of(int kind, int k, const ModelPtr& model) {
  std::vector<Increment> out;
  const int d = model->d();
  switch (kind) {
    case kDt:
      out.push_back({kind, 0, 0, time_increment(k, model)});
      break;
    case kA:
      for (int i = 0; i < d; ++i)
        out.push_back({kind, i, 0, increment({BasicKind::annihilation, i}, k, model)});
      break;
    case kAstar:
      for (int i = 0; i < d; ++i)
        out.push_back({kind, i, 0, increment({BasicKind::creation, i}, k, model)});
      break;
    default:
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          out.push_back({kind, i, j, increment({BasicKind::conservation, i, j}, k, model)});
  }
  return out;
}

// Table entry for left*right, or nullopt when the table says 0.
std::optional<OperatorMatrix> table_entry(const Increment& l, const Increment& r, int k,
                                          const ModelPtr& model) {
  if (l.kind == kA && r.kind == kAstar)
    return l.i == r.i ? std::optional(time_increment(k, model)) : std::optional(OperatorMatrix::zero(model));
  if (l.kind == kA && r.kind == kLambda)
    return l.i == r.i ? std::optional(increment({BasicKind::annihilation, r.j}, k, model))
                      : std::optional(OperatorMatrix::zero(model));
  if (l.kind == kLambda && r.kind == kAstar)
    return l.j == r.i ? std::optional(increment({BasicKind::creation, l.i}, k, model))
                      : std::optional(OperatorMatrix::zero(model));
  if (l.kind == kLambda && r.kind == kLambda)
    return l.j == r.i ? std::optional(increment({BasicKind::conservation, l.i, r.j}, k, model))
                      : std::optional(OperatorMatrix::zero(model));
  return std::nullopt;
}

std::string entry_label(int lk, int rk) {
  if (lk == kA && rk == kAstar) return "delta_ik dt";
  if (lk == kA && rk == kLambda) return "delta_ik dA_l";
  if (lk == kLambda && rk == kAstar) return "delta_jk dA*_i";
  if (lk == kLambda && rk == kLambda) return "delta_jk dLambda_il";
  return "0";
}

std::vector<StepFunction> ito_battery(int n, int d) {
  std::vector<StepFunction> b;
  b.push_back(StepFunction::zero(n, d));
  b.push_back(StepFunction::constant(n, d, 1.0));
  for (int i = 0; i < d; ++i) b.push_back(StepFunction::channel_indicator(n, d, i, 0, n));
  StepFunction alt = StepFunction::zero(n, d);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < d; ++i) alt.values(s, i) = ((s + i) % 2 ? -1.0 : 1.0);
  b.push_back(alt);
  StepFunction mixed = StepFunction::zero(n, d);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < d; ++i) mixed.values(s, i) = 0.5 * (i + 1) * (s % 3 == 2 ? -1.0 : 1.0);
  b.push_back(mixed);
  return b;
}

}  // namespace

ItoReport verify_ito_table(int k, const ModelPtr& model, double tolerance) {
  if (model->N() < 2) throw ConfigError("Ito table check needs N >= 2");
  ItoReport report;
  report.slice = k;
  const double dt = model->dt();
  const auto battery = ito_battery(model->n(), model->d());
  // Kets carry at most N-2 particles so two raising steps stay inside the basis.
  std::vector<StateVector> kets, bras;
  std::vector<double> amp;
  for (const auto& f : battery) {
    kets.push_back(truncate_grade(exponential_vector(f, model), model->N() - 2));
    bras.push_back(exponential_vector(f, model));
    amp.push_back(f.values.row(k).cwiseAbs().maxCoeff());
  }
  std::vector<std::vector<Increment>> incs;
  for (int kind = 0; kind < 4; ++kind) incs.push_back(increments_of(kind, k, model));

  for (int lk = 0; lk < 4; ++lk)
    for (int rk = 0; rk < 4; ++rk) {
      ItoCell cell{kind_label(lk), kind_label(rk), entry_label(lk, rk), 0.0, 0.0, true};
      const bool zero_cell = cell.expected == "0";
      for (const auto& l : incs[lk])
        for (const auto& r : incs[rk]) {
          OperatorMatrix prod = l.op * r.op;
          auto entry = table_entry(l, r, k, model);
          OperatorMatrix diff = entry ? prod - *entry : prod;
          for (std::size_t a = 0; a < battery.size(); ++a)
            for (std::size_t b = 0; b < battery.size(); ++b) {
              const cplx den = pair_bilinear(kets[a], bras[b]);
              if (std::abs(den) < 1e-300) continue;
              const double res = std::abs(pair_bilinear(diff.apply(kets[a]), bras[b]) / den);
              const double ent =
                  entry ? std::abs(pair_bilinear(entry->apply(kets[a]), bras[b]) / den) : 0.0;
              const double scale = std::max({1.0, amp[a], amp[b]});
              const double slack = 2.0 * std::pow(scale, 4) * dt * dt;
              const double tol = (zero_cell ? tolerance : tolerance + 1e-10 * ent) + slack;
              cell.residual = std::max(cell.residual, res);
              cell.tolerance = std::max(cell.tolerance, tol);
              if (!(res <= tol)) cell.pass = false;
            }
        }
      if (zero_cell)
        report.max_zero_residual = std::max(report.max_zero_residual, cell.residual);
      else
        report.max_nonzero_residual = std::max(report.max_nonzero_residual, cell.residual);
      report.pass = report.pass && cell.pass;
      report.cells.push_back(cell);
    }
  return report;
}

std::string dump_csv(const OperatorMatrix& op) {
  std::ostringstream os;
  os << "row,col,re,im\n";
  char buf[128];
  SparseMat m = op.mat;
  m.makeCompressed();
  // Row-major order for a stable, diff-friendly listing.
  Eigen::SparseMatrix<cplx, Eigen::RowMajor, int> rm = m;
  for (int r = 0; r < rm.outerSize(); ++r)
    for (decltype(rm)::InnerIterator it(rm, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", int(it.row()), int(it.col()),
                    it.value().real(), it.value().imag());
      os << buf;
    }
  return os.str();
}

OperatorMatrix load_csv(const std::string& text, const ModelPtr& model) {
  std::istringstream is(text);
  std::string line;
  std::vector<Triplet> t;
  int lineno = 0;
  const int D = model->dim();
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("row", 0) == 0) continue;
    int r, c;
    double re, im;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &r, &c, &re, &im) != 4)
      throw ConfigError("operator dump line " + std::to_string(lineno) + " is malformed");
    if (r < 0 || c < 0 || r >= D || c >= D)
      throw ModelMismatch("operator dump line " + std::to_string(lineno) +
                          " indexes outside the model basis (D=" + std::to_string(D) + ")");
    t.emplace_back(r, c, cplx(re, im));
  }
  return {model, from_triplets(D, t), std::nullopt};
}

}  // namespace qsc
