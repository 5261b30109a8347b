#include "qsc/qsi.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace qsc {

namespace {

void for_each_component(const IntegrandQuadruple& q, int k,
                        const std::function<void(const OperatorMatrix&)>& fn) {
  const int d = q.channels();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) fn(q.E1[k][i][j]);
  for (int i = 0; i < d; ++i) fn(q.E2[k][i]);
  for (int i = 0; i < d; ++i) fn(q.E3[k][i]);
  fn(q.E4[k]);
}

void require_adapted(const OperatorMatrix& op, int k) {
  if (op.adapted_at && *op.adapted_at <= k) return;
  if (op.mat.nonZeros() == 0) return;
  if (adaptedness_residual(op, k) > 1e-12)
    throw AdaptednessError("integrand is not adapted to its slice", k);
}

double rho_weight(const ModelSpace& m, int i, double p3) {
  return std::pow(m.multiplicity().rho[i], 2.0 * p3);
}

}  // namespace

IntegrandQuadruple IntegrandQuadruple::zero(ModelPtr model, WeightTriple p) {
  const int n = model->n(), d = model->d();
  const OperatorMatrix z = OperatorMatrix::zero(model);
  IntegrandQuadruple q;
  q.model = model;
  q.p = p;
  q.E1.assign(n, std::vector<std::vector<OperatorMatrix>>(d, std::vector<OperatorMatrix>(d, z)));
  q.E2.assign(n, std::vector<OperatorMatrix>(d, z));
  q.E3.assign(n, std::vector<OperatorMatrix>(d, z));
  q.E4.assign(n, z);
  return q;
}

IntegrandQuadruple IntegrandQuadruple::operator+(const IntegrandQuadruple& o) const {
  IntegrandQuadruple r = *this;
  const int d = channels();
  for (int k = 0; k < slices(); ++k) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) r.E1[k][i][j] = E1[k][i][j] + o.E1[k][i][j];
      r.E2[k][i] = E2[k][i] + o.E2[k][i];
      r.E3[k][i] = E3[k][i] + o.E3[k][i];
    }
    r.E4[k] = E4[k] + o.E4[k];
  }
  return r;
}

IntegrandQuadruple IntegrandQuadruple::operator*(cplx c) const {
  IntegrandQuadruple r = *this;
  const int d = channels();
  for (int k = 0; k < slices(); ++k) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) r.E1[k][i][j] = E1[k][i][j] * c;
      r.E2[k][i] = E2[k][i] * c;
      r.E3[k][i] = E3[k][i] * c;
    }
    r.E4[k] = E4[k] * c;
  }
  return r;
}

AdmissibilityReport check_admissible(const IntegrandQuadruple& q, const Eigen::VectorXcd& u,
                                     const StepFunction& f, const WeightTriple& p, int K) {
  if (!(q.p == p)) throw ModelMismatch("quadruple weight signature differs from the requested p");
  const auto& model = q.model;
  const int d = model->d();
  const StateVector psi = tensor_with_initial(model, u, f);
  AdmissibilityReport rep;
  for (int k = 0; k < K; ++k) {
    double v = 0.0;
    for (int i = 0; i < d; ++i) {
      StateVector acc = StateVector::zero(model);
      for (int j = 0; j < d; ++j) acc.coeffs += f(k, j) * q.E1[k][i][j].apply(psi).coeffs;
      const double w = rho_weight(*model, i, p.p3);
      v += w * std::pow(weighted_norm(p, acc), 2);
      v += w * std::pow(weighted_norm(p, q.E2[k][i].apply(psi)), 2);
      v += w * std::pow(weighted_norm(p, q.E3[k][i].apply(psi)), 2);
    }
    v += std::pow(weighted_norm(p, q.E4[k].apply(psi)), 2);
    rep.slice_values.push_back(v);
    rep.total += v * model->dt();
  }
  rep.pass = std::isfinite(rep.total);
  return rep;
}

ProcessSample qs_integrate(const IntegrandQuadruple& q, const std::optional<OperatorMatrix>& xi0) {
  const auto& model = q.model;
  const int n = model->n(), d = model->d();
  ProcessSample out{model, {}, q.p, q.p};
  OperatorMatrix xi = xi0 ? *xi0 : OperatorMatrix::zero(model);
  xi.adapted_at = 0;
  out.ops.push_back(xi);
  for (int k = 0; k < n; ++k) {
    for_each_component(q, k, [k](const OperatorMatrix& op) { require_adapted(op, k); });
    SparseMat dxi(model->dim(), model->dim());
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j)
        if (q.E1[k][i][j].mat.nonZeros())
          dxi += q.E1[k][i][j].mat * increment({BasicKind::conservation, i, j}, k, model).mat;
      if (q.E2[k][i].mat.nonZeros())
        dxi += q.E2[k][i].mat * increment({BasicKind::annihilation, i}, k, model).mat;
      if (q.E3[k][i].mat.nonZeros())
        dxi += q.E3[k][i].mat * increment({BasicKind::creation, i}, k, model).mat;
    }
    if (q.E4[k].mat.nonZeros()) dxi += q.E4[k].mat * model->dt();
    xi.mat += dxi;
    xi.mat.prune(cplx(0.0));
    xi.adapted_at = k + 1;
    out.ops.push_back(xi);
  }
  return out;
}

cplx matrix_element(const OperatorMatrix& xi, const Eigen::VectorXcd& u, const StepFunction& f,
                    const Eigen::VectorXcd& v, const StepFunction& g) {
  const StateVector psi = tensor_with_initial(xi.model, u, f);
  const StateVector chi = tensor_with_initial(xi.model, v, g);
  return pair_bilinear(xi.apply(psi), chi);
}

cplx oracle_matrix_element(const IntegrandQuadruple& q, const Eigen::VectorXcd& u,
                           const StepFunction& f, const Eigen::VectorXcd& v,
                           const StepFunction& g, int K) {
  const auto& model = q.model;
  const int d = model->d();
  const StateVector psi = tensor_with_initial(model, u, f);
  const StateVector chi = tensor_with_initial(model, v, g);
  const StateVector psi1 = truncate_grade(psi, model->N() - 1);
  const StateVector chi1 = truncate_grade(chi, model->N() - 1);
  cplx total = 0.0;
  for (int k = 0; k < K; ++k) {
    cplx s = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j)
        if (q.E1[k][i][j].mat.nonZeros())
          s += g(k, i) * f(k, j) * pair_bilinear(q.E1[k][i][j].apply(psi1), chi1);
      if (q.E2[k][i].mat.nonZeros()) s += f(k, i) * pair_bilinear(q.E2[k][i].apply(psi1), chi1);
      if (q.E3[k][i].mat.nonZeros()) s += g(k, i) * pair_bilinear(q.E3[k][i].apply(psi1), chi1);
    }
    if (q.E4[k].mat.nonZeros()) s += pair_bilinear(q.E4[k].apply(psi), chi);
    total += s * model->dt();
  }
  return total;
}

double G_of(const IntegrandQuadruple& q, const Eigen::VectorXcd& u, const StepFunction& f,
            const WeightTriple& p, int k) {
  const auto& model = q.model;
  const int d = model->d();
  const StateVector psi = tensor_with_initial(model, u, f);
  const double e2p2 = std::exp(2.0 * p.p2);
  double g = 0.0;
  for (int i = 0; i < d; ++i) {
    StateVector acc = StateVector::zero(model);
    for (int j = 0; j < d; ++j) acc.coeffs += f(k, j) * q.E1[k][i][j].apply(psi).coeffs;
    const double w = rho_weight(*model, i, p.p3);
    g += 3.0 * e2p2 * w * std::pow(weighted_norm(p, acc), 2);
    g += e2p2 * w * std::pow(weighted_norm(p, q.E2[k][i].apply(psi)), 2);
    g += 3.0 * e2p2 * w * std::pow(weighted_norm(p, q.E3[k][i].apply(psi)), 2);
  }
  g += std::pow(weighted_norm(p, q.E4[k].apply(psi)), 2);
  return g;
}

double gronwall_bound(const IntegrandQuadruple& q, const Eigen::VectorXcd& u,
                      const StepFunction& f, const WeightTriple& p, int K) {
  const auto& model = q.model;
  const double dt = model->dt();
  double int_g = 0.0, int_f = 0.0;
  for (int k = 0; k < K; ++k) {
    int_g += G_of(q, u, f, p, k) * dt;
    for (int i = 0; i < model->d(); ++i) int_f += rho_weight(*model, i, p.p3) * std::norm(f(k, i)) * dt;
  }
  const double t = model->grid().at(K);
  return std::exp(t + 3.0 * std::exp(2.0 * p.p2) * int_f) * int_g;
}

AdaptednessReport adaptedness_check(const ProcessSample& P, double tol) {
  const auto& model = P.model;
  AdaptednessReport rep;
  for (int k = 0; k < P.size(); ++k) {
    const double fr = adaptedness_residual(P.ops[k], k);
    // Truncation breaks commutation only at the top two particle grades.
    double cr = 0.0;
    std::vector<int> cols;
    for (int s = 0; s < model->dim(); ++s)
      if (model->total_of(s) <= model->N() - 2) cols.push_back(s);
    for (int s = k; s < model->n(); ++s)
      for (int i = 0; i < model->d(); ++i)
        for (BasicKind kind : {BasicKind::annihilation, BasicKind::creation}) {
          const OperatorMatrix inc = increment({kind, i}, s, model);
          SparseMat c = P.ops[k].mat * inc.mat - inc.mat * P.ops[k].mat;
          cr = std::max(cr, linalg::max_abs(linalg::select_columns(c, cols)));
        }
    rep.factor_residual.push_back(fr);
    rep.commute_residual.push_back(cr);
    rep.max_residual = std::max(rep.max_residual, fr);
  }
  rep.adapted = rep.max_residual <= tol;
  return rep;
}

IntegrandQuadruple random_adapted_quadruple(const ModelPtr& model, std::mt19937_64& rng,
                                            const RandomQuadrupleOptions& opts) {
  const int n = model->n(), d = model->d(), m = model->m();
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  auto rc = [&] { return cplx(gauss(rng), gauss(rng)); };
  // ||c0 I + X (x) I + c Lambda_ab|| <= |c0| + ||X|| + |c| N, rescaled to max_norm.
  auto component = [&](int k) {
    const cplx c0 = rc();
    Eigen::MatrixXcd X(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) X(a, b) = rc();
    const int ia = static_cast<int>(rng() % d), ib = static_cast<int>(rng() % d);
    const cplx c = k > 0 ? rc() : cplx(0.0);
    const double bound = std::abs(c0) + linalg::spectral_norm(X) + std::abs(c) * model->N();
    const double scale = opts.max_norm * unif(rng) / bound;
    OperatorMatrix op = OperatorMatrix::identity(model) * (c0 * scale);
    op = op + initial_operator(X * scale, model);
    if (k > 0) op = op + basic_process({BasicKind::conservation, ia, ib}, k, model) * (c * scale);
    op.adapted_at = k;
    return op;
  };
  IntegrandQuadruple q = IntegrandQuadruple::zero(model);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < d; ++i) {
      if (opts.conservation)
        for (int j = 0; j < d; ++j) q.E1[k][i][j] = component(k);
      if (opts.annihilation) q.E2[k][i] = component(k);
      if (opts.creation) q.E3[k][i] = component(k);
    }
    if (opts.time) q.E4[k] = component(k);
  }
  return q;
}

}  // namespace qsc
