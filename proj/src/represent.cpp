#include "qsc/represent.hpp"

#include <algorithm>
#include <cmath>

namespace qsc {

namespace {

std::vector<double> past_weights(const ModelSpace& model, int k, const WeightTriple& w) {
  const auto& f = model.factorization(k);
  std::vector<double> out(f.past_dim());
  for (int pid = 0; pid < f.past_dim(); ++pid) out[pid] = model.weight(f.past_vacuum_state(pid), w);
  return out;
}

double channel_factor(const ModelSpace& model, int i, double e2, double r3) {
  return std::exp(e2) * std::pow(model.multiplicity().rho[i], r3);
}

OperatorMatrix slice_noise(int i, int k, const ModelPtr& model) {
  return increment({BasicKind::creation, i}, k, model) - increment({BasicKind::annihilation, i}, k, model);
}

}  // namespace

double ExtractionResult::max_defect() const {
  return defect.empty() ? 0.0 : *std::max_element(defect.begin(), defect.end());
}

double ExtractionResult::max_E4() const {
  double m = 0.0;
  for (const auto& e : quad.E4) m = std::max(m, linalg::max_abs(e.mat));
  return m;
}

ExtractionResult extract_blocks(const ProcessSample& P, const WeightTriple& p, const WeightTriple& q) {
  const ModelPtr& model = P.model;
  const int n = model->n(), d = model->d();
  if (P.size() != n + 1) throw GridError("process sample does not cover the model grid");
  for (int k = 0; k < P.size(); ++k)
    if (adaptedness_residual(P.ops[k], k) > 1e-10)
      throw AdaptednessError("process sample is not adapted", k);
  const double dt = model->dt(), sdt = std::sqrt(dt);
  ExtractionResult ex{IntegrandQuadruple::zero(model, p), {}, p, q};
  for (int k = 0; k < n; ++k) {
    const OperatorMatrix dxi = P.ops[k + 1] - P.ops[k];
    std::vector<int> one(d);
    for (int i = 0; i < d; ++i) one[i] = future_one(*model, k, i);
    const Eigen::MatrixXcd e4 = past_block(dxi, k, 0, 0) / dt;
    ex.quad.E4[k] = lift(e4, k, model);
    SparseMat resynth = ex.quad.E4[k].mat * dt;
    for (int i = 0; i < d; ++i) {
      ex.quad.E3[k][i] = lift(past_block(dxi, k, 0, one[i]) / sdt, k, model);
      ex.quad.E2[k][i] = lift(past_block(dxi, k, one[i], 0) / sdt, k, model);
      resynth += ex.quad.E3[k][i].mat * increment({BasicKind::creation, i}, k, model).mat;
      resynth += ex.quad.E2[k][i].mat * increment({BasicKind::annihilation, i}, k, model).mat;
      for (int j = 0; j < d; ++j) {
        Eigen::MatrixXcd e = past_block(dxi, k, one[j], one[i]);
        if (i == j) e -= dt * e4;
        ex.quad.E1[k][i][j] = lift(e, k, model);
        resynth += ex.quad.E1[k][i][j].mat * increment({BasicKind::conservation, i, j}, k, model).mat;
      }
    }
    ex.defect.push_back(linalg::max_abs(SparseMat(dxi.mat - resynth)));
  }
  return ex;
}

double observable_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, int k,
                       const ModelSpace& model) {
  const auto& f = model.factorization(k);
  double m = 0.0;
  for (int c = 0; c < f.past_dim(); ++c) {
    if (f.past_total(c) > model.N() - 1) continue;
    for (int r = 0; r < f.past_dim(); ++r)
      if (f.past_total(r) <= model.N() - 1) m = std::max(m, std::abs(a(r, c) - b(r, c)));
  }
  return m;
}

double observable_diff(const OperatorMatrix& a, const OperatorMatrix& b, int k) {
  return observable_diff(past_block(a, k, 0, 0), past_block(b, k, 0, 0), k, *a.model);
}

SZDecomposition build_S_Z(const ProcessSample& P, const ExtractionResult& ex) {
  const ModelPtr& model = P.model;
  const int n = model->n(), d = model->d();
  SZDecomposition out{{model, {}, P.p, P.q}, {model, {}, P.p, P.q}, 0.0, 0.0};
  OperatorMatrix S = OperatorMatrix::zero(model), Sadj = OperatorMatrix::zero(model);
  out.S.ops.push_back(S);
  std::vector<int> low;
  for (int s = 0; s < model->dim(); ++s)
    if (model->total_of(s) <= model->N() - 2) low.push_back(s);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < d; ++i) {
      const OperatorMatrix up = increment({BasicKind::creation, i}, k, model);
      const OperatorMatrix down = increment({BasicKind::annihilation, i}, k, model);
      S = S + ex.quad.E3[k][i] * up + ex.quad.E2[k][i] * down;
      Sadj = Sadj + ex.quad.E3[k][i].adjoint() * down + ex.quad.E2[k][i].adjoint() * up;
    }
    S.adapted_at = k + 1;
    out.S.ops.push_back(S);
    const SparseMat diff = S.adjoint().mat - Sadj.mat;
    out.adjoint_residual =
        std::max(out.adjoint_residual, linalg::max_abs(linalg::select_columns(diff, low)));
  }
  for (int k = 0; k <= n; ++k) {
    OperatorMatrix z = P.ops[k] - out.S.ops[k];
    z.adapted_at = k;
    out.Z.ops.push_back(z);
  }
  out.z_defect = martingale_defect(out.Z);
  return out;
}

ProcessSample weyl_martingale_U(int i, UScheme scheme, const ModelPtr& model) {
  const int n = model->n(), d = model->d();
  ProcessSample out{model, {}, {}, {}};
  if (scheme == UScheme::closed_form) {
    for (int k = 0; k <= n; ++k) {
      OperatorMatrix w = weyl(StepFunction::channel_indicator(n, d, i, 0, k), model);
      w = w * cplx(std::exp(0.5 * model->grid().at(k)));
      w.adapted_at = k;
      out.ops.push_back(w);
    }
    return out;
  }
  OperatorMatrix U = OperatorMatrix::identity(model);
  out.ops.push_back(U);
  for (int k = 0; k < n; ++k) {
    OperatorMatrix V = OperatorMatrix::identity(model) + slice_noise(i, k, model);
    if (scheme == UScheme::euler_half_dt) V = V - OperatorMatrix::identity(model) * cplx(0.5 * model->dt());
    U = V * U;
    U.adapted_at = k + 1;
    out.ops.push_back(U);
  }
  return out;
}

double weyl_weak_error(UScheme scheme, int n, double T, int slice_N) {
  const double dt = T / n;
  const ModelPtr slice = build_model(MultiplicityConfig::uniform(1), InitialConfig::trivial(), {dt, 1}, slice_N);
  const OperatorMatrix one = OperatorMatrix::identity(slice);
  const OperatorMatrix noise = slice_noise(0, 0, slice);
  const OperatorMatrix closed =
      weyl(StepFunction::constant(1, 1, 1.0), slice) * cplx(std::exp(0.5 * dt));
  OperatorMatrix step = one + noise;
  if (scheme == UScheme::euler_half_dt) step = step - one * cplx(0.5 * dt);
  if (scheme == UScheme::closed_form) step = closed;

  using Fn = double (*)(double, double);
  const std::vector<Fn> battery = {
      [](double, double) { return 0.0; },
      [](double, double) { return 1.0; },
      [](double, double) { return -1.0; },
      [](double, double) { return 0.5; },
      [](double t, double T) { return t < 0.5 * T ? 1.0 : -0.5; },
  };
  auto element = [&](const OperatorMatrix& op, double fv, double gv) {
    const StateVector pf = exponential_vector(StepFunction::constant(1, 1, fv), slice);
    const StateVector pg = exponential_vector(StepFunction::constant(1, 1, gv), slice);
    return pair_bilinear(op.apply(pf), pg);
  };
  double err = 0.0;
  for (Fn f : battery)
    for (Fn g : battery) {
      cplx a = 1.0, b = 1.0;
      for (int s = 0; s < n; ++s) {
        const double t = T * s / n;
        a *= element(step, f(t, T), g(t, T));
        b *= element(closed, f(t, T), g(t, T));
      }
      err = std::max(err, std::abs(a - b) / std::abs(b));
    }
  return err;
}

ProcessSample build_Y(int i, const ProcessSample& P, const ExtractionResult& ex,
                      const WeightTriple& p, const WeightTriple& q) {
  const ModelPtr& model = P.model;
  const ProcessSample U = weyl_martingale_U(i, UScheme::euler, model);
  const SparseMat Aq = linalg::diagonal(model->weight_vector(q));
  const SparseMat Amp = linalg::diagonal(model->weight_vector(-p));
  const double c = channel_factor(*model, i, -p.p2, -p.p3);
  ProcessSample Y{model, {}, {}, {}};
  SparseMat integral(model->dim(), model->dim());
  for (int k = 0; k <= model->n(); ++k) {
    if (k > 0) integral += SparseMat(ex.quad.E2[k - 1][i].mat * Amp * U.ops[k - 1].mat) * model->dt();
    SparseMat y = Aq * SparseMat(P.ops[k].mat * Amp * U.ops[k].mat - c * integral);
    Y.ops.push_back({model, y, k});
  }
  return Y;
}

PastFamily extract_Mji(const ProcessSample& Y) {
  const ModelPtr& model = Y.model;
  const double sdt = std::sqrt(model->dt());
  PastFamily M;
  for (int k = 0; k + 1 < Y.size(); ++k) {
    const OperatorMatrix dy = Y.ops[k + 1] - Y.ops[k];
    std::vector<Eigen::MatrixXcd> row;
    for (int j = 0; j < model->d(); ++j)
      row.push_back(past_block(dy, k, 0, future_one(*model, k, j)) / sdt);
    M.push_back(std::move(row));
  }
  return M;
}

PastFamily normalised_Mji(int i, const ProcessSample& P, const ExtractionResult& ex,
                          const WeightTriple& p, const WeightTriple& q) {
  const ModelPtr& model = P.model;
  const SparseMat Aq = linalg::diagonal(model->weight_vector(q));
  const SparseMat Amp = linalg::diagonal(model->weight_vector(-p));
  const double c = channel_factor(*model, i, -p.p2, -p.p3);
  const double dt = model->dt(), sdt = std::sqrt(dt);
  PastFamily M;
  for (int k = 0; k < model->n(); ++k) {
    const SparseMat V = linalg::identity(model->dim()) + slice_noise(i, k, model).mat;
    const SparseMat R = P.ops[k + 1].mat * Amp * V - P.ops[k].mat * Amp -
                        SparseMat(ex.quad.E2[k][i].mat * Amp) * (c * dt);
    const OperatorMatrix r{model, Aq * R, k + 1};
    std::vector<Eigen::MatrixXcd> row;
    for (int j = 0; j < model->d(); ++j)
      row.push_back(past_block(r, k, 0, future_one(*model, k, j)) / sdt);
    M.push_back(std::move(row));
  }
  return M;
}

PastFamily2 compute_Lij(const std::vector<PastFamily>& Mhat, const ExtractionResult& ex,
                        const SZDecomposition& sz, const WeightTriple& p, const WeightTriple& q) {
  const ModelPtr& model = ex.quad.model;
  const int n = model->n(), d = model->d();
  PastFamily2 L(n, PastFamily(d, std::vector<Eigen::MatrixXcd>(d)));
  for (int k = 0; k < n; ++k) {
    const auto wmq = past_weights(*model, k, -q), wp = past_weights(*model, k, p);
    const Eigen::MatrixXcd xi = past_block(sz.S.ops[k] + sz.Z.ops[k], k, 0, 0);
    for (int i = 0; i < d; ++i) {
      const Eigen::MatrixXcd Gi = past_block(ex.quad.E3[k][i], k, 0, 0);
      for (int j = 0; j < d; ++j) {
        Eigen::MatrixXcd l = linalg::scale_rows_cols(Mhat[j][k][i], wmq, wp);
        l -= channel_factor(*model, i, q.p2, q.p3) * Gi;
        if (i == j) l -= channel_factor(*model, i, q.p2 - p.p2, q.p3 - p.p3) * xi;
        L[k][i][j] = std::move(l);
      }
    }
  }
  return L;
}

PastFamily2 assemble_Eij(const PastFamily2& L, const ModelSpace& model, const WeightTriple& p,
                         const WeightTriple& q) {
  const auto& rho = model.multiplicity().rho;
  PastFamily2 E = L;
  for (auto& slice : E)
    for (std::size_t i = 0; i < slice.size(); ++i)
      for (std::size_t j = 0; j < slice[i].size(); ++j)
        slice[i][j] *= std::exp(p.p2 - q.p2) * std::pow(rho[i], -q.p3) * std::pow(rho[j], p.p3);
  return E;
}

PipelineResult run_pipeline(const ProcessSample& P, const ExtractionResult& ex,
                            const WeightTriple& p, const WeightTriple& q) {
  const ModelPtr& model = P.model;
  const int n = model->n(), d = model->d();
  const SZDecomposition sz = build_S_Z(P, ex);
  std::vector<PastFamily> Mhat;
  for (int i = 0; i < d; ++i) Mhat.push_back(normalised_Mji(i, P, ex, p, q));
  PipelineResult res;
  res.L = compute_Lij(Mhat, ex, sz, p, q);
  res.E = assemble_Eij(res.L, *model, p, q);
  SparseMat integral(model->dim(), model->dim());
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        res.max_diff_vs_blocks = std::max(
            res.max_diff_vs_blocks,
            observable_diff(res.E[k][i][j], past_block(ex.quad.E1[k][i][j], k, 0, 0), k, *model));
        integral += lift(res.E[k][i][j], k, model).mat *
                    increment({BasicKind::conservation, i, j}, k, model).mat;
      }
    const SparseMat r = sz.Z.ops[k + 1].mat - P.ops[0].mat - integral;
    res.z_residual = std::max(res.z_residual, linalg::max_abs(r));
  }
  return res;
}

WeakLimitSums weak_limit_sums(const ExtractionResult& ex, const WeightTriple& p,
                              const WeightTriple& q, const RadonMeasureEstimate& m) {
  WeakLimitSums out;
  out.ops = weak_limit_operators(ex.quad.E3, ex.quad.E2, p, q);
  for (std::size_t k = 0; k < out.ops.G_norm.size(); ++k) {
    const double lhs = std::max(out.ops.G_norm[k], out.ops.F_norm[k]);
    const double bound = m.density.at(k);
    const bool ok = lhs <= bound * (1.0 + 1e-10) + 1e-14;
    out.bound.push_back(bound);
    out.slice_pass.push_back(ok);
    out.pass = out.pass && ok;
    if (bound > 0.0)
      out.worst_ratio = std::max(out.worst_ratio, lhs / bound);
    else if (lhs > 0.0)
      out.worst_ratio = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace qsc
