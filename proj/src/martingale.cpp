#include "qsc/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace qsc {

RadonMeasureEstimate RadonMeasureEstimate::lebesgue(int n, double dt, double c) {
  return {std::vector<double>(n, c), dt, false};
}

double RadonMeasureEstimate::mass(int a, int b) const {
  double s = 0.0;
  for (int k = a; k < b; ++k) s += density.at(k);
  return s * dt;
}

double martingale_defect(const ProcessSample& P, double adapted_tol, int max_col_total) {
  double defect = 0.0;
  for (int s = 0; s < P.size(); ++s) {
    if (adaptedness_residual(P.ops[s], s, max_col_total) > adapted_tol)
      throw AdaptednessError("process sample is not adapted", s);
    const auto& f = P.model->factorization(s);
    const Eigen::MatrixXcd base = past_block(P.ops[s], s, 0, 0);
    for (int t = s + 1; t < P.size(); ++t) {
      const Eigen::MatrixXcd diff = past_block(P.ops[t], s, 0, 0) - base;
      for (int c = 0; c < diff.cols(); ++c)
        if (max_col_total < 0 || f.past_total(c) <= max_col_total)
          defect = std::max(defect, diff.col(c).cwiseAbs().maxCoeff());
    }
  }
  return defect;
}

double weighted_operator_norm(const OperatorMatrix& X, const WeightTriple& p, const WeightTriple& q) {
  const auto& model = *X.model;
  return linalg::spectral_norm(
      linalg::scale_rows_cols(X.mat, model.weight_vector(q), model.weight_vector(-p)));
}

RegularityReport regularity_estimate(const ProcessSample& P, const WeightTriple& p,
                                     const WeightTriple& q, const RadonMeasureEstimate& m,
                                     double rel_tol) {
  const auto& model = *P.model;
  const auto wq = model.weight_vector(q), wmp = model.weight_vector(-p);
  RegularityReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (int v = 0; v < P.size(); ++v) {
    const auto& cols = model.factorization(v).states_with_future(0);
    for (int u = v + 1; u < P.size(); ++u) {
      const SparseMat X = P.ops[u].mat - P.ops[v].mat;
      const SparseMat fwd = linalg::scale_rows_cols(X, wq, wmp);
      const SparseMat adj = linalg::scale_rows_cols(SparseMat(X.adjoint()), wmp, wq);
      RegularityPair pr;
      pr.v = v;
      pr.u = u;
      pr.lhs_forward = std::pow(linalg::spectral_norm(linalg::select_columns(fwd, cols)), 2);
      pr.lhs_adjoint = std::pow(linalg::spectral_norm(linalg::select_columns(adj, cols)), 2);
      pr.m = m.mass(v, u);
      const double lhs = std::max(pr.lhs_forward, pr.lhs_adjoint);
      pr.pass = lhs <= pr.m * (1.0 + rel_tol) + 1e-13;
      rep.worst_margin = std::min(rep.worst_margin, pr.m - lhs);
      rep.pass = rep.pass && pr.pass;
      rep.pairs.push_back(pr);
    }
  }
  if (rep.pairs.empty()) rep.worst_margin = 0.0;
  return rep;
}

WeakLimitOperators weak_limit_operators(const std::vector<std::vector<OperatorMatrix>>& G,
                                        const std::vector<std::vector<OperatorMatrix>>& Fstar,
                                        const WeightTriple& p, const WeightTriple& q) {
  WeakLimitOperators out;
  if (G.empty()) return out;
  const ModelPtr model = G.front().front().model;
  const auto& rho = model->multiplicity().rho;
  const auto w2q = model->weight_vector(q * 2.0), wm2p = model->weight_vector(p * -2.0);
  const auto wmp = model->weight_vector(-p), wq = model->weight_vector(q);
  const SparseMat D2q = linalg::diagonal(w2q), Dm2p = linalg::diagonal(wm2p);
  for (std::size_t k = 0; k < G.size(); ++k) {
    SparseMat g(model->dim(), model->dim()), f(model->dim(), model->dim());
    for (int i = 0; i < model->d(); ++i) {
      const SparseMat& Gi = G[k][i].mat;
      const SparseMat& Fi = Fstar[k][i].mat;
      g += std::pow(rho[i], 2.0 * q.p3) * SparseMat(Gi.adjoint() * D2q * Gi);
      f += std::pow(rho[i], -2.0 * p.p3) * SparseMat(Fi * Dm2p * SparseMat(Fi.adjoint()));
    }
    out.G_norm.push_back(linalg::spectral_norm(linalg::scale_rows_cols(g, wmp, wmp)));
    out.F_norm.push_back(linalg::spectral_norm(linalg::scale_rows_cols(f, wq, wq)));
    out.G.push_back({model, g, static_cast<int>(k)});
    out.F.push_back({model, f, static_cast<int>(k)});
  }
  return out;
}

RadonMeasureEstimate regularity_from_integrands(
    const std::vector<std::vector<OperatorMatrix>>& G,
    const std::vector<std::vector<OperatorMatrix>>& Fstar, const WeightTriple& p,
    const WeightTriple& q, bool squared) {
  RadonMeasureEstimate m;
  m.from_integrands = true;
  if (G.empty()) return m;
  m.dt = G.front().front().model->dt();
  const auto w = weak_limit_operators(G, Fstar, p, q);
  for (std::size_t k = 0; k < G.size(); ++k) {
    const double gn = squared ? w.G_norm[k] * w.G_norm[k] : w.G_norm[k];
    const double fn = squared ? w.F_norm[k] * w.F_norm[k] : w.F_norm[k];
    m.density.push_back(std::exp(2.0 * q.p2) * gn + std::exp(-2.0 * p.p2) * fn);
  }
  return m;
}

MonotonicityReport norm_monotonicity(const ProcessSample& P, const WeightTriple& p,
                                     const WeightTriple& q, double tol) {
  MonotonicityReport rep;
  for (const auto& op : P.ops) rep.norms.push_back(weighted_operator_norm(op, p, q));
  for (std::size_t k = 1; k < rep.norms.size(); ++k) {
    const double drop = rep.norms[k - 1] - rep.norms[k];
    rep.max_violation = std::max(rep.max_violation, drop);
    if (drop > tol * std::max(1.0, rep.norms[k - 1])) rep.pass = false;
  }
  return rep;
}

IsometryReport wiener_isometry_check(const StepFunction& f, const StepFunction& g, double dt,
                                     long long samples, std::uint64_t seed, int workers,
                                     double sigmas) {
  constexpr int kBatches = 64;
  const int n = f.slices(), d = f.channels();
  const double half_f = 0.5 * f.norm_sq(dt), half_g = 0.5 * g.norm_sq(dt);
  const double sdt = std::sqrt(dt);
  std::vector<double> sum(kBatches, 0.0), sumsq(kBatches, 0.0);
  auto run_batch = [&](int b) {
    const long long count = samples / kBatches + (b < samples % kBatches ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss;
    double s = 0.0, s2 = 0.0;
    for (long long it = 0; it < count; ++it) {
      double xf = 0.0, xg = 0.0;
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < d; ++i) {
          const double db = sdt * gauss(rng);
          xf += f(k, i).real() * db;
          xg += g(k, i).real() * db;
        }
      const double val = std::exp(xf - half_f + xg - half_g);
      s += val;
      s2 += val * val;
    }
    sum[b] = s;
    sumsq[b] = s2;
  };
  workers = std::max(1, std::min(workers, kBatches));
  if (workers == 1) {
    for (int b = 0; b < kBatches; ++b) run_batch(b);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int b = w; b < kBatches; b += workers) run_batch(b);
      });
    for (auto& t : pool) t.join();
  }
  double s = 0.0, s2 = 0.0;
  for (int b = 0; b < kBatches; ++b) {
    s += sum[b];
    s2 += sumsq[b];
  }
  IsometryReport rep;
  rep.samples = samples;
  rep.estimate = s / samples;
  const double var = std::max(0.0, s2 / samples - rep.estimate * rep.estimate);
  rep.std_error = std::sqrt(var / samples);
  rep.expected = std::exp(f.bilinear(g, dt).real());
  rep.pass = std::abs(rep.estimate - rep.expected) <= sigmas * rep.std_error;
  return rep;
}

}  // namespace qsc
