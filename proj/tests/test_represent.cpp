#include "doctest.h"

#include <cmath>
#include <random>

#include "qsc/represent.hpp"

using namespace qsc;

namespace {

ModelPtr make(int d, int m, int n, int N) {
  return build_model(MultiplicityConfig::uniform(d), InitialConfig::trivial(m), {1.0, n}, N);
}

double family_diff(const IntegrandQuadruple& a, const IntegrandQuadruple& b) {
  double m = 0.0;
  const int d = a.channels();
  for (int k = 0; k < a.slices(); ++k)
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m = std::max(m, observable_diff(a.E1[k][i][j], b.E1[k][i][j], k));
      m = std::max(m, observable_diff(a.E2[k][i], b.E2[k][i], k));
      m = std::max(m, observable_diff(a.E3[k][i], b.E3[k][i], k));
    }
  return m;
}

}  // namespace

TEST_CASE("blocks of a basic process are its identity integrand") {
  auto model = make(2, 1, 3, 3);
  const ExtractionResult ex = extract_blocks(basic_process_sample({BasicKind::conservation, 1, 0}, model));
  CHECK(ex.max_defect() == 0.0);
  CHECK(ex.max_E4() == 0.0);
  for (int k = 0; k < 3; ++k) {
    CHECK(observable_diff(ex.quad.E1[k][1][0], OperatorMatrix::identity(model), k) < 1e-15);
    CHECK(observable_diff(ex.quad.E1[k][0][1], OperatorMatrix::zero(model), k) == 0.0);
    CHECK(observable_diff(ex.quad.E3[k][0], OperatorMatrix::zero(model), k) == 0.0);
  }
}

TEST_CASE("property: extraction inverts integration") {
  std::mt19937_64 rng(51);
  auto model = build_model({2, {1.0, 1.5}}, {2, {1.0, 2.0}}, {1.0, 3}, 3);
  for (int trial = 0; trial < 6; ++trial) {
    const auto q = random_adapted_quadruple(model, rng);
    const ProcessSample P = qs_integrate(q);
    const ExtractionResult ex = extract_blocks(P);
    CHECK(family_diff(ex.quad, q) < 1e-12);
    CHECK(ex.max_defect() < 1e-12);
    const ProcessSample R = qs_integrate(ex.quad, P.ops[0]);
    for (int k = 0; k <= 3; ++k) CHECK(linalg::max_abs(SparseMat(R.ops[k].mat - P.ops[k].mat)) < 1e-12);
  }
}

TEST_CASE("a time drift shows up as E4") {
  auto model = make(1, 1, 3, 2);
  IntegrandQuadruple q = IntegrandQuadruple::zero(model);
  for (int k = 0; k < 3; ++k) q.E4[k] = OperatorMatrix::identity(model) * cplx(0.5);
  const ExtractionResult ex = extract_blocks(qs_integrate(q));
  CHECK(ex.max_E4() == doctest::Approx(0.5));
}

TEST_CASE("property: uniqueness, perturbing G moves the one-quantum vacuum response") {
  std::mt19937_64 rng(52);
  auto model = make(2, 1, 3, 3);
  const auto q = random_adapted_quadruple(model, rng);
  const double eps = 1e-3;
  IntegrandQuadruple r = q;
  r.E3[1][0] = r.E3[1][0] + OperatorMatrix::identity(model) * cplx(eps);
  const ProcessSample P = qs_integrate(q), R = qs_integrate(r);
  const int vac = model->vacuum();
  const auto& fac = model->factorization(1);
  const int one = fac.merge(fac.past_of(vac), future_one(*model, 1, 0));
  const cplx dP = P.ops[2].mat.coeff(one, vac) - P.ops[1].mat.coeff(one, vac);
  const cplx dR = R.ops[2].mat.coeff(one, vac) - R.ops[1].mat.coeff(one, vac);
  CHECK(std::abs(dR - dP - eps * std::sqrt(model->dt())) < 1e-15);
  CHECK(family_diff(extract_blocks(R).quad, r) < 1e-12);
}

TEST_CASE("S and Z split the conservation part") {
  auto model = make(2, 1, 3, 3);
  const ProcessSample P = basic_process_sample({BasicKind::conservation, 0, 0}, model) +
                          basic_process_sample({BasicKind::creation, 1}, model);
  const SZDecomposition sz = build_S_Z(P, extract_blocks(P));
  CHECK(sz.z_defect < 1e-12);
  CHECK(sz.adjoint_residual < 1e-12);
}

TEST_CASE("Weyl martingale: closed form vacuum value") {
  auto model = make(1, 1, 4, 10);
  const ProcessSample U = weyl_martingale_U(0, UScheme::closed_form, model);
  const StateVector vac = StateVector::basis(model, model->vacuum());
  const double frozen[] = {1.0, 0.8824969025845955, 0.7788007830714049, 0.6872892787909722,
                           0.6065306597126334};
  for (int k = 0; k <= 4; ++k)
    CHECK(std::abs(std::exp(-0.5 * U.time(k)) * inner(vac, U.ops[k].apply(vac)) - frozen[k]) < 1e-10);
}

TEST_CASE("Euler U is a martingale below the ceiling") {
  auto model = make(1, 1, 3, 6);
  const ProcessSample U = weyl_martingale_U(0, UScheme::euler, model);
  CHECK(martingale_defect(U, 1e-12, model->N() - model->n() - 1) < 1e-13);
}

TEST_CASE("Euler U converges to the closed form at first order") {
  const double e4 = weyl_weak_error(UScheme::euler, 4, 1.0);
  const double e8 = weyl_weak_error(UScheme::euler, 8, 1.0);
  const double e16 = weyl_weak_error(UScheme::euler, 16, 1.0);
  CHECK(e8 < e4);
  CHECK(e4 / e8 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(e8 / e16 == doctest::Approx(2.0).epsilon(0.1));
  // The -dt/2 variant loses the e^{t/2} growth and stalls.
  CHECK(weyl_weak_error(UScheme::euler_half_dt, 16, 1.0) > 0.4);
}

TEST_CASE("Y is a martingale and its creation integrands link to the normalised ones") {
  auto model = make(1, 1, 3, 6);
  const ProcessSample P = basic_process_sample({BasicKind::creation, 0}, model) +
                          basic_process_sample({BasicKind::conservation, 0, 0}, model) * cplx(0.5);
  const ExtractionResult ex = extract_blocks(P);
  const int limit = model->N() - model->n() - 1;
  const ProcessSample Y = build_Y(0, P, ex, {}, {});
  CHECK(martingale_defect(Y, 1e-12, limit) < 1e-13);
  const PastFamily M = extract_Mji(Y);
  const PastFamily Mhat = normalised_Mji(0, P, ex, {}, {});
  const ProcessSample U = weyl_martingale_U(0, UScheme::euler, model);
  for (int k = 0; k < model->n(); ++k) {
    const Eigen::MatrixXcd linked = Mhat[k][0] * past_block(U.ops[k], k, 0, 0);
    const auto& fac = model->factorization(k);
    for (int c = 0; c < fac.past_dim(); ++c) {
      if (fac.past_total(c) > limit) continue;
      for (int r = 0; r < fac.past_dim(); ++r)
        if (fac.past_total(r) < model->N()) CHECK(std::abs(M[k][0](r, c) - linked(r, c)) < 1e-12);
    }
  }
}

TEST_CASE("pipeline reproduces the block integrands") {
  auto model = make(2, 1, 4, 3);
  std::mt19937_64 rng(53);
  const auto q = random_adapted_quadruple(model, rng);
  for (const auto& [p, w] : std::vector<std::pair<WeightTriple, WeightTriple>>{
           {{}, {}}, {{1.0, 0.5, 1.0}, {}}, {{0.5, 0.3, 0.2}, {0.5, 0.1, 0.2}}}) {
    ProcessSample P = qs_integrate(q);
    P.p = p;
    P.q = w;
    const ExtractionResult ex = extract_blocks(P, p, w);
    const PipelineResult pr = run_pipeline(P, ex, p, w);
    CHECK(pr.max_diff_vs_blocks < 1e-10);
    CHECK(pr.z_residual < 1e-10);
  }
}
