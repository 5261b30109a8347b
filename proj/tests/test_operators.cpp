#include "doctest.h"

#include <cmath>
#include <random>

#include "qsc/operators.hpp"

using namespace qsc;

namespace {

ModelPtr make(int d, int m, int n, int N, double T = 1.0) {
  return build_model(MultiplicityConfig::uniform(d), InitialConfig::trivial(m), {T, n}, N);
}

StepFunction random_step(int n, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  StepFunction f = StepFunction::zero(n, d);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < d; ++i) f.values(s, i) = cplx(U(rng), U(rng));
  return f;
}

std::vector<int> states_up_to(const ModelSpace& model, int total) {
  std::vector<int> out;
  for (int s = 0; s < model.dim(); ++s)
    if (model.total_of(s) <= total) out.push_back(s);
  return out;
}

}  // namespace

TEST_CASE("annihilation and creation are transposes") {
  std::mt19937_64 rng(1);
  auto model = make(2, 1, 3, 3);
  const StepFunction g = random_step(3, 2, rng);
  const SparseMat a = annihilation(g, model).mat, c = creation(g, model).mat;
  CHECK(linalg::max_abs(SparseMat(a - SparseMat(c.transpose()))) == 0.0);
}

TEST_CASE("property: canonical commutation below the ceiling") {
  std::mt19937_64 rng(2);
  auto model = make(2, 1, 3, 4);
  const auto cols = states_up_to(*model, 3);
  for (int trial = 0; trial < 10; ++trial) {
    const StepFunction f = random_step(3, 2, rng), g = random_step(3, 2, rng);
    const SparseMat a = annihilation(f, model).mat, c = creation(g, model).mat;
    const SparseMat comm = a * c - c * a;
    const cplx expected = f.bilinear(g, model->dt());
    const Eigen::MatrixXcd block = linalg::select_columns(comm, cols);
    for (int j = 0; j < static_cast<int>(cols.size()); ++j)
      for (int r = 0; r < block.rows(); ++r) {
        const cplx want = r == cols[j] ? expected : cplx(0.0);
        CHECK(std::abs(block(r, j) - want) < 1e-13);
      }
  }
}

TEST_CASE("conservation counts particles per channel") {
  auto model = make(2, 1, 2, 3);
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(2, 2);
  P(1, 1) = 1.0;
  const OperatorMatrix L = conservation(P, 0, 2, model);
  for (int s = 0; s < model->dim(); ++s) {
    const auto occ = model->occ_of(s);
    CHECK(L.mat.coeff(s, s) == cplx(occ[model->mode(0, 1)] + occ[model->mode(1, 1)]));
  }
  CHECK_THROWS_AS(conservation(P, 0.25, 1.0, model), GridError);
}

TEST_CASE("second quantization accepts only diagonal one-particle maps") {
  auto model = make(1, 1, 2, 2);
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Identity(2, 2) * 2.0;
  const OperatorMatrix G = second_quantization(C, model);
  for (int s = 0; s < model->dim(); ++s)
    CHECK(G.mat.coeff(s, s) == cplx(std::pow(2.0, model->total_of(s))));
  C(0, 1) = 0.5;
  CHECK_THROWS_AS(second_quantization(C, model), ConfigError);
}

TEST_CASE("Weyl operator: vacuum expectation and inverse") {
  auto model = make(1, 1, 2, 12);
  const StepFunction h = StepFunction::constant(2, 1, 0.7);
  const OperatorMatrix W = weyl(h, model), Wm = weyl(h * cplx(-1.0), model);
  const StateVector vac = StateVector::basis(model, model->vacuum());
  const double nh = h.norm_sq(model->dt());
  CHECK(std::abs(inner(vac, W.apply(vac)) - std::exp(-0.5 * nh)) < 1e-10);
  // Unitarity and W(h)W(-h) = I hold on low grades; the ceiling only touches the tail.
  const auto cols = states_up_to(*model, 4);
  const SparseMat prod = W.mat * Wm.mat - linalg::identity(model->dim());
  CHECK(linalg::max_abs(linalg::select_columns(prod, cols)) < 1e-6);
}

TEST_CASE("basic processes are adapted and start at zero") {
  auto model = make(2, 2, 3, 3);
  for (BasicKind kind : {BasicKind::annihilation, BasicKind::creation, BasicKind::conservation}) {
    const ProcessSample P = basic_process_sample({kind, 1, 0}, model);
    CHECK(P.size() == 4);
    CHECK(linalg::max_abs(P.ops[0].mat) == 0.0);
    for (int k = 0; k < P.size(); ++k) CHECK(adaptedness_residual(P.ops[k], k) == 0.0);
  }
}

TEST_CASE("A*(t) raises by the indicator of [0, t]") {
  auto model = make(1, 1, 4, 3);
  const OperatorMatrix A = basic_process({BasicKind::creation, 0}, 0.5, model);
  const OperatorMatrix ref = creation(StepFunction::channel_indicator(4, 1, 0, 0, 2), model);
  CHECK(linalg::max_abs(SparseMat(A.mat - ref.mat)) == 0.0);
}

TEST_CASE("lift and past_block are inverse for adapted operators") {
  std::mt19937_64 rng(4);
  auto model = make(1, 2, 3, 3);
  const OperatorMatrix A = basic_process({BasicKind::creation, 0}, 2, model);
  const Eigen::MatrixXcd blk = past_block(A, 2, 0, 0);
  CHECK(linalg::max_abs(SparseMat(lift(blk, 2, model).mat - A.mat)) == 0.0);
  // The future increment is not adapted at 2.
  const OperatorMatrix inc = increment({BasicKind::creation, 0}, 2, model);
  CHECK(adaptedness_residual(inc, 2) > 0.1);
  CHECK(adaptedness_residual(inc, 3) == 0.0);
}

TEST_CASE("Ito table: all sixteen cells at n=4") {
  auto model = make(1, 1, 4, 4);
  for (int k = 0; k < 4; ++k) {
    const ItoReport rep = verify_ito_table(k, model);
    CHECK(rep.cells.size() == 16);
    CHECK(rep.pass);
  }
}

TEST_CASE("Ito table: residual scales as dt^2") {
  double prev = 0.0;
  for (int n : {4, 8, 16}) {
    auto model = make(1, 1, 1, 4, 1.0 / n);
    const ItoReport rep = verify_ito_table(0, model);
    const double r = std::max(rep.max_zero_residual, rep.max_nonzero_residual);
    if (prev > 0) CHECK(prev / r == doctest::Approx(4.0).epsilon(0.05));
    prev = r;
  }
}

TEST_CASE("operator dumps round-trip") {
  std::mt19937_64 rng(8);
  auto model = make(2, 1, 2, 2);
  const OperatorMatrix X = annihilation(random_step(2, 2, rng), model) +
                           conservation(Eigen::MatrixXcd::Identity(2, 2), 0, 1, model) * cplx(0.3, 0.1);
  const OperatorMatrix Y = load_csv(dump_csv(X), model);
  CHECK(linalg::max_abs(SparseMat(X.mat - Y.mat)) == 0.0);
  CHECK_THROWS_AS(load_csv("row,col,re,im\n0,999,1,0\n", model), ModelMismatch);
  CHECK_THROWS_AS(load_csv("row,col,re,im\n0;1\n", model), ConfigError);
}

TEST_CASE("operators from different models do not mix") {
  auto a = make(1, 1, 2, 2), b = make(1, 1, 2, 2);
  CHECK_THROWS_AS(OperatorMatrix::identity(a) + OperatorMatrix::identity(b), ModelMismatch);
}
