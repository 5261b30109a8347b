#include "doctest.h"

#include <cmath>
#include <random>

#include "qsc/martingale.hpp"
#include "qsc/qsi.hpp"

using namespace qsc;

namespace {

ModelPtr make(int d, int m, int n, int N) {
  return build_model(MultiplicityConfig::uniform(d), InitialConfig::trivial(m), {1.0, n}, N);
}

}  // namespace

TEST_CASE("basic processes are martingales") {
  auto model = make(2, 1, 3, 3);
  for (BasicKind kind : {BasicKind::annihilation, BasicKind::creation, BasicKind::conservation})
    CHECK(martingale_defect(basic_process_sample({kind, 0, 1}, model)) == 0.0);
}

TEST_CASE("the time process has defect T") {
  auto model = make(1, 1, 4, 2);
  ProcessSample P{model, {}, {}, {}};
  for (int k = 0; k <= 4; ++k) P.ops.push_back(OperatorMatrix::identity(model) * cplx(0.25 * k));
  CHECK(martingale_defect(P) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("a non-adapted sample is rejected") {
  auto model = make(1, 1, 3, 2);
  ProcessSample P = basic_process_sample({BasicKind::creation, 0}, model);
  P.ops[1] = basic_process({BasicKind::creation, 0}, 3, model);
  CHECK_THROWS_AS(martingale_defect(P), AdaptednessError);
}

TEST_CASE("A* is regular for Lebesgue measure, forward and adjoint") {
  auto model = make(1, 1, 4, 4);
  const ProcessSample P = basic_process_sample({BasicKind::creation, 0}, model);
  const auto rep = regularity_estimate(P, {}, {}, RadonMeasureEstimate::lebesgue(4, model->dt()));
  CHECK(rep.pass);
  // (u - v) is attained for the forward direction on the vacuum.
  for (const auto& pr : rep.pairs) CHECK(pr.lhs_forward == doctest::Approx(pr.m).epsilon(1e-12));
  const auto tight = regularity_estimate(P, {}, {}, RadonMeasureEstimate::lebesgue(4, model->dt(), 0.9));
  CHECK_FALSE(tight.pass);
}

TEST_CASE("property: the integrand measure makes (G, F) martingales regular") {
  std::mt19937_64 rng(41);
  auto model = build_model({2, {1.0, 1.5}}, {2, {1.0, 2.0}}, {1.0, 3}, 3);
  RandomQuadrupleOptions opts;
  opts.conservation = false;
  for (const auto& [p, q] : std::vector<std::pair<WeightTriple, WeightTriple>>{
           {{}, {}}, {{1.0, 0.5, 1.0}, {}}, {{0.5, 0.0, 0.5}, {0.2, 0.0, 0.1}}}) {
    for (int t = 0; t < 4; ++t) {
      const auto quad = random_adapted_quadruple(model, rng, opts);
      const ProcessSample P = qs_integrate(quad);
      const auto m = regularity_from_integrands(quad.E3, quad.E2, p, q);
      CHECK(regularity_estimate(P, p, q, m).pass);
      CHECK(norm_monotonicity(P, p, q).pass);
    }
  }
}

TEST_CASE("squared measure variant squares the norms") {
  std::mt19937_64 rng(42);
  auto model = make(1, 1, 3, 3);
  const auto quad = random_adapted_quadruple(model, rng);
  const auto w = weak_limit_operators(quad.E3, quad.E2, {}, {});
  const auto m1 = regularity_from_integrands(quad.E3, quad.E2, {}, {}, false);
  const auto m2 = regularity_from_integrands(quad.E3, quad.E2, {}, {}, true);
  for (int k = 0; k < 3; ++k) {
    CHECK(m1.density[k] == doctest::Approx(w.G_norm[k] + w.F_norm[k]));
    CHECK(m2.density[k] == doctest::Approx(w.G_norm[k] * w.G_norm[k] + w.F_norm[k] * w.F_norm[k]));
  }
  CHECK(m1.mass(0, 3) == doctest::Approx((m1.density[0] + m1.density[1] + m1.density[2]) / 3.0));
}

TEST_CASE("weighted operator norm of a diagonal operator") {
  auto model = build_model({1, {2.0}}, {1, {1.0}}, {1.0, 1}, 2);
  // Number operator between weights: ||A^q N A^{-p}|| = max_n n (e^{q2-p2} 2^{q3-p3})^n
  const OperatorMatrix Nop = conservation(Eigen::MatrixXcd::Identity(1, 1), 0, 1, model);
  const double r = std::exp(0.1) * std::pow(2.0, 0.5);
  CHECK(weighted_operator_norm(Nop, {0.0, 0.0, 0.0}, {0.0, 0.1, 0.5}) == doctest::Approx(2 * r * r));
}

TEST_CASE("Wiener isometry is independent of the worker count") {
  const StepFunction f = StepFunction::constant(4, 1, 0.5), g = StepFunction::constant(4, 1, -0.3);
  const auto a = wiener_isometry_check(f, g, 0.25, 20000, 99, 1);
  const auto b = wiener_isometry_check(f, g, 0.25, 20000, 99, 4);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.expected == doctest::Approx(std::exp(-0.15)));
  CHECK(a.pass);
}
