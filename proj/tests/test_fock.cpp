#include "doctest.h"

#include <cmath>
#include <random>

#include "qsc/fock.hpp"

using namespace qsc;

namespace {

ModelPtr make(int d, int m, int n, int N, double T = 1.0) {
  return build_model(MultiplicityConfig::uniform(d), InitialConfig::trivial(m), {T, n}, N);
}

StepFunction random_step(int n, int d, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  StepFunction f = StepFunction::zero(n, d);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < d; ++i) f.values(s, i) = U(rng);
  return f;
}

}  // namespace

TEST_CASE("dimension formula matches the enumerated basis") {
  for (int d = 1; d <= 2; ++d)
    for (int m = 1; m <= 2; ++m)
      for (int n = 1; n <= 4; ++n)
        for (int N = 1; N <= 3; ++N) {
          auto model = make(d, m, n, N);
          CHECK(model->dim() == ModelSpace::count_dimension(d, m, n, N));
        }
  // C(8+3, 3) = 165 states with at most 3 particles in 8 modes
  CHECK(ModelSpace::count_dimension(2, 2, 4, 3) == 2 * 165);
}

TEST_CASE("budget overflow names the dimension") {
  try {
    ModelSpace::build(MultiplicityConfig::uniform(2), InitialConfig::trivial(), {1.0, 16}, 6, 1000);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(e.dim() == ModelSpace::count_dimension(2, 1, 16, 6));
    CHECK(std::string(e.what()).find(std::to_string(e.dim())) != std::string::npos);
  }
}

TEST_CASE("basis is graded and every state is found again") {
  auto model = make(2, 2, 3, 3);
  for (int s = 1; s < model->dim(); ++s) {
    CHECK(model->total_of(s - 1) <= model->total_of(s));
    const auto st = model->state(s);
    CHECK(model->find(st.init, st.occ) == s);
    CHECK(st.total() == model->total_of(s));
  }
  CHECK(model->total_of(model->vacuum(1)) == 0);
  CHECK(model->init_of(model->vacuum(1)) == 1);
}

TEST_CASE("grid points and factorisation lookups") {
  auto model = make(1, 1, 4, 2, 2.0);
  CHECK(model->grid().index_of(1.0) == 2);
  CHECK_THROWS_AS(model->grid().index_of(0.3), GridError);
  CHECK_THROWS_AS(factorize(0.7, *model), GridError);
  CHECK(factorize(1.5, *model).slice() == 3);
}

TEST_CASE("exponential-vector pairing at d=1, n=4, N=10 equals e") {
  auto model = make(1, 1, 4, 10);
  const StepFunction one = StepFunction::constant(4, 1, 1.0);
  const cplx v = pair_bilinear(exponential_vector(one, model), exponential_vector(one, model));
  CHECK(std::abs(v - 2.718281828459045) < 1e-6);
  // The error is exactly the discarded tail sum_{k>10} 1/k!.
  CHECK(std::abs(2.718281828459045 - v.real()) <= std::pow(truncation_bound(1.0, 10), 2) + 1e-14);
}

TEST_CASE("truncation bound is the tail of the exponential series") {
  CHECK(truncation_bound(0.0, 3) == 0.0);
  double tail = 0.0, term = 1.0;
  for (int k = 1; k <= 40; ++k) {
    term *= 2.0 / k;
    if (k > 4) tail += term;
  }
  CHECK(truncation_bound(2.0, 4) == doctest::Approx(std::sqrt(tail)).epsilon(1e-12));
}

TEST_CASE("property: pairing of exponential vectors is exp<f,g> up to the tail") {
  std::mt19937_64 rng(5);
  auto model = make(2, 1, 3, 6);
  const double dt = model->dt();
  for (int trial = 0; trial < 20; ++trial) {
    const StepFunction f = random_step(3, 2, rng, 0.8), g = random_step(3, 2, rng, 0.8);
    const cplx v = pair_bilinear(exponential_vector(f, model), exponential_vector(g, model));
    const cplx expected = std::exp(f.bilinear(g, dt));
    const double tb = truncation_bound(f, dt, 6) * truncation_bound(g, dt, 6);
    CHECK(std::abs(v - expected) <= tb + 1e-13);
  }
}

TEST_CASE("property: split and merge are inverse") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> G;
  auto model = make(2, 2, 3, 3);
  StateVector v = StateVector::zero(model);
  for (int i = 0; i < model->dim(); ++i) v.coeffs(i) = cplx(G(rng), G(rng));
  for (int k = 0; k <= 3; ++k) {
    const StateVector w = merge(model, k, split(v, k));
    CHECK((w.coeffs - v.coeffs).norm() == 0.0);
  }
}

TEST_CASE("property: exponential vectors factorise across t_k below the ceiling") {
  std::mt19937_64 rng(21);
  auto model = make(1, 1, 4, 4);
  const StepFunction f = random_step(4, 1, rng);
  const StateVector phi = exponential_vector(f, model);
  for (int k = 1; k < 4; ++k) {
    const auto& fac = model->factorization(k);
    const StateVector past = exponential_vector(f.restricted(0, k), model);
    const StateVector fut = exponential_vector(f.restricted(k, 4), model);
    const Eigen::MatrixXcd C = split(phi, k);
    const Eigen::MatrixXcd Cp = split(past, k), Cf = split(fut, k);
    for (int p = 0; p < fac.past_dim(); ++p)
      for (int q = 0; q < fac.future_dim(); ++q) {
        if (fac.merge(p, q) < 0) continue;
        CHECK(std::abs(C(p, q) - Cp(p, 0) * Cf(0, q)) < 1e-14);
      }
  }
}

TEST_CASE("weights: A^p is diagonal with the product form") {
  auto model = build_model({2, {1.0, 2.0}}, {2, {1.0, 3.0}}, {1.0, 2}, 2);
  const WeightTriple p{1.0, 0.5, 2.0};
  for (int s = 0; s < model->dim(); ++s) {
    const auto st = model->state(s);
    double w = std::pow(model->initial().alpha[st.init], p.p1);
    for (int slice = 0; slice < 2; ++slice)
      for (int i = 0; i < 2; ++i)
        w *= std::pow(std::exp(p.p2) * std::pow(model->multiplicity().rho[i], p.p3),
                      st.occ[model->mode(slice, i)]);
    CHECK(model->weight(s, p) == doctest::Approx(w).epsilon(1e-13));
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(MultiplicityConfig({2, {1.0}}).validate(), ConfigError);
  CHECK_THROWS_AS(MultiplicityConfig({1, {0.5}}).validate(), ConfigError);
  CHECK_THROWS_AS(InitialConfig({1, {0.9}}).validate(), ConfigError);
  CHECK_THROWS_AS(TimeGrid({1.0, 0}).validate(), ConfigError);
}

TEST_CASE("basis dump lists states in canonical order") {
  auto model = make(1, 1, 2, 1);
  CHECK(basis_csv(*model) == "index,init,n_0_0,n_1_0\n0,0,0,0\n1,0,0,1\n2,0,1,0\n");
}
