#pragma once

// Discrete quantum stochastic integrals against dLambda_ij, dA_i, dA*_i and dt
// with integrands constant on each slice and evaluated at its left endpoint.

#include <cstdint>
#include <random>
#include <vector>

#include "qsc/operators.hpp"

namespace qsc {

/// Per-slice families E1[k][i][j], E2[k][i], E3[k][i], E4[k], each a full
/// operator adapted at t_k.
struct IntegrandQuadruple {
  ModelPtr model;
  WeightTriple p;
  std::vector<std::vector<std::vector<OperatorMatrix>>> E1;
  std::vector<std::vector<OperatorMatrix>> E2, E3;
  std::vector<OperatorMatrix> E4;

  static IntegrandQuadruple zero(ModelPtr model, WeightTriple p = {});

  int slices() const { return static_cast<int>(E4.size()); }
  int channels() const { return model->d(); }

  IntegrandQuadruple operator+(const IntegrandQuadruple& o) const;
  IntegrandQuadruple operator*(cplx c) const;
};

struct AdmissibilityReport {
  std::vector<double> slice_values;
  double total = 0.0;
  bool pass = true;
};

AdmissibilityReport check_admissible(const IntegrandQuadruple& q, const Eigen::VectorXcd& u,
                                     const StepFunction& f, const WeightTriple& p, int K);

/// Xi(t_K) for every K = 0..n, starting from xi0 (zero when omitted).
/// Throws AdaptednessError naming the first slice whose integrand is not adapted.
ProcessSample qs_integrate(const IntegrandQuadruple& q,
                           const std::optional<OperatorMatrix>& xi0 = std::nullopt);

/// Slice-sum evaluation of the exponential-vector identity for
/// <Xi(t_K) u (x) phi_f, v (x) phi_g>. The noise terms are paired on vectors
/// cut at N-1 particles, which is what the truncated increments see, so the
/// two sides agree to rounding for number-preserving integrands.
cplx oracle_matrix_element(const IntegrandQuadruple& q, const Eigen::VectorXcd& u,
                           const StepFunction& f, const Eigen::VectorXcd& v,
                           const StepFunction& g, int K);

/// <Xi u (x) phi_f, v (x) phi_g> through the matrix path.
cplx matrix_element(const OperatorMatrix& xi, const Eigen::VectorXcd& u, const StepFunction& f,
                    const Eigen::VectorXcd& v, const StepFunction& g);

double G_of(const IntegrandQuadruple& q, const Eigen::VectorXcd& u, const StepFunction& f,
            const WeightTriple& p, int slice);
double gronwall_bound(const IntegrandQuadruple& q, const Eigen::VectorXcd& u,
                      const StepFunction& f, const WeightTriple& p, int K);

struct AdaptednessReport {
  std::vector<double> factor_residual;   // per grid point
  std::vector<double> commute_residual;  // against later increments, below the ceiling
  double max_residual = 0.0;
  bool adapted = true;
};

AdaptednessReport adaptedness_check(const ProcessSample& P, double tol = 1e-12);

struct RandomQuadrupleOptions {
  bool conservation = true;   // E1
  bool annihilation = true;   // E2
  bool creation = true;       // E3
  bool time = false;          // E4
  /// Every component has operator norm at most this value.
  double max_norm = 1.0;
};

/// Number-preserving adapted components: c0 I + X (x) I + c Lambda_ab(t_k).
IntegrandQuadruple random_adapted_quadruple(const ModelPtr& model, std::mt19937_64& rng,
                                            const RandomQuadrupleOptions& opts = {});

}  // namespace qsc
