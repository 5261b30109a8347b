#pragma once

// Martingale and regularity checks for sampled processes.
//
// Conditional expectation at t_s is compression onto the future vacuum of the
// factorisation at s; its range is spanned by u (x) phi_{1_{[0,s]} f}.

#include <cstdint>
#include <vector>

#include "qsc/operators.hpp"

namespace qsc {

/// Absolutely continuous measure sampled per slice: m([t_a, t_b]) = sum density * dt.
struct RadonMeasureEstimate {
  std::vector<double> density;
  double dt = 0.0;
  bool from_integrands = false;

  static RadonMeasureEstimate lebesgue(int n, double dt, double c = 1.0);
  /// m([t_a, t_b]) for grid indices a <= b.
  double mass(int a, int b) const;
};

/// max over s < t of the largest entry of E_s[Xi(t)] - Xi(s).
/// Throws AdaptednessError when the sample is not adapted. With
/// max_col_total >= 0 both checks look only at columns whose past carries at
/// most that many particles, for products the truncation does not resolve.
double martingale_defect(const ProcessSample& P, double adapted_tol = 1e-10,
                         int max_col_total = -1);

/// Operator norm of A^q X A^{-p}.
double weighted_operator_norm(const OperatorMatrix& X, const WeightTriple& p, const WeightTriple& q);

struct RegularityPair {
  int v = 0, u = 0;
  double lhs_forward = 0.0, lhs_adjoint = 0.0, m = 0.0;
  bool pass = true;
};

struct RegularityReport {
  std::vector<RegularityPair> pairs;
  double worst_margin = 0.0;  // min over pairs of m - max(lhs)
  bool pass = true;
};

/// Checks both regularity inequalities at every grid pair v < u on past_v vectors.
RegularityReport regularity_estimate(const ProcessSample& P, const WeightTriple& p,
                                     const WeightTriple& q, const RadonMeasureEstimate& m,
                                     double rel_tol = 1e-10);

struct WeakLimitOperators {
  std::vector<OperatorMatrix> G, F;  // per slice
  std::vector<double> G_norm, F_norm;  // ||G||_{p;-p}, ||F||_{-q;q}
};

/// G(s) = sum_i rho_i^{2q3} G_i^+ A^{2q} G_i and F(s) = sum_i rho_i^{-2p3} F*_i A^{-2p} (F*_i)^+,
/// with G_i = creation integrand and F*_i = annihilation integrand per slice.
WeakLimitOperators weak_limit_operators(const std::vector<std::vector<OperatorMatrix>>& G,
                                        const std::vector<std::vector<OperatorMatrix>>& Fstar,
                                        const WeightTriple& p, const WeightTriple& q);

/// m'(s) = e^{2 q2} ||G(s)||_{p;-p} + e^{-2 p2} ||F(s)||_{-q;q}; `squared` uses the
/// squared norms instead.
RadonMeasureEstimate regularity_from_integrands(
    const std::vector<std::vector<OperatorMatrix>>& G,
    const std::vector<std::vector<OperatorMatrix>>& Fstar, const WeightTriple& p,
    const WeightTriple& q, bool squared = false);

struct MonotonicityReport {
  std::vector<double> norms;
  double max_violation = 0.0;
  bool pass = true;
};

MonotonicityReport norm_monotonicity(const ProcessSample& P, const WeightTriple& p,
                                     const WeightTriple& q, double tol = 1e-10);

struct IsometryReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double expected = 0.0;
  long long samples = 0;
  bool pass = true;
};

/// Monte Carlo E[exp-martingale(f) exp-martingale(g)] against exp(<f,g>).
/// The stream is split into fixed batches seeded from (seed, batch), so the
/// result does not depend on `workers`.
IsometryReport wiener_isometry_check(const StepFunction& f, const StepFunction& g, double dt,
                                     long long samples, std::uint64_t seed, int workers = 1,
                                     double sigmas = 4.0);

}  // namespace qsc
