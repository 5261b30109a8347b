#pragma once

// Recovering the integrands of a sampled martingale.
//
// Two routes: direct reading of the one-quantum slice blocks of each
// increment, and the route through the Weyl martingale U, the auxiliary
// martingale Y, its creation integrands M and the conservation integrands L.
// Past matrices are indexed by the factorisation at the slice's left end;
// comparisons use only entries whose past carries at most N-1 particles,
// since the others cannot be reached by a slice increment.

#include <vector>

#include "qsc/martingale.hpp"
#include "qsc/qsi.hpp"

namespace qsc {

/// Past-level matrices per slice: [k] or [k][i] or [k][i][j].
using PastFamily = std::vector<std::vector<Eigen::MatrixXcd>>;
using PastFamily2 = std::vector<std::vector<std::vector<Eigen::MatrixXcd>>>;

struct ExtractionResult {
  /// E1 = E_ij, E2 = F*_i, E3 = G_i, E4 = time part (diagnostic).
  IntegrandQuadruple quad;
  std::vector<double> defect;  // per slice
  WeightTriple p, q;

  double max_defect() const;
  double max_E4() const;
};

ExtractionResult extract_blocks(const ProcessSample& P, const WeightTriple& p = {},
                                const WeightTriple& q = {});

/// Largest entry difference of two past matrices over observable indices.
double observable_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, int k,
                       const ModelSpace& model);
/// Same, for the past blocks of two full operators adapted at t_k.
double observable_diff(const OperatorMatrix& a, const OperatorMatrix& b, int k);

struct SZDecomposition {
  ProcessSample S, Z;
  double z_defect = 0.0;
  /// S built from the adjoint families against S^+, below the truncation ceiling.
  double adjoint_residual = 0.0;
};

SZDecomposition build_S_Z(const ProcessSample& P, const ExtractionResult& ex);

enum class UScheme {
  euler,          // U_{k+1} = (I + dA*_i - dA_i) U_k
  euler_half_dt,  // U_{k+1} = (I + dA*_i - dA_i - dt/2 I) U_k
  closed_form,    // e^{t/2} W(1_{[0,t]} e_i)
};

ProcessSample weyl_martingale_U(int i, UScheme scheme, const ModelPtr& model);

/// Relative weak error of `scheme` against the closed form on a battery of
/// exponential vectors, for a single channel on n slices of [0, T]. Both
/// processes are products of slice factors, so each matrix element is a
/// product of one-slice matrix elements computed at `slice_N` particles.
double weyl_weak_error(UScheme scheme, int n, double T, int slice_N = 20);

/// Y(t) = A^q (Xi(t) A^{-p} U(t) - e^{-p2} rho_i^{-p3} int F*_i A^{-p} U ds), Euler U.
ProcessSample build_Y(int i, const ProcessSample& P, const ExtractionResult& ex,
                      const WeightTriple& p, const WeightTriple& q);

/// Creation integrands of a martingale Y: [k][j] = <past' 1_j| dY_k |past 0> / sqrt(dt).
PastFamily extract_Mji(const ProcessSample& Y);

/// M_j^{(i)} U^{(i)}(t_k)^{-1} per slice, read from the right-normalised
/// increment dY_k U_k^{-1} = A^q[Xi_{k+1} A^{-p} V_k - Xi_k A^{-p} - e^{-p2} rho_i^{-p3} F*_i A^{-p} dt]
/// with V_k = I + dA*_i(k) - dA_i(k). Indexed [k][j].
PastFamily normalised_Mji(int i, const ProcessSample& P, const ExtractionResult& ex,
                          const WeightTriple& p, const WeightTriple& q);

/// L_ij(t_k) = A^{-q} Mhat_i^{(j)} A^p - e^{q2} rho_i^{q3} G_i - delta_ij e^{q2-p2} rho_i^{q3-p3} (S + Z),
/// with Mhat^{(j)} = normalised_Mji(j, ...). Indexed [k][i][j].
PastFamily2 compute_Lij(const std::vector<PastFamily>& Mhat, const ExtractionResult& ex,
                        const SZDecomposition& sz, const WeightTriple& p, const WeightTriple& q);

/// E_ij = e^{p2-q2} rho_i^{-q3} rho_j^{p3} L_ij.
PastFamily2 assemble_Eij(const PastFamily2& L, const ModelSpace& model, const WeightTriple& p,
                         const WeightTriple& q);

struct PipelineResult {
  PastFamily2 L, E;
  double max_diff_vs_blocks = 0.0;
  /// max_t || Z(t) - Xi(0) - sum E_ij dLambda_ij ||
  double z_residual = 0.0;
};

PipelineResult run_pipeline(const ProcessSample& P, const ExtractionResult& ex,
                            const WeightTriple& p, const WeightTriple& q);

struct WeakLimitSums {
  WeakLimitOperators ops;
  std::vector<double> bound;  // m'(s)
  std::vector<bool> slice_pass;
  double worst_ratio = 0.0;   // max over slices of max(||G||, ||F||) / m'
  bool pass = true;
};

WeakLimitSums weak_limit_sums(const ExtractionResult& ex, const WeightTriple& p,
                              const WeightTriple& q, const RadonMeasureEstimate& m);

}  // namespace qsc
