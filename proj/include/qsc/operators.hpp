#pragma once

// Ladder, conservation and Weyl operators on the truncated space, and the
// basic processes A_i(t), A_i*(t), Lambda_ij(t) sampled on the grid.
//
// Conventions: a(g) = sum g_i(s) sqrt(dt) b_{s,i} and a*(h) = sum h_i(s)
// sqrt(dt) b+_{s,i}, both without conjugation, so a(g) and a*(g) are
// transposes of each other and inner(a(g)x, y) = inner(x, a*(conj g) y).
// Creation past the truncation ceiling is dropped.

#include <optional>
#include <string>
#include <vector>

#include "qsc/fock.hpp"
#include "qsc/linalg.hpp"

namespace qsc {

struct OperatorMatrix {
  ModelPtr model;
  SparseMat mat;
  /// Smallest k such that the operator is known to act as identity on slices >= k.
  std::optional<int> adapted_at;

  static OperatorMatrix zero(ModelPtr model);
  static OperatorMatrix identity(ModelPtr model);

  int dim() const { return static_cast<int>(mat.rows()); }
  StateVector apply(const StateVector& v) const;
  OperatorMatrix adjoint() const;

  OperatorMatrix operator+(const OperatorMatrix& o) const;
  OperatorMatrix operator-(const OperatorMatrix& o) const;
  OperatorMatrix operator*(const OperatorMatrix& o) const;
  OperatorMatrix operator*(cplx c) const;
};

/// Sampled process Xi(t_k), k = 0..n, measured in L(G_p, G_q).
struct ProcessSample {
  ModelPtr model;
  std::vector<OperatorMatrix> ops;
  WeightTriple p, q;

  int size() const { return static_cast<int>(ops.size()); }
  double time(int k) const { return model->grid().at(k); }
  ProcessSample operator+(const ProcessSample& o) const;
  ProcessSample operator-(const ProcessSample& o) const;
  ProcessSample operator*(cplx c) const;
};

OperatorMatrix annihilation(const StepFunction& g, const ModelPtr& model);
OperatorMatrix creation(const StepFunction& h, const ModelPtr& model);
/// sum over slices in [k0, k1) of sum_ij T_ij b+_{s,i} b_{s,j}
OperatorMatrix conservation(const Eigen::MatrixXcd& T, int k0, int k1, const ModelPtr& model);
OperatorMatrix conservation(const Eigen::MatrixXcd& T, double ta, double tb, const ModelPtr& model);
/// Gamma(C) for C diagonal in the mode basis, given as c(s, i) per mode (n x d).
OperatorMatrix second_quantization_diag(const Eigen::MatrixXcd& c, const ModelPtr& model);
/// Gamma(C) for a one-particle matrix C of size nd x nd; throws ConfigError unless C is diagonal.
OperatorMatrix second_quantization(const Eigen::MatrixXcd& C, const ModelPtr& model);
/// exp(a*(h) - a(conj h)), dense matrix exponential.
OperatorMatrix weyl(const StepFunction& h, const ModelPtr& model);
/// Initial-space operator X (m x m) acting as X (x) I.
OperatorMatrix initial_operator(const Eigen::MatrixXcd& X, const ModelPtr& model);
/// Diagonal weight A^p.
OperatorMatrix weight_operator(const WeightTriple& p, const ModelPtr& model);

enum class BasicKind { annihilation, creation, conservation };

struct BasicProcessSpec {
  BasicKind kind;
  int i = 0;
  int j = 0;  // second index, conservation only
};

OperatorMatrix basic_process(const BasicProcessSpec& spec, int k, const ModelPtr& model);
OperatorMatrix basic_process(const BasicProcessSpec& spec, double t, const ModelPtr& model);
/// X(t_{k+1}) - X(t_k)
OperatorMatrix increment(const BasicProcessSpec& spec, int k, const ModelPtr& model);
ProcessSample basic_process_sample(const BasicProcessSpec& spec, const ModelPtr& model);
/// dt * I on slice k, the time increment.
OperatorMatrix time_increment(int k, const ModelPtr& model);

/// Future configuration index (factorisation at k) holding the slice-k occupation `occ`.
int future_index(const ModelSpace& model, int k, std::span<const int> occ);
/// One particle at (k, channel), rest of the future empty.
int future_one(const ModelSpace& model, int k, int channel);

/// X (x) I_{[t_k}: past matrix (past_dim x past_dim at factorisation k) lifted to the full space.
OperatorMatrix lift(const Eigen::MatrixXcd& past, int k, const ModelPtr& model);
/// Block <past' (x) out | op | past (x) in> as a past_dim x past_dim matrix.
Eigen::MatrixXcd past_block(const OperatorMatrix& op, int k, int in_future, int out_future);
/// Residual of op against lift(past_block(op, k, 0, 0), k); zero iff op is adapted at t_k.
/// With max_col_total >= 0 only columns carrying at most that many particles count.
double adaptedness_residual(const OperatorMatrix& op, int k, int max_col_total = -1);

struct ItoCell {
  std::string left, right;
  std::string expected;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ItoReport {
  int slice = 0;
  std::vector<ItoCell> cells;  // one per ordered pair of increment kinds, worst case over channels
  double max_zero_residual = 0.0;
  double max_nonzero_residual = 0.0;
  bool pass = true;
};

/// Checks every product of slice-k increments {dt I, dA_i, dA*_i, dLambda_ij}
/// against the quantum Ito table on an exponential-vector battery.
ItoReport verify_ito_table(int k, const ModelPtr& model, double tolerance = 1e-12);

/// CSV triplets "row,col,re,im".
std::string dump_csv(const OperatorMatrix& op);
OperatorMatrix load_csv(const std::string& text, const ModelPtr& model);

}  // namespace qsc
