#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qsc {

using cplx = std::complex<double>;
using SparseMat = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<cplx, int>;

namespace linalg {

/// Largest singular value, from the Hermitian eigenproblem on the smaller Gram side.
double spectral_norm(const Eigen::MatrixXcd& x);
double spectral_norm(const SparseMat& x);

/// exp(x) by Pade scaling and squaring.
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& x);

double max_abs(const Eigen::MatrixXcd& x);
double max_abs(const SparseMat& x);

/// diag(left) * x * diag(right)
SparseMat scale_rows_cols(const SparseMat& x, const std::vector<double>& left,
                          const std::vector<double>& right);
Eigen::MatrixXcd scale_rows_cols(const Eigen::MatrixXcd& x, const std::vector<double>& left,
                                 const std::vector<double>& right);

SparseMat identity(int dim);
SparseMat diagonal(const std::vector<double>& d);

/// Keep only the listed columns (in order).
Eigen::MatrixXcd select_columns(const SparseMat& x, const std::vector<int>& cols);

}  // namespace linalg
}  // namespace qsc
