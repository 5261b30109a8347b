#include "qsc/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace qsc::linalg {

double spectral_norm(const Eigen::MatrixXcd& x) {
  if (x.size() == 0) return 0.0;
  Eigen::MatrixXcd gram = x.rows() < x.cols() ? Eigen::MatrixXcd(x * x.adjoint())
                                               : Eigen::MatrixXcd(x.adjoint() * x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double spectral_norm(const SparseMat& x) {
  if (x.nonZeros() == 0) return 0.0;
  // Gram matrix of the nonzero rows/columns only.
  std::vector<int> rows, cols;
  std::vector<char> row_used(x.rows(), 0), col_used(x.cols(), 0);
  for (int c = 0; c < x.outerSize(); ++c)
    for (SparseMat::InnerIterator it(x, c); it; ++it) {
      row_used[it.row()] = 1;
      col_used[it.col()] = 1;
    }
  for (int r = 0; r < x.rows(); ++r)
    if (row_used[r]) rows.push_back(r);
  for (int c = 0; c < x.cols(); ++c)
    if (col_used[c]) cols.push_back(c);
  std::vector<int> rpos(x.rows(), -1), cpos(x.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rpos[rows[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) cpos[cols[i]] = static_cast<int>(i);
  Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(rows.size(), cols.size());
  for (int c = 0; c < x.outerSize(); ++c)
    for (SparseMat::InnerIterator it(x, c); it; ++it) dense(rpos[it.row()], cpos[it.col()]) = it.value();
  return spectral_norm(dense);
}

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& x) { return x.exp(); }

double max_abs(const Eigen::MatrixXcd& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

double max_abs(const SparseMat& x) {
  double m = 0.0;
  for (int c = 0; c < x.outerSize(); ++c)
    for (SparseMat::InnerIterator it(x, c); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

SparseMat scale_rows_cols(const SparseMat& x, const std::vector<double>& left,
                          const std::vector<double>& right) {
  SparseMat out = x;
  for (int c = 0; c < out.outerSize(); ++c)
    for (SparseMat::InnerIterator it(out, c); it; ++it)
      it.valueRef() *= left[it.row()] * right[it.col()];
  return out;
}

Eigen::MatrixXcd scale_rows_cols(const Eigen::MatrixXcd& x, const std::vector<double>& left,
                                 const std::vector<double>& right) {
  Eigen::Map<const Eigen::VectorXd> l(left.data(), left.size()), r(right.data(), right.size());
  return l.asDiagonal() * x * r.asDiagonal();
}

SparseMat identity(int dim) {
  SparseMat id(dim, dim);
  id.setIdentity();
  return id;
}

SparseMat diagonal(const std::vector<double>& d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t.emplace_back(int(i), int(i), d[i]);
  SparseMat m(d.size(), d.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::MatrixXcd select_columns(const SparseMat& x, const std::vector<int>& cols) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(x.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (SparseMat::InnerIterator it(x, cols[j]); it; ++it) out(it.row(), j) = it.value();
  return out;
}

}  // namespace qsc::linalg
