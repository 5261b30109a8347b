#include "qsc/kernels.hpp"

namespace qsc::kernels {
namespace {

cplx dot_bilinear_scalar(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() - x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() + x[i].imag() * y[i].real();
  }
  return {re, im};
}

cplx dot_hermitian_scalar(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void axpy_scalar(cplx a, const cplx* x, cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double weighted_sqnorm_scalar(const double* w, const cplx* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w2 = w[i] * w[i];
    acc += w2 * (x[i].real() * x[i].real() + x[i].imag() * x[i].imag());
  }
  return acc;
}

void scale_diag_scalar(const double* w, const cplx* x, cplx* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = w[i] * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::scalar,         dot_bilinear_scalar, dot_hermitian_scalar,
                             axpy_scalar,         weighted_sqnorm_scalar,
                             scale_diag_scalar};
  return t;
}

}  // namespace qsc::kernels
