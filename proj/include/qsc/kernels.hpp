#pragma once

// Data-parallel inner loops over complex coefficient arrays.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is chosen once at first use from CPUID; setting
// QSC_KERNELS=scalar in the environment forces the reference path.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace qsc::kernels {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // sum_i x_i * y_i
  cplx (*dot_bilinear)(const cplx* x, const cplx* y, std::size_t n);
  // sum_i conj(x_i) * y_i
  cplx (*dot_hermitian)(const cplx* x, const cplx* y, std::size_t n);
  // y_i += a * x_i
  void (*axpy)(cplx a, const cplx* x, cplx* y, std::size_t n);
  // sum_i w_i^2 |x_i|^2
  double (*weighted_sqnorm)(const double* w, const cplx* x, std::size_t n);
  // out_i = w_i * x_i
  void (*scale_diag)(const double* w, const cplx* x, cplx* out, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool isa_available(Isa isa);
const KernelTable& table(Isa isa);
const KernelTable& active();
std::string_view isa_name(Isa isa);

inline cplx dot_bilinear(std::span<const cplx> x, std::span<const cplx> y) {
  return active().dot_bilinear(x.data(), y.data(), x.size());
}
inline cplx dot_hermitian(std::span<const cplx> x, std::span<const cplx> y) {
  return active().dot_hermitian(x.data(), y.data(), x.size());
}
inline void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline double weighted_sqnorm(std::span<const double> w, std::span<const cplx> x) {
  return active().weighted_sqnorm(w.data(), x.data(), x.size());
}
inline void scale_diag(std::span<const double> w, std::span<const cplx> x, std::span<cplx> out) {
  active().scale_diag(w.data(), x.data(), out.data(), x.size());
}

}  // namespace qsc::kernels
