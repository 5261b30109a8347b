// Compiled with -mavx2 -mfma. Only reached after a CPUID check.

#include <immintrin.h>

#include "qsc/kernels.hpp"

namespace qsc::kernels {
namespace {

// Two complex doubles per __m256d, stored interleaved (re, im, re, im).
inline const double* as_doubles(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* as_doubles(cplx* p) { return reinterpret_cast<double*>(p); }

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sw = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

// Accumulates (x_re*y_re, x_im*y_im) in `direct` and (x_re*y_im, x_im*y_re) in
// `cross`; the callers combine lanes with the sign pattern of their product.
inline void accumulate_products(const cplx* x, const cplx* y, std::size_t n, __m256d& direct,
                                __m256d& cross, std::size_t& done) {
  direct = _mm256_setzero_pd();
  cross = _mm256_setzero_pd();
  const double* xd = as_doubles(x);
  const double* yd = as_doubles(y);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    __m256d ys = _mm256_permute_pd(yv, 0b0101);
    direct = _mm256_fmadd_pd(xv, yv, direct);
    cross = _mm256_fmadd_pd(xv, ys, cross);
  }
  done = i;
}

cplx dot_bilinear_avx2(const cplx* x, const cplx* y, std::size_t n) {
  __m256d direct, cross;
  std::size_t i;
  accumulate_products(x, y, n, direct, cross, i);
  const __m256d sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
  double re = hsum(_mm256_mul_pd(direct, sign));
  double im = hsum(cross);
  for (; i < n; ++i) {
    re += x[i].real() * y[i].real() - x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() + x[i].imag() * y[i].real();
  }
  return {re, im};
}

cplx dot_hermitian_avx2(const cplx* x, const cplx* y, std::size_t n) {
  __m256d direct, cross;
  std::size_t i;
  accumulate_products(x, y, n, direct, cross, i);
  // cross lanes hold x_re*y_im (even) and x_im*y_re (odd).
  const __m256d sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
  double re = hsum(direct);
  double im = hsum(_mm256_mul_pd(cross, sign));
  for (; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void axpy_avx2(cplx a, const cplx* x, cplx* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(a.real());
  const __m256d ai = _mm256_set_pd(a.imag(), -a.imag(), a.imag(), -a.imag());
  const double* xd = as_doubles(x);
  double* yd = as_doubles(y);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    __m256d xs = _mm256_permute_pd(xv, 0b0101);  // (im, re)
    __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    yv = _mm256_fmadd_pd(ar, xv, yv);
    yv = _mm256_fmadd_pd(ai, xs, yv);
    _mm256_storeu_pd(yd + 2 * i, yv);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double weighted_sqnorm_avx2(const double* w, const cplx* x, std::size_t n) {
  const double* xd = as_doubles(x);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    // (w0, w0, w1, w1)
    __m256d wv = _mm256_set_pd(w[i + 1], w[i + 1], w[i], w[i]);
    __m256d s = _mm256_mul_pd(wv, xv);
    acc = _mm256_fmadd_pd(s, s, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double w2 = w[i] * w[i];
    total += w2 * (x[i].real() * x[i].real() + x[i].imag() * x[i].imag());
  }
  return total;
}

void scale_diag_avx2(const double* w, const cplx* x, cplx* out, std::size_t n) {
  const double* xd = as_doubles(x);
  double* od = as_doubles(out);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    __m256d wv = _mm256_set_pd(w[i + 1], w[i + 1], w[i], w[i]);
    _mm256_storeu_pd(od + 2 * i, _mm256_mul_pd(wv, xv));
  }
  for (; i < n; ++i) out[i] = w[i] * x[i];
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{Isa::avx2,       dot_bilinear_avx2, dot_hermitian_avx2,
                             axpy_avx2,       weighted_sqnorm_avx2,
                             scale_diag_avx2};
  return t;
}

}  // namespace qsc::kernels
