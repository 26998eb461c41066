// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.
// Keep this file free of std templates: their instantiations here would be
// emitted with AVX2 encodings and could be picked by the linker for
// callers on CPUs without AVX2.

#include <immintrin.h>

#include "jjtls/kernels.hpp"

namespace jjtls::kernels::avx2 {

void lorentzian_accumulate(const double* freqs, std::size_t n_freq, const double* center,
                           const double* half_width, const double* amp, std::size_t n_defects,
                           double* rates) {
  std::size_t i = 0;
  for (; i + 4 <= n_freq; i += 4) {
    const __m256d f = _mm256_loadu_pd(freqs + i);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n_defects; ++k) {
      const double w2s = half_width[k] * half_width[k];
      const __m256d w2 = _mm256_set1_pd(w2s);
      const __m256d df = _mm256_sub_pd(f, _mm256_set1_pd(center[k]));
      const __m256d den = _mm256_fmadd_pd(df, df, w2);
      const __m256d num = _mm256_set1_pd(amp[k] * w2s);
      acc = _mm256_add_pd(acc, _mm256_div_pd(num, den));
    }
    _mm256_storeu_pd(rates + i, _mm256_add_pd(_mm256_loadu_pd(rates + i), acc));
  }
  for (; i < n_freq; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n_defects; ++k) {
      const double w2 = half_width[k] * half_width[k];
      const double df = freqs[i] - center[k];
      acc += amp[k] * w2 / (df * df + w2);
    }
    rates[i] += acc;
  }
}

void stencil_rows(const StencilCoeffs& a, std::size_t begin, std::size_t end, const double* x,
                  double* y) {
  const std::size_t nx = a.nx;
  std::size_t i = begin;
  for (; i + 4 <= end; i += 4) {
    __m256d v = _mm256_mul_pd(_mm256_loadu_pd(a.diag + i), _mm256_loadu_pd(x + i));
    v = _mm256_fnmadd_pd(_mm256_loadu_pd(a.west + i), _mm256_loadu_pd(x + i - 1), v);
    v = _mm256_fnmadd_pd(_mm256_loadu_pd(a.east + i), _mm256_loadu_pd(x + i + 1), v);
    v = _mm256_fnmadd_pd(_mm256_loadu_pd(a.south + i), _mm256_loadu_pd(x + i - nx), v);
    v = _mm256_fnmadd_pd(_mm256_loadu_pd(a.north + i), _mm256_loadu_pd(x + i + nx), v);
    _mm256_storeu_pd(y + i, v);
  }
  for (; i < end; ++i) {
    y[i] = a.diag[i] * x[i] - a.west[i] * x[i - 1] - a.east[i] * x[i + 1] -
           a.south[i] * x[i - nx] - a.north[i] * x[i + nx];
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* r, const double* inv_diag, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(r + i), _mm256_loadu_pd(inv_diag + i)));
  }
  for (; i < n; ++i) z[i] = r[i] * inv_diag[i];
}

}  // namespace jjtls::kernels::avx2
