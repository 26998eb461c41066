// aarch64 variants. NEON is architecturally guaranteed on aarch64, so no
// runtime probe is needed beyond the compile-time guard.

#include <arm_neon.h>

#include "jjtls/kernels.hpp"

namespace jjtls::kernels::neon {

void lorentzian_accumulate(const double* freqs, std::size_t n_freq, const double* center,
                           const double* half_width, const double* amp, std::size_t n_defects,
                           double* rates) {
  std::size_t i = 0;
  for (; i + 2 <= n_freq; i += 2) {
    const float64x2_t f = vld1q_f64(freqs + i);
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < n_defects; ++k) {
      const double w2s = half_width[k] * half_width[k];
      const float64x2_t df = vsubq_f64(f, vdupq_n_f64(center[k]));
      const float64x2_t den = vfmaq_f64(vdupq_n_f64(w2s), df, df);
      acc = vaddq_f64(acc, vdivq_f64(vdupq_n_f64(amp[k] * w2s), den));
    }
    vst1q_f64(rates + i, vaddq_f64(vld1q_f64(rates + i), acc));
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
  for (; i + 2 <= end; i += 2) {
    float64x2_t v = vmulq_f64(vld1q_f64(a.diag + i), vld1q_f64(x + i));
    v = vfmsq_f64(v, vld1q_f64(a.west + i), vld1q_f64(x + i - 1));
    v = vfmsq_f64(v, vld1q_f64(a.east + i), vld1q_f64(x + i + 1));
    v = vfmsq_f64(v, vld1q_f64(a.south + i), vld1q_f64(x + i - nx));
    v = vfmsq_f64(v, vld1q_f64(a.north + i), vld1q_f64(x + i + nx));
    vst1q_f64(y + i, v);
  }
  for (; i < end; ++i) {
    y[i] = a.diag[i] * x[i] - a.west[i] * x[i - 1] - a.east[i] * x[i + 1] -
           a.south[i] * x[i - nx] - a.north[i] * x[i + nx];
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* r, const double* inv_diag, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(z + i, vmulq_f64(vld1q_f64(r + i), vld1q_f64(inv_diag + i)));
  for (; i < n; ++i) z[i] = r[i] * inv_diag[i];
}

}  // namespace jjtls::kernels::neon
