#include "jjtls/kernels.hpp"

namespace jjtls::kernels::scalar {

void lorentzian_accumulate(std::span<const double> freqs, std::span<const double> center,
                           std::span<const double> half_width, std::span<const double> amp,
                           std::span<double> rates) {
  const std::size_t nk = center.size();
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double f = freqs[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
      const double w2 = half_width[k] * half_width[k];
      const double df = f - center[k];
      acc += amp[k] * w2 / (df * df + w2);
    }
    rates[i] += acc;
  }
}

void stencil_rows(const StencilCoeffs& a, std::size_t begin, std::size_t end, const double* x,
                  double* y) {
  const std::size_t nx = a.nx;
  for (std::size_t i = begin; i < end; ++i) {
    y[i] = a.diag[i] * x[i] - a.west[i] * x[i - 1] - a.east[i] * x[i + 1] -
           a.south[i] * x[i - nx] - a.north[i] * x[i + nx];
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* r, const double* inv_diag, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] * inv_diag[i];
}

}  // namespace jjtls::kernels::scalar
