#pragma once
// Data-parallel inner loops shared by the spectroscopy simulator and the
// field solver. Each kernel has a scalar reference implementation and
// vectorized variants (AVX2+FMA on x86-64, NEON on aarch64) chosen once at
// runtime. The scalar path defines the semantics; vector paths are tested
// for equivalence against it.

#include <cstddef>
#include <span>
#include <string_view>

namespace jjtls::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend b);

// True when the backend was compiled in and the running CPU supports it.
bool backend_supported(Backend b);

// Best supported backend, unless overridden by JJTLS_SIMD=scalar|avx2|neon
// or set_backend().
Backend active_backend();

// Throws jjtls::Error if the backend is not supported on this machine.
void set_backend(Backend b);

// Five-point stencil in flat row-major layout (nx columns, ny rows).
// Row i of the operator is
//   y[i] = diag[i]*x[i] - west[i]*x[i-1] - east[i]*x[i+1]
//          - south[i]*x[i-nx] - north[i]*x[i+nx]
// Coefficients pointing outside the grid must be zero.
struct StencilView {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::span<const double> diag;
  std::span<const double> west;
  std::span<const double> east;
  std::span<const double> south;
  std::span<const double> north;
};

// rates[i] += sum_k amp[k] * hw[k]^2 / ((freqs[i] - center[k])^2 + hw[k]^2)
void lorentzian_accumulate(std::span<const double> freqs, std::span<const double> center,
                           std::span<const double> half_width, std::span<const double> amp,
                           std::span<double> rates);

void stencil_apply(const StencilView& a, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// z[i] = r[i] * inv_diag[i]
void scale(std::span<const double> r, std::span<const double> inv_diag, std::span<double> z);

// Raw-pointer form of StencilView used by the per-backend entry points, so
// the vector translation units do not instantiate std templates.
struct StencilCoeffs {
  std::size_t nx;
  const double* diag;
  const double* west;
  const double* east;
  const double* south;
  const double* north;
};

// Per-backend entry points. Calling a backend the CPU does not support is
// undefined; go through the dispatching functions above unless testing.
namespace scalar {
void lorentzian_accumulate(std::span<const double> freqs, std::span<const double> center,
                           std::span<const double> half_width, std::span<const double> amp,
                           std::span<double> rates);
void stencil_rows(const StencilCoeffs& a, std::size_t begin, std::size_t end,
                  const double* x, double* y);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(const double* r, const double* inv_diag, double* z, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define JJTLS_HAVE_AVX2_KERNELS 1
namespace avx2 {
void lorentzian_accumulate(const double* freqs, std::size_t n_freq, const double* center,
                           const double* half_width, const double* amp, std::size_t n_defects,
                           double* rates);
void stencil_rows(const StencilCoeffs& a, std::size_t begin, std::size_t end,
                  const double* x, double* y);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(const double* r, const double* inv_diag, double* z, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define JJTLS_HAVE_NEON_KERNELS 1
namespace neon {
void lorentzian_accumulate(const double* freqs, std::size_t n_freq, const double* center,
                           const double* half_width, const double* amp, std::size_t n_defects,
                           double* rates);
void stencil_rows(const StencilCoeffs& a, std::size_t begin, std::size_t end,
                  const double* x, double* y);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(const double* r, const double* inv_diag, double* z, std::size_t n);
}  // namespace neon
#endif

}  // namespace jjtls::kernels
