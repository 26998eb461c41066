#include <atomic>
#include <cstdlib>
#include <string>

#include "jjtls/error.hpp"
#include "jjtls/kernels.hpp"

namespace jjtls::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(JJTLS_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend best_backend() {
  if (backend_supported(Backend::Avx2)) return Backend::Avx2;
  if (backend_supported(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

Backend initial_backend() {
  if (const char* env = std::getenv("JJTLS_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && backend_supported(Backend::Avx2)) return Backend::Avx2;
    if (v == "neon" && backend_supported(Backend::Neon)) return Backend::Neon;
  }
  return best_backend();
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

StencilCoeffs coeffs(const StencilView& a) {
  return {a.nx, a.diag.data(), a.west.data(), a.east.data(), a.south.data(), a.north.data()};
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCategory::InvalidArgument, std::string("size mismatch in ") + what);
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: {
      static const bool ok = cpu_has_avx2();
      return ok;
    }
    case Backend::Neon:
#if defined(JJTLS_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_supported(b)) {
    throw Error(ErrorCategory::InvalidArgument,
                "SIMD backend '" + std::string(backend_name(b)) + "' is not supported here");
  }
  current().store(b, std::memory_order_relaxed);
}

void lorentzian_accumulate(std::span<const double> freqs, std::span<const double> center,
                           std::span<const double> half_width, std::span<const double> amp,
                           std::span<double> rates) {
  check_sizes(freqs.size(), rates.size(), "lorentzian_accumulate");
  check_sizes(center.size(), half_width.size(), "lorentzian_accumulate");
  check_sizes(center.size(), amp.size(), "lorentzian_accumulate");
  switch (active_backend()) {
#if defined(JJTLS_HAVE_AVX2_KERNELS)
    case Backend::Avx2:
      avx2::lorentzian_accumulate(freqs.data(), freqs.size(), center.data(), half_width.data(),
                                  amp.data(), center.size(), rates.data());
      return;
#endif
#if defined(JJTLS_HAVE_NEON_KERNELS)
    case Backend::Neon:
      neon::lorentzian_accumulate(freqs.data(), freqs.size(), center.data(), half_width.data(),
                                  amp.data(), center.size(), rates.data());
      return;
#endif
    default:
      scalar::lorentzian_accumulate(freqs, center, half_width, amp, rates);
  }
}

void stencil_apply(const StencilView& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.nx * a.ny;
  check_sizes(x.size(), n, "stencil_apply");
  check_sizes(y.size(), n, "stencil_apply");
  check_sizes(a.diag.size(), n, "stencil_apply");
  if (n == 0) return;
  const double* xp = x.data();
  double* yp = y.data();
  const std::size_t nx = a.nx;

  // First and last rows may reference outside the array; their outward
  // coefficients are zero by contract, so evaluate them with guards.
  auto guarded = [&](std::size_t i) {
    double v = a.diag[i] * xp[i];
    if (i >= 1) v -= a.west[i] * xp[i - 1];
    if (i + 1 < n) v -= a.east[i] * xp[i + 1];
    if (i >= nx) v -= a.south[i] * xp[i - nx];
    if (i + nx < n) v -= a.north[i] * xp[i + nx];
    yp[i] = v;
  };
  if (a.ny < 3) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
    return;
  }
  for (std::size_t i = 0; i < nx; ++i) guarded(i);
  for (std::size_t i = n - nx; i < n; ++i) guarded(i);

  const StencilCoeffs c = coeffs(a);
  switch (active_backend()) {
#if defined(JJTLS_HAVE_AVX2_KERNELS)
    case Backend::Avx2: avx2::stencil_rows(c, nx, n - nx, xp, yp); return;
#endif
#if defined(JJTLS_HAVE_NEON_KERNELS)
    case Backend::Neon: neon::stencil_rows(c, nx, n - nx, xp, yp); return;
#endif
    default: scalar::stencil_rows(c, nx, n - nx, xp, yp);
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_sizes(x.size(), y.size(), "dot");
  switch (active_backend()) {
#if defined(JJTLS_HAVE_AVX2_KERNELS)
    case Backend::Avx2: return avx2::dot(x.data(), y.data(), x.size());
#endif
#if defined(JJTLS_HAVE_NEON_KERNELS)
    case Backend::Neon: return neon::dot(x.data(), y.data(), x.size());
#endif
    default: return scalar::dot(x.data(), y.data(), x.size());
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size(), "axpy");
  switch (active_backend()) {
#if defined(JJTLS_HAVE_AVX2_KERNELS)
    case Backend::Avx2: avx2::axpy(alpha, x.data(), y.data(), x.size()); return;
#endif
#if defined(JJTLS_HAVE_NEON_KERNELS)
    case Backend::Neon: neon::axpy(alpha, x.data(), y.data(), x.size()); return;
#endif
    default: scalar::axpy(alpha, x.data(), y.data(), x.size());
  }
}

void scale(std::span<const double> r, std::span<const double> inv_diag, std::span<double> z) {
  check_sizes(r.size(), inv_diag.size(), "scale");
  check_sizes(r.size(), z.size(), "scale");
  switch (active_backend()) {
#if defined(JJTLS_HAVE_AVX2_KERNELS)
    case Backend::Avx2: avx2::scale(r.data(), inv_diag.data(), z.data(), r.size()); return;
#endif
#if defined(JJTLS_HAVE_NEON_KERNELS)
    case Backend::Neon: neon::scale(r.data(), inv_diag.data(), z.data(), r.size()); return;
#endif
    default: scalar::scale(r.data(), inv_diag.data(), z.data(), r.size());
  }
}

}  // namespace jjtls::kernels
