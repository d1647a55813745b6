#pragma once
// Raw-pointer kernel signatures shared by the per-ISA translation units.

#include <cstddef>

namespace bcj::kernels::detail {

// n = length of `in`; `out` has n + 1 slots.
using ConvolveFn = void (*)(const double* in, std::size_t n, double p, double* out);
using AxpyFn = void (*)(double a, const double* x, double* y, std::size_t n);

void bernoulli_convolve_scalar(const double* in, std::size_t n, double p, double* out);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);

#if defined(BCJ_HAVE_AVX2_KERNELS)
void bernoulli_convolve_avx2(const double* in, std::size_t n, double p, double* out);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
#endif

#if defined(BCJ_HAVE_NEON_KERNELS)
void bernoulli_convolve_neon(const double* in, std::size_t n, double p, double* out);
void axpy_neon(double a, const double* x, double* y, std::size_t n);
#endif

}  // namespace bcj::kernels::detail
