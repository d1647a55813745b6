// Compiled with -mavx2 only. FMA stays disabled so each lane rounds exactly
// like the scalar reference.
#include <immintrin.h>

#include "kernels_impl.hpp"

namespace bcj::kernels::detail {

void bernoulli_convolve_avx2(const double* in, std::size_t n, double p, double* out) {
    const double q = 1.0 - p;
    if (n == 0) {
        out[0] = 0.0;
        return;
    }
    out[0] = in[0] * q;

    const __m256d vq = _mm256_set1_pd(q);
    const __m256d vp = _mm256_set1_pd(p);
    std::size_t k = 1;
    for (; k + 4 <= n; k += 4) {
        const __m256d cur = _mm256_loadu_pd(in + k);
        const __m256d prev = _mm256_loadu_pd(in + k - 1);
        const __m256d lhs = _mm256_mul_pd(cur, vq);
        const __m256d rhs = _mm256_mul_pd(prev, vp);
        _mm256_storeu_pd(out + k, _mm256_add_pd(lhs, rhs));
    }
    for (; k < n; ++k) {
        out[k] = in[k] * q + in[k - 1] * p;
    }
    out[n] = in[n - 1] * p;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d vx = _mm256_loadu_pd(x + k);
        const __m256d vy = _mm256_loadu_pd(y + k);
        _mm256_storeu_pd(y + k, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; k < n; ++k) {
        y[k] = y[k] + a * x[k];
    }
}

}  // namespace bcj::kernels::detail
