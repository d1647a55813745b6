// AArch64 only. Uses vmulq/vaddq rather than vfmaq to match the scalar
// reference bit for bit.
#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace bcj::kernels::detail {

void bernoulli_convolve_neon(const double* in, std::size_t n, double p, double* out) {
    const double q = 1.0 - p;
    if (n == 0) {
        out[0] = 0.0;
        return;
    }
    out[0] = in[0] * q;

    const float64x2_t vq = vdupq_n_f64(q);
    const float64x2_t vp = vdupq_n_f64(p);
    std::size_t k = 1;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t cur = vld1q_f64(in + k);
        const float64x2_t prev = vld1q_f64(in + k - 1);
        vst1q_f64(out + k, vaddq_f64(vmulq_f64(cur, vq), vmulq_f64(prev, vp)));
    }
    for (; k < n; ++k) {
        out[k] = in[k] * q + in[k - 1] * p;
    }
    out[n] = in[n - 1] * p;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        vst1q_f64(y + k, vaddq_f64(vld1q_f64(y + k), vmulq_f64(va, vld1q_f64(x + k))));
    }
    for (; k < n; ++k) {
        y[k] = y[k] + a * x[k];
    }
}

}  // namespace bcj::kernels::detail
