#include "kernels_impl.hpp"

namespace bcj::kernels::detail {

void bernoulli_convolve_scalar(const double* in, std::size_t n, double p, double* out) {
    const double q = 1.0 - p;
    if (n == 0) {
        out[0] = 0.0;
        return;
    }
    out[0] = in[0] * q;
    for (std::size_t k = 1; k < n; ++k) {
        out[k] = in[k] * q + in[k - 1] * p;
    }
    out[n] = in[n - 1] * p;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        y[k] = y[k] + a * x[k];
    }
}

}  // namespace bcj::kernels::detail
