#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "bcj/kernels.hpp"
#include "kernels_impl.hpp"

namespace bcj::kernels {
namespace {

struct KernelTable {
    detail::ConvolveFn convolve;
    detail::AxpyFn axpy;
};

KernelTable table_for(Isa isa) noexcept {
    switch (isa) {
#if defined(BCJ_HAVE_AVX2_KERNELS)
        case Isa::Avx2:
            return {detail::bernoulli_convolve_avx2, detail::axpy_avx2};
#endif
#if defined(BCJ_HAVE_NEON_KERNELS)
        case Isa::Neon:
            return {detail::bernoulli_convolve_neon, detail::axpy_neon};
#endif
        default:
            return {detail::bernoulli_convolve_scalar, detail::axpy_scalar};
    }
}

Isa detect_default() noexcept {
    if (const char* env = std::getenv("BCJ_KERNELS")) {
        const std::string_view v(env);
        if (v == "scalar") return Isa::Scalar;
        if (v == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
        if (v == "neon" && isa_available(Isa::Neon)) return Isa::Neon;
    }
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

std::atomic<Isa>& active() noexcept {
    static std::atomic<Isa> isa{detect_default()};
    return isa;
}

void check_convolve_sizes(std::span<const double> in, std::span<double> out) {
    if (out.size() != in.size() + 1) {
        throw std::invalid_argument("bernoulli_convolve: output must hold input size + 1 entries");
    }
}

void check_axpy_sizes(std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("axpy: size mismatch");
    }
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
        case Isa::Scalar: break;
    }
    return "scalar";
}

bool isa_available(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(BCJ_HAVE_AVX2_KERNELS)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(BCJ_HAVE_NEON_KERNELS)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

bool select_isa(Isa isa) noexcept {
    if (!isa_available(isa)) return false;
    active().store(isa, std::memory_order_relaxed);
    return true;
}

void bernoulli_convolve(Isa isa, std::span<const double> in, double p, std::span<double> out) {
    check_convolve_sizes(in, out);
    table_for(isa).convolve(in.data(), in.size(), p, out.data());
}

void axpy(Isa isa, double a, std::span<const double> x, std::span<double> y) {
    check_axpy_sizes(x, y);
    table_for(isa).axpy(a, x.data(), y.data(), x.size());
}

void bernoulli_convolve(std::span<const double> in, double p, std::span<double> out) {
    bernoulli_convolve(active_isa(), in, p, out);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    axpy(active_isa(), a, x, y);
}

}  // namespace bcj::kernels
