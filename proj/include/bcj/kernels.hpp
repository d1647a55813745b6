#pragma once
// Data-parallel inner loops with a scalar reference and SIMD variants
// selected once at runtime. Every variant performs the same multiply and
// add sequence per element (no fused multiply-add), so results are
// bit-identical to the scalar reference.

#include <span>
#include <string_view>

namespace bcj::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

// True when this binary carries the variant and the CPU can run it.
bool isa_available(Isa isa) noexcept;

// The variant used by the dispatching entry points below. Defaults to the
// widest available ISA; BCJ_KERNELS=scalar in the environment pins the
// reference path.
Isa active_isa() noexcept;

// Pins the dispatching entry points to `isa`. Returns false (and leaves the
// selection unchanged) when the ISA is unavailable.
bool select_isa(Isa isa) noexcept;

// One Poisson-binomial convolution step: given the pmf `in` of a count over
// [0, in.size()), writes the pmf of (count + Bernoulli(p)) into `out`, which
// must hold in.size() + 1 entries:
//   out[k] = in[k] * (1 - p) + in[k - 1] * p,  with in[-1] = in[n] = 0.
void bernoulli_convolve(std::span<const double> in, double p, std::span<double> out);

// y[k] += a * x[k]
void axpy(double a, std::span<const double> x, std::span<double> y);

// Explicit-ISA entry points, used by the equivalence tests. Calling one for
// an unavailable ISA is undefined.
void bernoulli_convolve(Isa isa, std::span<const double> in, double p, std::span<double> out);
void axpy(Isa isa, double a, std::span<const double> x, std::span<double> y);

}  // namespace bcj::kernels
