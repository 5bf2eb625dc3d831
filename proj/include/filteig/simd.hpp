#pragma once

// Runtime-selected inner loops for the real double-precision kernels.
//
// Every entry has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant compiled in its own translation unit. The active table is picked
// once from CPUID and can be pinned with FILTEIG_ISA=scalar|avx2 or
// force_isa(), which the equivalence tests use.

#include "filteig/types.hpp"

#include <optional>

namespace filteig::simd
{

enum class Isa
{
    Scalar,
    Avx2
};

const char* to_string(Isa isa) noexcept;

/// Best ISA the running CPU supports.
Isa detected_isa() noexcept;

/// ISA used by the dispatching kernels.
Isa active_isa() noexcept;

/// Pins the active ISA; nullopt restores automatic selection.
/// Throws ConfigError when the CPU cannot run the requested ISA.
void force_isa(std::optional<Isa> isa);

// Register tile of the real GEMM micro-kernel.
inline constexpr Index kGemmMR = 8;
inline constexpr Index kGemmNR = 6;

struct RealKernelTable
{
    /// C[0:MR,0:NR] += alpha * sum_p a[p*MR + i] * b[p*NR + j] over packed panels.
    void (*gemm_tile)(Index kc, const double* a, const double* b, double* c, Index ldc, double alpha);
    double (*dot)(Index n, const double* x, const double* y);
    void (*axpy)(Index n, double alpha, const double* x, double* y);
    double (*sq_norm)(Index n, const double* x);
};

const RealKernelTable& kernels_for(Isa isa);
const RealKernelTable& active_kernels() noexcept;

namespace detail
{
extern const RealKernelTable scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
extern const RealKernelTable avx2_table;
#endif
} // namespace detail

} // namespace filteig::simd
