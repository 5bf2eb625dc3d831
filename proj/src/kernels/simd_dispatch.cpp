#include "filteig/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace filteig::simd
{

namespace
{

bool cpu_has_avx2() noexcept
{
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() noexcept
{
    Isa isa = detected_isa();
    if (const char* env = std::getenv("FILTEIG_ISA"))
    {
        std::string_view v(env);
        if (v == "scalar")
            isa = Isa::Scalar;
        // "avx2" is honoured only where it can run.
    }
    return isa;
}

std::atomic<Isa>& active_slot() noexcept
{
    static std::atomic<Isa> slot{initial_isa()};
    return slot;
}

} // namespace

const char* to_string(Isa isa) noexcept
{
    return isa == Isa::Avx2 ? "avx2" : "scalar";
}

Isa detected_isa() noexcept
{
    static const Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    return isa;
}

Isa active_isa() noexcept
{
    return active_slot().load(std::memory_order_relaxed);
}

void force_isa(std::optional<Isa> isa)
{
    if (!isa)
    {
        active_slot().store(initial_isa());
        return;
    }
    if (*isa == Isa::Avx2 && detected_isa() != Isa::Avx2)
        throw ConfigError("AVX2+FMA kernels requested but not supported by this CPU");
    active_slot().store(*isa);
}

const RealKernelTable& kernels_for(Isa isa)
{
#if defined(__x86_64__) || defined(_M_X64)
    if (isa == Isa::Avx2)
    {
        if (detected_isa() != Isa::Avx2)
            throw ConfigError("AVX2+FMA kernels not supported by this CPU");
        return detail::avx2_table;
    }
#else
    if (isa == Isa::Avx2)
        throw ConfigError("AVX2 kernels not built for this architecture");
#endif
    return detail::scalar_table;
}

const RealKernelTable& active_kernels() noexcept
{
#if defined(__x86_64__) || defined(_M_X64)
    if (active_isa() == Isa::Avx2)
        return detail::avx2_table;
#endif
    return detail::scalar_table;
}

} // namespace filteig::simd
