// Portable reference implementations of the dispatched real kernels.

#include "filteig/simd.hpp"

namespace filteig::simd::detail
{

namespace
{

void gemm_tile_scalar(Index kc, const double* a, const double* b, double* c, Index ldc, double alpha)
{
    double acc[kGemmMR * kGemmNR] = {};
    for (Index p = 0; p < kc; ++p)
    {
        const double* ap = a + p * kGemmMR;
        const double* bp = b + p * kGemmNR;
        for (Index j = 0; j < kGemmNR; ++j)
            for (Index i = 0; i < kGemmMR; ++i)
                acc[i + j * kGemmMR] += ap[i] * bp[j];
    }
    for (Index j = 0; j < kGemmNR; ++j)
        for (Index i = 0; i < kGemmMR; ++i)
            c[i + j * ldc] += alpha * acc[i + j * kGemmMR];
}

double dot_scalar(Index n, const double* x, const double* y)
{
    double s = 0.0;
    for (Index i = 0; i < n; ++i)
        s += x[i] * y[i];
    return s;
}

void axpy_scalar(Index n, double alpha, const double* x, double* y)
{
    for (Index i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

double sq_norm_scalar(Index n, const double* x)
{
    double s = 0.0;
    for (Index i = 0; i < n; ++i)
        s += x[i] * x[i];
    return s;
}

} // namespace

const RealKernelTable scalar_table{gemm_tile_scalar, dot_scalar, axpy_scalar, sq_norm_scalar};

} // namespace filteig::simd::detail
