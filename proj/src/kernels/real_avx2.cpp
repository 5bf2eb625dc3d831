// AVX2+FMA variants of the dispatched real kernels. This file is compiled with
// -mavx2 -mfma and only ever entered after the CPUID check in simd_dispatch.

#include "filteig/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace filteig::simd::detail
{

namespace
{

static_assert(kGemmMR == 8 && kGemmNR == 6, "AVX2 tile is hard-wired to 8x6");

void gemm_tile_avx2(Index kc, const double* a, const double* b, double* c, Index ldc, double alpha)
{
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    __m256d c40 = _mm256_setzero_pd(), c41 = _mm256_setzero_pd();
    __m256d c50 = _mm256_setzero_pd(), c51 = _mm256_setzero_pd();

    for (Index p = 0; p < kc; ++p)
    {
        const __m256d a0 = _mm256_loadu_pd(a);
        const __m256d a1 = _mm256_loadu_pd(a + 4);
        __m256d bj;
        bj = _mm256_broadcast_sd(b + 0);
        c00 = _mm256_fmadd_pd(a0, bj, c00);
        c01 = _mm256_fmadd_pd(a1, bj, c01);
        bj = _mm256_broadcast_sd(b + 1);
        c10 = _mm256_fmadd_pd(a0, bj, c10);
        c11 = _mm256_fmadd_pd(a1, bj, c11);
        bj = _mm256_broadcast_sd(b + 2);
        c20 = _mm256_fmadd_pd(a0, bj, c20);
        c21 = _mm256_fmadd_pd(a1, bj, c21);
        bj = _mm256_broadcast_sd(b + 3);
        c30 = _mm256_fmadd_pd(a0, bj, c30);
        c31 = _mm256_fmadd_pd(a1, bj, c31);
        bj = _mm256_broadcast_sd(b + 4);
        c40 = _mm256_fmadd_pd(a0, bj, c40);
        c41 = _mm256_fmadd_pd(a1, bj, c41);
        bj = _mm256_broadcast_sd(b + 5);
        c50 = _mm256_fmadd_pd(a0, bj, c50);
        c51 = _mm256_fmadd_pd(a1, bj, c51);
        a += kGemmMR;
        b += kGemmNR;
    }

    const __m256d va = _mm256_set1_pd(alpha);
    auto store = [&](double* col, __m256d lo, __m256d hi) {
        _mm256_storeu_pd(col, _mm256_fmadd_pd(va, lo, _mm256_loadu_pd(col)));
        _mm256_storeu_pd(col + 4, _mm256_fmadd_pd(va, hi, _mm256_loadu_pd(col + 4)));
    };
    store(c + 0 * ldc, c00, c01);
    store(c + 1 * ldc, c10, c11);
    store(c + 2 * ldc, c20, c21);
    store(c + 3 * ldc, c30, c31);
    store(c + 4 * ldc, c40, c41);
    store(c + 5 * ldc, c50, c51);
}

double hsum(__m256d v)
{
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(Index n, const double* x, const double* y)
{
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    Index i = 0;
    for (; i + 16 <= n; i += 16)
    {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
        s2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), s2);
        s3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), s3);
    }
    for (; i + 4 <= n; i += 4)
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
    for (; i < n; ++i)
        s += x[i] * y[i];
    return s;
}

void axpy_avx2(Index n, double alpha, const double* x, double* y)
{
    const __m256d va = _mm256_set1_pd(alpha);
    Index i = 0;
    for (; i + 8 <= n; i += 8)
    {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

double sq_norm_avx2(Index n, const double* x)
{
    return dot_avx2(n, x, x);
}

} // namespace

const RealKernelTable avx2_table{gemm_tile_avx2, dot_avx2, axpy_avx2, sq_norm_avx2};

} // namespace filteig::simd::detail

#endif
