#include "filteig/kernels.hpp"
#include "filteig/simd.hpp"

#include <algorithm>
#include <complex>
#include <vector>

namespace filteig::kernels
{

namespace
{

using simd::kGemmMR;
using simd::kGemmNR;

constexpr Index kKC = 256;
constexpr Index kMC = 144;
constexpr Index kNC = 3072;

static_assert(kMC % kGemmMR == 0 && kNC % kGemmNR == 0);

// op(A)(i, p) packed into row panels of height MR: panel r holds rows r*MR..,
// laid out p-major so the micro-kernel streams it.
void pack_a(const double* A, Index lda, bool trans, Index i0, Index p0, Index mc, Index kc, double* out)
{
    for (Index ir = 0; ir < mc; ir += kGemmMR)
    {
        const Index mr = std::min(kGemmMR, mc - ir);
        double* panel = out + ir * kc;
        if (!trans)
        {
            for (Index p = 0; p < kc; ++p)
            {
                const double* src = A + (i0 + ir) + (p0 + p) * lda;
                double* dst = panel + p * kGemmMR;
                Index i = 0;
                for (; i < mr; ++i)
                    dst[i] = src[i];
                for (; i < kGemmMR; ++i)
                    dst[i] = 0.0;
            }
        }
        else
        {
            for (Index i = 0; i < kGemmMR; ++i)
            {
                if (i < mr)
                {
                    const double* src = A + p0 + (i0 + ir + i) * lda;
                    for (Index p = 0; p < kc; ++p)
                        panel[p * kGemmMR + i] = src[p];
                }
                else
                {
                    for (Index p = 0; p < kc; ++p)
                        panel[p * kGemmMR + i] = 0.0;
                }
            }
        }
    }
}

// op(B)(p, j) packed into column panels of width NR.
void pack_b(const double* B, Index ldb, bool trans, Index p0, Index j0, Index kc, Index nc, double* out)
{
    for (Index jr = 0; jr < nc; jr += kGemmNR)
    {
        const Index nr = std::min(kGemmNR, nc - jr);
        double* panel = out + jr * kc;
        if (!trans)
        {
            for (Index j = 0; j < kGemmNR; ++j)
            {
                if (j < nr)
                {
                    const double* src = B + p0 + (j0 + jr + j) * ldb;
                    for (Index p = 0; p < kc; ++p)
                        panel[p * kGemmNR + j] = src[p];
                }
                else
                {
                    for (Index p = 0; p < kc; ++p)
                        panel[p * kGemmNR + j] = 0.0;
                }
            }
        }
        else
        {
            for (Index p = 0; p < kc; ++p)
            {
                const double* src = B + (j0 + jr) + (p0 + p) * ldb;
                double* dst = panel + p * kGemmNR;
                Index j = 0;
                for (; j < nr; ++j)
                    dst[j] = src[j];
                for (; j < kGemmNR; ++j)
                    dst[j] = 0.0;
            }
        }
    }
}

void scale_c(double beta, MatrixView<double> C)
{
    if (beta == 1.0)
        return;
    for (Index j = 0; j < C.cols; ++j)
    {
        double* c = C.col(j);
        if (beta == 0.0)
            std::fill_n(c, C.rows, 0.0);
        else
            for (Index i = 0; i < C.rows; ++i)
                c[i] *= beta;
    }
}

void gemm_real(double alpha, ConstMatrixView<double> A, bool transA, ConstMatrixView<double> B, bool transB,
               double beta, MatrixView<double> C)
{
    const Index m = C.rows;
    const Index n = C.cols;
    const Index k = transA ? A.rows : A.cols;
    scale_c(beta, C);
    if (m == 0 || n == 0 || k == 0 || alpha == 0.0)
        return;

    const auto& table = simd::active_kernels();
    thread_local std::vector<double> apack;
    thread_local std::vector<double> bpack;

    const Index nc_max = std::min(kNC, ((n + kGemmNR - 1) / kGemmNR) * kGemmNR);
    const Index mc_max = std::min(kMC, ((m + kGemmMR - 1) / kGemmMR) * kGemmMR);
    bpack.resize(static_cast<std::size_t>(std::min(kKC, k) * nc_max));
    apack.resize(static_cast<std::size_t>(std::min(kKC, k) * mc_max));

    double edge[kGemmMR * kGemmNR];

    for (Index jc = 0; jc < n; jc += kNC)
    {
        const Index nc = std::min(kNC, n - jc);
        for (Index pc = 0; pc < k; pc += kKC)
        {
            const Index kc = std::min(kKC, k - pc);
            pack_b(B.data, B.ld, transB, pc, jc, kc, nc, bpack.data());
            for (Index ic = 0; ic < m; ic += kMC)
            {
                const Index mc = std::min(kMC, m - ic);
                pack_a(A.data, A.ld, transA, ic, pc, mc, kc, apack.data());
                for (Index jr = 0; jr < nc; jr += kGemmNR)
                {
                    const Index nr = std::min(kGemmNR, nc - jr);
                    const double* bp = bpack.data() + jr * kc;
                    for (Index ir = 0; ir < mc; ir += kGemmMR)
                    {
                        const Index mr = std::min(kGemmMR, mc - ir);
                        const double* ap = apack.data() + ir * kc;
                        double* c = C.data + (ic + ir) + (jc + jr) * C.ld;
                        if (mr == kGemmMR && nr == kGemmNR)
                        {
                            table.gemm_tile(kc, ap, bp, c, C.ld, alpha);
                        }
                        else
                        {
                            std::fill_n(edge, kGemmMR * kGemmNR, 0.0);
                            table.gemm_tile(kc, ap, bp, edge, kGemmMR, alpha);
                            for (Index j = 0; j < nr; ++j)
                                for (Index i = 0; i < mr; ++i)
                                    c[i + j * C.ld] += edge[i + j * kGemmMR];
                        }
                    }
                }
            }
        }
    }
}

void check_dims(Index am, Index ak, Index bk, Index bn, Index cm, Index cn)
{
    if (am != cm || bn != cn || ak != bk)
        throw DimensionError("gemm: non-conforming operand dimensions");
}

} // namespace

template <>
void gemm<double>(double alpha, ConstMatrixView<double> A, Op opA, ConstMatrixView<double> B, Op opB, double beta,
                  MatrixView<double> C)
{
    const bool ta = opA == Op::ConjTrans;
    const bool tb = opB == Op::ConjTrans;
    check_dims(ta ? A.cols : A.rows, ta ? A.rows : A.cols, tb ? B.cols : B.rows, tb ? B.rows : B.cols, C.rows,
               C.cols);
    gemm_real(alpha, A, ta, B, tb, beta, C);
}

// Complex product through four real products on split real/imaginary parts,
// so the complex path reuses the dispatched real micro-kernel.
template <>
void gemm<std::complex<double>>(std::complex<double> alpha, ConstMatrixView<std::complex<double>> A, Op opA,
                                ConstMatrixView<std::complex<double>> B, Op opB, std::complex<double> beta,
                                MatrixView<std::complex<double>> C)
{
    const bool ta = opA == Op::ConjTrans;
    const bool tb = opB == Op::ConjTrans;
    check_dims(ta ? A.cols : A.rows, ta ? A.rows : A.cols, tb ? B.cols : B.rows, tb ? B.rows : B.cols, C.rows,
               C.cols);
    const Index m = C.rows;
    const Index n = C.cols;

    auto split = [](ConstMatrixView<std::complex<double>> X, bool negate_imag) {
        std::pair<DenseMatrix<double>, DenseMatrix<double>> parts{DenseMatrix<double>(X.rows, X.cols),
                                                                  DenseMatrix<double>(X.rows, X.cols)};
        const double s = negate_imag ? -1.0 : 1.0;
        for (Index j = 0; j < X.cols; ++j)
            for (Index i = 0; i < X.rows; ++i)
            {
                parts.first(i, j) = X(i, j).real();
                parts.second(i, j) = s * X(i, j).imag();
            }
        return parts;
    };

    DenseMatrix<double> Pr(m, n), Pi(m, n);
    if (alpha != std::complex<double>(0.0) && m > 0 && n > 0)
    {
        // conj(op) is folded into the imaginary sign; transposition stays in the real gemm.
        auto [Ar, Ai] = split(A, ta);
        auto [Br, Bi] = split(B, tb);
        gemm_real(1.0, Ar.cview(), ta, Br.cview(), tb, 0.0, Pr.view());
        gemm_real(-1.0, Ai.cview(), ta, Bi.cview(), tb, 1.0, Pr.view());
        gemm_real(1.0, Ar.cview(), ta, Bi.cview(), tb, 0.0, Pi.view());
        gemm_real(1.0, Ai.cview(), ta, Br.cview(), tb, 1.0, Pi.view());
    }
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i)
        {
            const std::complex<double> p(Pr(i, j), Pi(i, j));
            std::complex<double>& c = C(i, j);
            c = (beta == std::complex<double>(0.0)) ? alpha * p : alpha * p + beta * c;
        }
}

template <typename T>
void herk_gram(ConstMatrixView<T> X, MatrixView<T> G)
{
    if (G.rows != X.cols || G.cols != X.cols)
        throw DimensionError("herk_gram: output must be n x n");
    gemm<T>(T(1), X, Op::ConjTrans, X, Op::None, T(0), G);
    const Index n = X.cols;
    for (Index j = 0; j < n; ++j)
    {
        G(j, j) = T(real_part(G(j, j)));
        for (Index i = 0; i < j; ++i)
            G(j, i) = conj(G(i, j));
    }
}

template <>
double dot<double>(Index n, const double* x, const double* y)
{
    return simd::active_kernels().dot(n, x, y);
}

template <>
std::complex<double> dot<std::complex<double>>(Index n, const std::complex<double>* x, const std::complex<double>* y)
{
    double re = 0.0, im = 0.0;
    for (Index i = 0; i < n; ++i)
    {
        const double xr = x[i].real(), xi = x[i].imag();
        const double yr = y[i].real(), yi = y[i].imag();
        re += xr * yr + xi * yi;
        im += xr * yi - xi * yr;
    }
    return {re, im};
}

template <>
void axpy<double>(Index n, double alpha, const double* x, double* y)
{
    simd::active_kernels().axpy(n, alpha, x, y);
}

template <>
void axpy<std::complex<double>>(Index n, std::complex<double> alpha, const std::complex<double>* x,
                                std::complex<double>* y)
{
    const double ar = alpha.real(), ai = alpha.imag();
    for (Index i = 0; i < n; ++i)
    {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] = {y[i].real() + ar * xr - ai * xi, y[i].imag() + ar * xi + ai * xr};
    }
}

template <>
double sq_norm<double>(Index n, const double* x)
{
    return simd::active_kernels().sq_norm(n, x);
}

template <>
double sq_norm<std::complex<double>>(Index n, const std::complex<double>* x)
{
    // Interleaved (re, im) pairs are 2n contiguous reals.
    return simd::active_kernels().sq_norm(2 * n, reinterpret_cast<const double*>(x));
}

template <typename T>
Base<T> frobenius_norm(ConstMatrixView<T> A)
{
    Base<T> s = 0;
    for (Index j = 0; j < A.cols; ++j)
        s += sq_norm<T>(A.rows, A.col(j));
    return std::sqrt(s);
}

template void herk_gram<double>(ConstMatrixView<double>, MatrixView<double>);
template void herk_gram<std::complex<double>>(ConstMatrixView<std::complex<double>>, MatrixView<std::complex<double>>);
template double frobenius_norm<double>(ConstMatrixView<double>);
template double frobenius_norm<std::complex<double>>(ConstMatrixView<std::complex<double>>);

} // namespace filteig::kernels
