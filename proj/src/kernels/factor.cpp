#include "filteig/kernels.hpp"

#include <cmath>
#include <complex>

namespace filteig::kernels
{

template <typename T>
Index potrf(MatrixView<T> A)
{
    if (A.rows != A.cols)
        throw DimensionError("potrf: matrix must be square");
    const Index n = A.rows;
    for (Index j = 0; j < n; ++j)
    {
        // Row j of R from the already factored columns above it.
        const Base<T> d = real_part(A(j, j)) - sq_norm<T>(j, A.col(j));
        if (!(d > Base<T>(0)) || !std::isfinite(d))
            return j + 1;
        const Base<T> rjj = std::sqrt(d);
        A(j, j) = T(rjj);
        for (Index l = j + 1; l < n; ++l)
            A(j, l) = (A(j, l) - dot<T>(j, A.col(j), A.col(l))) / rjj;
    }
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i)
            A(i, j) = T(0);
    return 0;
}

template <typename T>
void trsm_right(MatrixView<T> X, ConstMatrixView<T> R)
{
    const Index n = R.rows;
    if (R.cols != n || X.cols != n)
        throw DimensionError("trsm_right: R must be n x n with n = cols(X)");
    for (Index j = 0; j < n; ++j)
        if (R(j, j) == T(0))
            throw KernelError("trsm_right: zero diagonal entry in R at column " + std::to_string(j));

    constexpr Index nb = 32;
    for (Index j0 = 0; j0 < n; j0 += nb)
    {
        const Index jb = std::min(nb, n - j0);
        MatrixView<T> XJ = X.columns(j0, jb);
        if (j0 > 0)
            gemm<T>(T(-1), X.columns(0, j0), Op::None, R.block(0, j0, j0, jb), Op::None, T(1), XJ);
        for (Index j = 0; j < jb; ++j)
        {
            T* xj = XJ.col(j);
            for (Index k = 0; k < j; ++k)
            {
                const T r = R(j0 + k, j0 + j);
                if (r != T(0))
                    axpy<T>(X.rows, -r, XJ.col(k), xj);
            }
            scal<T>(X.rows, T(1) / R(j0 + j, j0 + j), xj);
        }
    }
}

namespace
{

// Householder reflector H = I - tau v v^H with v(0) = 1 such that
// H^H [alpha; x] = [beta; 0] and beta real. x is overwritten by v(1:).
template <typename T>
struct Reflector
{
    T tau;
    Base<T> beta;
};

template <typename T>
Reflector<T> make_reflector(T& alpha, Index len, T* x)
{
    using R = Base<T>;
    const R xnorm = std::sqrt(sq_norm<T>(len, x));
    R alpha_im = 0;
    if constexpr (is_complex_v<T>)
        alpha_im = alpha.imag();
    if (xnorm == R(0) && alpha_im == R(0))
        return {T(0), real_part(alpha)};

    const R alpha_re = real_part(alpha);
    R beta = std::sqrt(alpha_re * alpha_re + alpha_im * alpha_im + xnorm * xnorm);
    if (alpha_re >= R(0))
        beta = -beta;
    const T tau = (T(beta) - alpha) / T(beta);
    const T scale = T(1) / (alpha - T(beta));
    scal<T>(len, scale, x);
    alpha = T(beta);
    return {tau, beta};
}

// y <- (I - tau v v^H) y for v = [1; v_tail] of length 1 + len.
template <typename T>
void apply_reflector(T tau, Index len, const T* v_tail, T* y)
{
    if (tau == T(0))
        return;
    const T w = y[0] + dot<T>(len, v_tail, y + 1);
    const T f = tau * w;
    y[0] -= f;
    axpy<T>(len, -f, v_tail, y + 1);
}

} // namespace

template <typename T>
DenseMatrix<T> householder_qr(ConstMatrixView<T> X)
{
    const Index m = X.rows;
    const Index n = X.cols;
    if (m < n)
        throw DimensionError("householder_qr: requires rows >= cols");

    DenseMatrix<T> W = DenseMatrix<T>::from(X);
    std::vector<T> taus(static_cast<std::size_t>(n));
    std::vector<Base<T>> diag(static_cast<std::size_t>(n));

    for (Index k = 0; k < n; ++k)
    {
        T* colk = W.col(k) + k;
        const Index len = m - k - 1;
        auto refl = make_reflector<T>(colk[0], len, colk + 1);
        taus[k] = refl.tau;
        diag[k] = refl.beta;
        // Trailing columns get H^H = I - conj(tau) v v^H.
        const T ctau = conj(refl.tau);
        for (Index c = k + 1; c < n; ++c)
            apply_reflector<T>(ctau, len, colk + 1, W.col(c) + k);
    }

    DenseMatrix<T> Q = DenseMatrix<T>::identity(m, n);
    for (Index k = n - 1; k >= 0; --k)
    {
        const T* vtail = W.col(k) + k + 1;
        const Index len = m - k - 1;
        for (Index c = k; c < n; ++c)
            apply_reflector<T>(taus[k], len, vtail, Q.col(c) + k);
    }

    // Positive diagonal of R.
    for (Index k = 0; k < n; ++k)
        if (diag[k] < Base<T>(0))
            scal<T>(m, T(-1), Q.col(k));
    return Q;
}

template Index potrf<double>(MatrixView<double>);
template Index potrf<std::complex<double>>(MatrixView<std::complex<double>>);
template void trsm_right<double>(MatrixView<double>, ConstMatrixView<double>);
template void trsm_right<std::complex<double>>(MatrixView<std::complex<double>>, ConstMatrixView<std::complex<double>>);
template DenseMatrix<double> householder_qr<double>(ConstMatrixView<double>);
template DenseMatrix<std::complex<double>> householder_qr<std::complex<double>>(ConstMatrixView<std::complex<double>>);

} // namespace filteig::kernels
