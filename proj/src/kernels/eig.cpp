#include "filteig/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace filteig::kernels
{

namespace
{

constexpr int kMaxSweepsPerEigenvalue = 50;

// Implicit QL with Wilkinson-type shift on (d, e), e[i] coupling i and i+1 and
// e[n-1] = 0 on entry. Rotations are accumulated into the columns of Z.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, DenseMatrix<double>& Z)
{
    const Index n = static_cast<Index>(d.size());
    const double eps = std::numeric_limits<double>::epsilon();
    for (Index l = 0; l < n; ++l)
    {
        int sweeps = 0;
        Index m;
        do
        {
            for (m = l; m < n - 1; ++m)
            {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd)
                    break;
            }
            if (m == l)
                break;
            if (++sweeps > kMaxSweepsPerEigenvalue)
                throw KernelError("heevd: tridiagonal QL did not converge");

            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            Index i = m - 1;
            bool deflated = false;
            for (; i >= l; --i)
            {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0)
                {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                double* zi = Z.col(i);
                double* zi1 = Z.col(i + 1);
                for (Index k = 0; k < Z.rows(); ++k)
                {
                    const double t = zi1[k];
                    zi1[k] = s * zi[k] + c * t;
                    zi[k] = c * zi[k] - s * t;
                }
            }
            if (deflated)
                continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }
}

template <typename T>
std::vector<Index> ascending_order(const std::vector<Base<T>>& values)
{
    std::vector<Index> order(values.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] < values[b]; });
    return order;
}

} // namespace

EigResult<double> tridiagonal_eig(std::span<const double> diag, std::span<const double> offdiag)
{
    const Index n = static_cast<Index>(diag.size());
    if (n > 0 && static_cast<Index>(offdiag.size()) != n - 1)
        throw DimensionError("tridiagonal_eig: offdiag must have n-1 entries");
    std::vector<double> d(diag.begin(), diag.end());
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    std::copy(offdiag.begin(), offdiag.end(), e.begin());
    DenseMatrix<double> Z = DenseMatrix<double>::identity(n);
    tridiagonal_ql(d, e, Z);

    const auto order = ascending_order<double>(d);
    EigResult<double> out{std::vector<double>(static_cast<std::size_t>(n)), DenseMatrix<double>(n, n)};
    for (Index j = 0; j < n; ++j)
    {
        out.values[j] = d[order[j]];
        std::copy_n(Z.col(order[j]), n, out.vectors.col(j));
    }
    return out;
}

template <typename T>
EigResult<T> heevd(ConstMatrixView<T> A)
{
    using R = Base<T>;
    if (A.rows != A.cols)
        throw DimensionError("heevd: matrix must be square");
    const Index n = A.rows;
    EigResult<T> out;
    if (n == 0)
        return out;

    // Full Hermitian working copy built from the lower triangle.
    DenseMatrix<T> W(n, n);
    for (Index j = 0; j < n; ++j)
    {
        W(j, j) = T(real_part(A(j, j)));
        for (Index i = j + 1; i < n; ++i)
        {
            W(i, j) = A(i, j);
            W(j, i) = conj(A(i, j));
        }
    }

    // Tridiagonalise: W <- H_k^H W H_k, reflector k acting on rows/cols k+1..n-1.
    std::vector<T> taus(static_cast<std::size_t>(std::max<Index>(n - 1, 0)), T(0));
    std::vector<double> d(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(std::max<Index>(n - 1, 0)));
    std::vector<T> p(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (Index k = 0; k + 1 < n; ++k)
    {
        const Index len = n - k - 1; // length of the reflected vector
        T* x = W.col(k) + k + 1;
        // make_reflector semantics inlined: x(0) is alpha, x(1:) the tail.
        const R xnorm = std::sqrt(sq_norm<T>(len - 1, x + 1));
        R alpha_im = 0;
        if constexpr (is_complex_v<T>)
            alpha_im = x[0].imag();
        T tau(0);
        R beta = real_part(x[0]);
        if (!(xnorm == R(0) && alpha_im == R(0)))
        {
            const R ar = real_part(x[0]);
            beta = std::sqrt(ar * ar + alpha_im * alpha_im + xnorm * xnorm);
            if (ar >= R(0))
                beta = -beta;
            tau = (T(beta) - x[0]) / T(beta);
            scal<T>(len - 1, T(1) / (x[0] - T(beta)), x + 1);
        }
        taus[k] = tau;
        e[k] = static_cast<double>(beta);
        x[0] = T(1); // v(0) while the update runs

        if (tau != T(0))
        {
            // Trailing block A22 = W(k+1:, k+1:), v = x.
            MatrixView<T> A22 = W.view().block(k + 1, k + 1, len, len);
            for (Index i = 0; i < len; ++i)
                p[i] = T(0);
            // p = A22 v (A22 is full Hermitian here).
            for (Index j = 0; j < len; ++j)
                axpy<T>(len, x[j], A22.col(j), p.data());
            const R vp = real_part(dot<T>(len, x, p.data()));
            const R tau2 = abs2(tau);
            for (Index i = 0; i < len; ++i)
                w[i] = tau * p[i] - T(tau2 * vp / R(2)) * x[i];
            // A22 -= w v^H + v w^H
            for (Index j = 0; j < len; ++j)
            {
                const T cvj = conj(x[j]);
                const T cwj = conj(w[j]);
                T* col = A22.col(j);
                for (Index i = 0; i < len; ++i)
                    col[i] -= w[i] * cvj + x[i] * cwj;
            }
        }
    }
    for (Index k = 0; k < n; ++k)
        d[k] = static_cast<double>(real_part(W(k, k)));

    // Q = H_0 H_1 ... H_{n-2}, built backwards.
    DenseMatrix<T> Q = DenseMatrix<T>::identity(n);
    for (Index k = n - 2; k >= 0; --k)
    {
        const T tau = taus[k];
        if (tau == T(0))
            continue;
        const Index len = n - k - 1;
        const T* v = W.col(k) + k + 1;
        for (Index c = k + 1; c < n; ++c)
        {
            T* y = Q.col(c) + k + 1;
            const T f = tau * dot<T>(len, v, y);
            axpy<T>(len, -f, v, y);
        }
    }

    std::vector<double> ework(static_cast<std::size_t>(n), 0.0);
    std::copy(e.begin(), e.end(), ework.begin());
    DenseMatrix<double> Z = DenseMatrix<double>::identity(n);
    tridiagonal_ql(d, ework, Z);

    DenseMatrix<T> ZT(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            ZT(i, j) = T(Z(i, j));
    DenseMatrix<T> Y(n, n);
    gemm<T>(T(1), Q.cview(), Op::None, ZT.cview(), Op::None, T(0), Y.view());

    std::vector<R> vals(d.begin(), d.end());
    const auto order = ascending_order<T>(vals);
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors = DenseMatrix<T>(n, n);
    for (Index j = 0; j < n; ++j)
    {
        out.values[j] = vals[order[j]];
        std::copy_n(Y.col(order[j]), n, out.vectors.col(j));
    }
    return out;
}

template EigResult<double> heevd<double>(ConstMatrixView<double>);
template EigResult<std::complex<double>> heevd<std::complex<double>>(ConstMatrixView<std::complex<double>>);

} // namespace filteig::kernels
