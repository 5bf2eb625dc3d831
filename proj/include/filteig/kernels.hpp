#pragma once

// Dense linear-algebra primitives on column-major views.
//
// All routines are pure with respect to their arguments and hold no shared
// mutable state apart from thread-local packing scratch, so ranks may call
// them concurrently on disjoint buffers. Real double-precision inner loops go
// through the runtime-selected SIMD table; complex routines are built on the
// real ones.

#include "filteig/matrix.hpp"

#include <span>
#include <vector>

namespace filteig::kernels
{

enum class Op
{
    None,
    ConjTrans
};

/// C <- alpha * op(A) * op(B) + beta * C. beta == 0 overwrites C (NaNs in C are not propagated).
template <typename T>
void gemm(T alpha, ConstMatrixView<T> A, Op opA, ConstMatrixView<T> B, Op opB, T beta, MatrixView<T> C);

/// G <- X^H X, exactly Hermitian (upper triangle computed, lower mirrored, diagonal real).
template <typename T>
void herk_gram(ConstMatrixView<T> X, MatrixView<T> G);

template <typename T>
DenseMatrix<T> herk_gram(ConstMatrixView<T> X)
{
    DenseMatrix<T> G(X.cols, X.cols);
    herk_gram(X, G.view());
    return G;
}

/// In-place upper Cholesky factor R with R^H R = A; the strict lower triangle is zeroed.
/// Returns 0 on success, otherwise the 1-based index of the first non-positive pivot.
template <typename T>
Index potrf(MatrixView<T> A);

/// X <- X * R^{-1} for upper triangular R. Throws KernelError on a zero diagonal entry.
template <typename T>
void trsm_right(MatrixView<T> X, ConstMatrixView<T> R);

/// Explicit m x n orthonormal factor of X = QR (m >= n), normalised so diag(R) >= 0.
/// Rank-deficient input still yields orthonormal columns.
template <typename T>
DenseMatrix<T> householder_qr(ConstMatrixView<T> X);

template <typename T>
struct EigResult
{
    std::vector<Base<T>> values; // ascending
    DenseMatrix<T> vectors;      // column j pairs with values[j]
};

/// Eigen-decomposition of a Hermitian matrix: Householder tridiagonalisation
/// followed by implicit QL. Only the lower triangle of A is referenced.
/// Throws KernelError when QL exceeds its iteration budget.
template <typename T>
EigResult<T> heevd(ConstMatrixView<T> A);

/// Real symmetric tridiagonal eigenproblem. offdiag[i] couples i and i+1 and has
/// diag.size()-1 entries. Returns ascending values and orthonormal vectors.
EigResult<double> tridiagonal_eig(std::span<const double> diag, std::span<const double> offdiag);

// Level-1 helpers. dot conjugates its first argument.
template <typename T>
T dot(Index n, const T* x, const T* y);

template <typename T>
void axpy(Index n, T alpha, const T* x, T* y);

template <typename T>
Base<T> sq_norm(Index n, const T* x);

template <typename T>
void scal(Index n, T alpha, T* x)
{
    for (Index i = 0; i < n; ++i)
        x[i] *= alpha;
}

/// Frobenius norm of a view.
template <typename T>
Base<T> frobenius_norm(ConstMatrixView<T> A);

} // namespace filteig::kernels
