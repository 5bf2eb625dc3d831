#pragma once

// QR of a tall block split over a column communicator: CholeskyQR(k),
// shifted CholeskyQR2, the condition-driven choice between them and a
// gathered Householder fallback.

#include "filteig/grid.hpp"

#include <span>

namespace filteig
{

enum class QrVariant
{
    Chol1,
    Chol2,
    ShiftedChol2,
    Householder
};

const char* to_string(QrVariant v) noexcept;

/// What a QR call actually did.
struct QrTrace
{
    QrVariant selected = QrVariant::Chol1; // what the estimate asked for
    QrVariant used = QrVariant::Chol1;     // what produced the result
    int gram_rounds = 0;                   // Gram / potrf / trsm rounds attempted
    bool fallback = false;                 // the Householder path ran
    bool escalated = false;                // a plain CholeskyQR failed and the shifted path took over
    double shift = 0.0;                    // shift used on the shifted path
    double est_cond = 1.0;
};

inline constexpr double kChol1Threshold = 20.0;
inline constexpr double kShiftThreshold = 1e8;

/// Variant for an estimated condition number (est >= 1).
QrVariant select_variant(double est_cond);

/// s = 11 (m n + n (n + 1)) u norm, with norm the squared Frobenius norm of X.
double cholqr_shift(double m, double n, double norm, double u);

/// Runs `degree` CholeskyQR rounds on the column-communicator block x.
/// Returns 0 on success or the 1-based failing pivot of the first failing round
/// (x is then left partially updated).
template <typename T>
Index cholesky_qr(Communicator& comm, MatrixView<T> x, int degree, QrTrace* trace = nullptr);

/// Shifted first pass followed by CholeskyQR2, falling back to Householder if the
/// shifted Cholesky fails. The shift uses the gathered height rows.extent().
template <typename T>
void shifted_cholesky_qr2(Communicator& comm, MatrixView<T> x, const AxisMap& rows, QrTrace& trace);

/// Gathers x within the communicator, factors it with Householder QR on member
/// 0 and scatters Q back. `rows` maps communicator members to global rows.
template <typename T>
void householder_fallback(Communicator& comm, MatrixView<T> x, const AxisMap& rows);

/// Dispatch on est_cond. A failed plain CholeskyQR is retried on the shifted path.
template <typename T>
QrTrace caqr(Communicator& comm, MatrixView<T> x, const AxisMap& rows, double est_cond);

/// Forces a variant regardless of the estimate (still escalating on failure).
template <typename T>
QrTrace caqr_forced(Communicator& comm, MatrixView<T> x, const AxisMap& rows, QrVariant variant);

/// Condition estimate of freshly filtered vectors from Ritz values, bounds and
/// degrees, both in column order; degs[locked..] are the active degrees.
/// t' is taken at the smallest Ritz value, t at column `locked`.
double cond_est(std::span<const double> ritz, double c, double e, std::span<const int> degs, Index locked);

} // namespace filteig
