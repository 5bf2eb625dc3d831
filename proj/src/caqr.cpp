#include "filteig/caqr.hpp"

#include "filteig/filter.hpp"
#include "filteig/kernels.hpp"

#include <cmath>
#include <limits>

namespace filteig
{

const char* to_string(QrVariant v) noexcept
{
    switch (v)
    {
    case QrVariant::Chol1:
        return "chol1";
    case QrVariant::Chol2:
        return "chol2";
    case QrVariant::ShiftedChol2:
        return "shifted";
    case QrVariant::Householder:
        return "hhqr";
    }
    return "?";
}

QrVariant select_variant(double est_cond)
{
    if (est_cond > kShiftThreshold)
        return QrVariant::ShiftedChol2;
    if (est_cond < kChol1Threshold)
        return QrVariant::Chol1;
    return QrVariant::Chol2;
}

double cholqr_shift(double m, double n, double norm, double u)
{
    return 11.0 * (m * n + n * (n + 1.0)) * u * norm;
}

namespace
{

template <typename T>
DenseMatrix<T> gram(Communicator& comm, ConstMatrixView<T> x)
{
    DenseMatrix<T> g = kernels::herk_gram<T>(x);
    comm.allreduce_sum(g.span());
    return g;
}

template <typename T>
void require_layout(MatrixView<T> x, Communicator& comm, const AxisMap& rows)
{
    if (x.cols > 1 && x.ld != x.rows)
        throw DimensionError("caqr: block must be contiguous");
    if (rows.parts() != comm.size() || x.rows != rows.local_size(comm.rank()))
        throw DimensionError("caqr: block does not match the row map");
    if (x.cols > rows.extent())
        throw DimensionError("caqr: more columns than global rows");
}

} // namespace

template <typename T>
Index cholesky_qr(Communicator& comm, MatrixView<T> x, int degree, QrTrace* trace)
{
    if (degree < 1)
        throw ConfigError("cholesky_qr: degree must be positive");
    for (int r = 0; r < degree; ++r)
    {
        if (trace)
            ++trace->gram_rounds;
        DenseMatrix<T> g = gram<T>(comm, x);
        if (const Index info = kernels::potrf<T>(g.view()); info != 0)
            return info;
        kernels::trsm_right<T>(x, g.view());
    }
    return 0;
}

template <typename T>
void householder_fallback(Communicator& comm, MatrixView<T> x, const AxisMap& rows)
{
    const Index n = x.cols;
    const Index m = rows.extent();
    // Gather to member 0 (every member takes part in the broadcasts).
    DenseMatrix<T> full(comm.rank() == 0 ? m : 0, n);
    DenseMatrix<T> piece;
    for (int k = 0; k < comm.size(); ++k)
    {
        piece = k == comm.rank() ? DenseMatrix<T>::from(x) : DenseMatrix<T>(rows.local_size(k), n);
        comm.bcast(piece.span(), k);
        if (comm.rank() == 0)
        {
            const auto g = rows.globals(k);
            for (Index j = 0; j < n; ++j)
                for (Index l = 0; l < static_cast<Index>(g.size()); ++l)
                    full(g[l], j) = piece(l, j);
        }
    }
    DenseMatrix<T> q(m, n);
    if (comm.rank() == 0)
        q = kernels::householder_qr<T>(full.view());
    comm.bcast(q.span(), 0);
    const auto mine = rows.globals(comm.rank());
    for (Index j = 0; j < n; ++j)
        for (Index l = 0; l < static_cast<Index>(mine.size()); ++l)
            x(l, j) = q(mine[l], j);
}

template <typename T>
void shifted_cholesky_qr2(Communicator& comm, MatrixView<T> x, const AxisMap& rows, QrTrace& trace)
{
    require_layout(x, comm, rows);
    const Index n = x.cols;
    ++trace.gram_rounds;
    DenseMatrix<T> g = gram<T>(comm, x);
    double norm = 0.0;
    for (Index j = 0; j < n; ++j)
        norm += kernels::sq_norm<T>(x.rows, x.col(j));
    comm.allreduce_sum(std::span<double>(&norm, 1));
    const double s = cholqr_shift(static_cast<double>(rows.extent()), static_cast<double>(n), norm,
                                  unit_roundoff<T>());
    trace.shift = s;
    for (Index i = 0; i < n; ++i)
        g(i, i) += T(s);
    if (kernels::potrf<T>(g.view()) == 0)
    {
        kernels::trsm_right<T>(x, g.view());
        if (cholesky_qr<T>(comm, x, 2, &trace) == 0)
        {
            trace.used = QrVariant::ShiftedChol2;
            return;
        }
    }
    trace.fallback = true;
    trace.used = QrVariant::Householder;
    householder_fallback<T>(comm, x, rows);
}

template <typename T>
QrTrace caqr_forced(Communicator& comm, MatrixView<T> x, const AxisMap& rows, QrVariant variant)
{
    require_layout(x, comm, rows);
    QrTrace trace;
    trace.selected = variant;
    trace.used = variant;
    switch (variant)
    {
    case QrVariant::Householder:
        householder_fallback<T>(comm, x, rows);
        break;
    case QrVariant::ShiftedChol2:
        shifted_cholesky_qr2<T>(comm, x, rows, trace);
        break;
    case QrVariant::Chol1:
    case QrVariant::Chol2:
        if (cholesky_qr<T>(comm, x, variant == QrVariant::Chol1 ? 1 : 2, &trace) != 0)
        {
            trace.escalated = true;
            shifted_cholesky_qr2<T>(comm, x, rows, trace);
        }
        break;
    }
    return trace;
}

template <typename T>
QrTrace caqr(Communicator& comm, MatrixView<T> x, const AxisMap& rows, double est_cond)
{
    if (!(est_cond >= 1.0))
        throw ConfigError("caqr: condition estimate must be at least 1");
    QrTrace t = caqr_forced<T>(comm, x, rows, select_variant(est_cond));
    t.est_cond = est_cond;
    return t;
}

double cond_est(std::span<const double> ritz, double c, double e, std::span<const int> degs, Index locked)
{
    if (!(e > 0.0))
        throw ConfigError("cond_est: half-width e must be positive");
    const Index n = static_cast<Index>(ritz.size());
    if (static_cast<Index>(degs.size()) != n || locked < 0 || locked >= n)
        throw DimensionError("cond_est: inconsistent lengths or locked count");
    double lo = ritz[0];
    for (double r : ritz)
        lo = std::min(lo, r);
    const double rho = growth_factor((ritz[locked] - c) / e);
    const double rho1 = growth_factor((lo - c) / e);
    const int d = degs[locked];
    int d_max = d;
    for (Index j = locked; j < n; ++j)
        d_max = std::max(d_max, degs[j]);
    const double est = std::pow(rho, d) * std::pow(rho1, d_max - d);
    return std::max(1.0, std::isfinite(est) ? est : std::numeric_limits<double>::max());
}

#define FILTEIG_INSTANTIATE(T)                                                                                         \
    template Index cholesky_qr<T>(Communicator&, MatrixView<T>, int, QrTrace*);                                        \
    template void shifted_cholesky_qr2<T>(Communicator&, MatrixView<T>, const AxisMap&, QrTrace&);                     \
    template void householder_fallback<T>(Communicator&, MatrixView<T>, const AxisMap&);                               \
    template QrTrace caqr<T>(Communicator&, MatrixView<T>, const AxisMap&, double);                                    \
    template QrTrace caqr_forced<T>(Communicator&, MatrixView<T>, const AxisMap&, QrVariant);

FILTEIG_INSTANTIATE(double)
FILTEIG_INSTANTIATE(std::complex<double>)

} // namespace filteig
