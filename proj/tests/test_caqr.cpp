#include "doctest.h"
#include "oracle.hpp"

#include "filteig/caqr.hpp"
#include "filteig/dist.hpp"
#include "filteig/filter.hpp"

#include <cmath>

using namespace filteig;
using cplx = std::complex<double>;

namespace
{

struct QrRun
{
    DenseMatrix<double> q;
    QrTrace trace;
    Index info = 0;
};

// Splits x over a p-member column communicator (p x 1 grid) and runs fn on
// each member's block; returns the gathered result and member 0's trace.
template <typename F>
QrRun on_column(const DenseMatrix<double>& x, int p, F fn, Distribution dist = Distribution::block())
{
    const GridLayout layout(x.rows(), {p, 1}, dist);
    std::vector<DenseMatrix<double>> blocks(static_cast<std::size_t>(p));
    QrRun out;
    GridTopology({p, 1}).run(layout, [&](RankContext& ctx) {
        auto local = distribute<double>(x.view(), layout, ctx.row, 0, Axis::Column1D);
        QrTrace t;
        const Index info = fn(ctx.col_comm, local.view(), ctx.layout->rows, t);
        if (ctx.row == 0)
        {
            out.trace = t;
            out.info = info;
        }
        blocks[static_cast<std::size_t>(ctx.row)] = std::move(local);
    });
    out.q = gather<double>(blocks, layout, Axis::Column1D);
    return out;
}

QrRun run_caqr(const DenseMatrix<double>& x, int p, double est)
{
    return on_column(x, p, [est](Communicator& comm, MatrixView<double> v, const AxisMap& rows, QrTrace& t) {
        t = caqr<double>(comm, v, rows, est);
        return Index{0};
    });
}

QrRun run_forced(const DenseMatrix<double>& x, int p, QrVariant variant)
{
    return on_column(x, p, [variant](Communicator& comm, MatrixView<double> v, const AxisMap& rows, QrTrace& t) {
        t = caqr_forced<double>(comm, v, rows, variant);
        return Index{0};
    });
}

QrRun run_cholqr(const DenseMatrix<double>& x, int p, int degree)
{
    return on_column(x, p, [degree](Communicator& comm, MatrixView<double> v, const AxisMap&, QrTrace& t) {
        return cholesky_qr<double>(comm, v, degree, &t);
    });
}

// Largest sine of the principal angles between span(a) and span(b), both
// orthonormal: the 2-norm of b - a (a^T b).
double max_principal_sine(const DenseMatrix<double>& a, const DenseMatrix<double>& b)
{
    auto r = b;
    const auto proj = oracle::naive_product(a, false, oracle::naive_product(a, true, b, false), false);
    for (Index j = 0; j < b.cols(); ++j)
        for (Index i = 0; i < b.rows(); ++i)
            r(i, j) -= proj(i, j);
    return oracle::singular_values(r).front();
}

// ||Q Q^T x - x|| / ||x||
double span_residual(const DenseMatrix<double>& q, const DenseMatrix<double>& x)
{
    const auto proj = oracle::naive_product(q, false, oracle::naive_product(q, true, x, false), false);
    double num = 0.0, den = 0.0;
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i)
        {
            num += std::pow(proj(i, j) - x(i, j), 2);
            den += x(i, j) * x(i, j);
        }
    return std::sqrt(num / den);
}

} // namespace

TEST_CASE("variant selection thresholds")
{
    CHECK(select_variant(1.0) == QrVariant::Chol1);
    CHECK(select_variant(19.999) == QrVariant::Chol1);
    CHECK(select_variant(20.0) == QrVariant::Chol2);
    CHECK(select_variant(1e8) == QrVariant::Chol2);
    CHECK(select_variant(std::nextafter(1e8, 2e8)) == QrVariant::ShiftedChol2);
    CHECK(select_variant(std::numeric_limits<double>::max()) == QrVariant::ShiftedChol2);
    CHECK(std::string(to_string(QrVariant::Householder)) == "hhqr");
}

TEST_CASE("shift formula")
{
    const double u = std::ldexp(1.0, -53);
    const double s = cholqr_shift(100, 10, 1.0, u);
    CHECK(s == 11.0 * 1110.0 * u);
    CHECK(s == doctest::Approx(1.3556e-12).epsilon(1e-4));
}

TEST_CASE("hand examples")
{
    DenseMatrix<double> x(3, 2);
    x(0, 0) = 3;
    x(1, 1) = 4;
    const auto r = run_cholqr(x, 1, 1);
    CHECK(r.info == 0);
    CHECK(oracle::max_abs_diff(r.q, DenseMatrix<double>::identity(3, 2)) <= 1e-16);

    const auto id = DenseMatrix<double>::identity(6, 3);
    CHECK(oracle::max_abs_diff(run_cholqr(id, 2, 1).q, id) == 0.0);
    const auto hh = run_forced(id, 2, QrVariant::Householder);
    for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 6; ++i)
            CHECK(std::abs(hh.q(i, j)) == doctest::Approx(id(i, j)).epsilon(1e-15));
}

TEST_CASE("Cholesky QR at kappa = 1e3: one pass ~ u kappa^2, two passes to roundoff")
{
    const Index m = 400, n = 20;
    const auto x = oracle::synthesize_conditioned(m, n, 1e3, 3);
    const auto one = run_cholqr(x, 2, 1);
    const auto two = run_cholqr(x, 2, 2);
    CHECK(one.trace.gram_rounds == 1);
    CHECK(two.trace.gram_rounds == 2);
    CHECK(oracle::orthogonality_error(one.q) <= 1e-9);
    CHECK(oracle::orthogonality_error(two.q) <= 1e-13 * std::sqrt(double(n)));
    CHECK(span_residual(two.q, x) <= 1e-12);
}

TEST_CASE("dispatch: est 5 runs exactly one round")
{
    const auto x = oracle::synthesize_conditioned(300, 10, 2.0, 4);
    const auto r = run_caqr(x, 3, 5.0);
    CHECK(r.trace.selected == QrVariant::Chol1);
    CHECK(r.trace.used == QrVariant::Chol1);
    CHECK(r.trace.gram_rounds == 1);
    CHECK(r.trace.est_cond == 5.0);
    CHECK(oracle::orthogonality_error(r.q) <= 1e-13);
}

TEST_CASE("shifted path at kappa = 1e12 stays off the Householder fallback")
{
    const Index m = 600, n = 30;
    const auto x = oracle::synthesize_conditioned(m, n, 1e12, 5);
    const auto r = run_caqr(x, 2, 1e12);
    CHECK(r.trace.selected == QrVariant::ShiftedChol2);
    CHECK(r.trace.used == QrVariant::ShiftedChol2);
    CHECK_FALSE(r.trace.fallback);
    CHECK(r.trace.gram_rounds == 3);
    // Shift uses the global height, not the local one.
    double norm = 0.0;
    for (double v : x.span())
        norm += v * v;
    CHECK(r.trace.shift == doctest::Approx(cholqr_shift(double(m), double(n), norm, std::ldexp(1.0, -53))));
    CHECK(oracle::orthogonality_error(r.q) <= 1e-12 * std::sqrt(double(n)));
}

TEST_CASE("orthogonality ladder on a small block")
{
    const Index m = 500, n = 25;
    for (double kappa : {1e2, 1e6, 1e10, 1e14})
    {
        CAPTURE(kappa);
        const auto x = oracle::synthesize_conditioned(m, n, kappa, 7);
        if (kappa <= 1e6)
        {
            const auto c2 = run_forced(x, 2, QrVariant::Chol2);
            CHECK_FALSE(c2.trace.escalated);
            CHECK(oracle::orthogonality_error(c2.q) <= 1e-12);
        }
        const auto sh = run_forced(x, 2, QrVariant::ShiftedChol2);
        CHECK_FALSE(sh.trace.fallback);
        CHECK(oracle::orthogonality_error(sh.q) <= 1e-11);
        // Same span as Householder, to the u * kappa the data determines it.
        const auto hh = run_forced(x, 2, QrVariant::Householder);
        CHECK(oracle::orthogonality_error(hh.q) <= 1e-13);
        if (kappa <= 1e6)
            CHECK(max_principal_sine(sh.q, hh.q) <= 1e-13 + 10.0 * std::ldexp(1.0, -53) * kappa);
    }
}

TEST_CASE("failures: pivot reported, plain Cholesky escalates, rank deficiency falls back")
{
    auto x = oracle::gaussian(50, 4, 9);
    for (Index i = 0; i < 50; ++i)
        x(i, 3) = x(i, 1); // duplicate column
    const auto raw = run_cholqr(x, 2, 1);
    CHECK(raw.info > 0);

    const auto esc = run_forced(x, 2, QrVariant::Chol1);
    CHECK(esc.trace.escalated);
    CHECK(oracle::orthogonality_error(esc.q) <= 1e-12);

    const auto hh = run_forced(x, 2, QrVariant::Householder);
    CHECK(hh.trace.used == QrVariant::Householder);
    CHECK(oracle::orthogonality_error(hh.q) <= 1e-13);
}

TEST_CASE("Householder fallback matches the Cholesky span on a well-conditioned block")
{
    const auto x = oracle::synthesize_conditioned(120, 8, 10.0, 11);
    const auto hh = run_forced(x, 3, QrVariant::Householder);
    const auto ch = run_forced(x, 3, QrVariant::Chol2);
    CHECK(max_principal_sine(hh.q, ch.q) <= 1e-12);
}

TEST_CASE("grid invariance of the dispatch result, block and block-cyclic rows")
{
    // Moderate kappa: Q's sensitivity to the Gram summation order grows with it.
    const auto x = oracle::synthesize_conditioned(240, 12, 1e2, 13);
    const auto one = run_caqr(x, 1, 1e2);
    const auto two = run_caqr(x, 2, 1e2);
    const auto four = on_column(
        x, 4,
        [](Communicator& comm, MatrixView<double> v, const AxisMap& rows, QrTrace& t) {
            t = caqr<double>(comm, v, rows, 1e2);
            return Index{0};
        },
        Distribution::block_cyclic(7, 7));
    CHECK(one.trace.used == QrVariant::Chol2);
    CHECK(oracle::max_abs_diff(one.q, two.q) <= 1e-13);
    CHECK(oracle::max_abs_diff(one.q, four.q) <= 1e-13);
}

TEST_CASE("complex blocks")
{
    const Index m = 90, n = 6;
    const auto x = oracle::gaussian_complex(m, n, 15);
    const GridLayout layout(m, {3, 1}, Distribution::block());
    std::vector<DenseMatrix<cplx>> blocks(3);
    GridTopology({3, 1}).run(layout, [&](RankContext& ctx) {
        auto local = distribute<cplx>(x.view(), layout, ctx.row, 0, Axis::Column1D);
        caqr<cplx>(ctx.col_comm, local.view(), ctx.layout->rows, 1e9);
        blocks[static_cast<std::size_t>(ctx.row)] = std::move(local);
    });
    const auto q = gather<cplx>(blocks, layout, Axis::Column1D);
    CHECK(oracle::orthogonality_error(q) <= 1e-13);
}

TEST_CASE("argument checks")
{
    const auto x = oracle::gaussian(10, 3, 1);
    CHECK_THROWS_AS(run_caqr(x, 1, 0.5), ConfigError);
    CHECK_THROWS_AS(run_cholqr(x, 1, 0), ConfigError);
    const auto wide = oracle::gaussian(3, 4, 1);
    CHECK_THROWS_AS(run_caqr(wide, 1, 2.0), DimensionError);
}

TEST_CASE("condition estimate")
{
    const double c = 0.0, e = 1.0;
    SUBCASE("inside the damped interval the estimate is 1")
    {
        const std::vector<double> ritz{-0.5, 0.2, 0.9};
        const std::vector<int> degs{10, 20, 36};
        CHECK(cond_est(ritz, c, e, degs, 0) == 1.0);
    }
    SUBCASE("t = t' = -3, d = 2 gives (3 + 2 sqrt 2)^2")
    {
        const std::vector<double> ritz{-3.0, 0.0};
        const std::vector<int> degs{2, 2};
        const double rho = 3.0 + 2.0 * std::sqrt(2.0);
        CHECK(cond_est(ritz, c, e, degs, 0) == doctest::Approx(rho * rho).epsilon(1e-14));
        CHECK(cond_est(ritz, c, e, degs, 0) == doctest::Approx(33.97).epsilon(1e-3));
    }
    SUBCASE("uniform degrees ignore rho'")
    {
        const std::vector<double> ritz{-5.0, -2.0, 0.5};
        const std::vector<int> degs{8, 8, 8};
        CHECK(cond_est(ritz, c, e, degs, 1) == doctest::Approx(std::pow(growth_factor(-2.0), 8)).epsilon(1e-14));
    }
    SUBCASE("mixed degrees: rho^d rho'^(dM - d) with t' at the lowest Ritz value")
    {
        const std::vector<double> ritz{-4.0, -1.5, -2.5, 0.3};
        const std::vector<int> degs{2, 4, 6, 10};
        const double want = std::pow(growth_factor(-1.5), 4) * std::pow(growth_factor(-4.0), 10 - 4);
        CHECK(cond_est(ritz, c, e, degs, 1) == doctest::Approx(want).epsilon(1e-14));
    }
    SUBCASE("errors")
    {
        const std::vector<double> ritz{-1.0};
        const std::vector<int> degs{2};
        CHECK_THROWS_AS(cond_est(ritz, c, 0.0, degs, 0), ConfigError);
        CHECK_THROWS_AS(cond_est(ritz, c, 1.0, degs, 1), DimensionError);
    }
}
