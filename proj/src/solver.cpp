#include "filteig/solver.hpp"

#include "filteig/dist.hpp"
#include "filteig/kernels.hpp"
#include "filteig/matgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace filteig
{

const char* to_string(QrMode m) noexcept
{
    switch (m)
    {
    case QrMode::Auto:
        return "auto";
    case QrMode::Householder:
        return "hhqr";
    case QrMode::Chol1:
        return "chol1";
    case QrMode::Chol2:
        return "chol2";
    case QrMode::Shifted:
        return "shifted";
    }
    return "?";
}

std::optional<QrMode> qr_mode_from_string(std::string_view s) noexcept
{
    for (QrMode m : {QrMode::Auto, QrMode::Householder, QrMode::Chol1, QrMode::Chol2, QrMode::Shifted})
        if (s == to_string(m))
            return m;
    return std::nullopt;
}

void SolverConfig::validate(Index n) const
{
    if (nev < 1)
        throw ConfigError("nev must be at least 1");
    if (nex < 1)
        throw ConfigError("nex must be at least 1");
    if (n_e() > n)
        throw ConfigError("nev + nex = " + std::to_string(n_e()) + " exceeds the matrix size " + std::to_string(n));
    if (!(tol > 0.0))
        throw ConfigError("tol must be positive");
    if (deg_max < 2)
        throw ConfigError("deg_max must be at least 2");
    if (deg_init < 2 || deg_init % 2 != 0 || deg_init > deg_max)
        throw ConfigError("deg must be even and lie in [2, deg_max]");
    if (max_iter < 1)
        throw ConfigError("max_iter must be at least 1");
    if (grid.p < 1 || grid.q < 1)
        throw ConfigError("grid dimensions must be positive");
    if (dist.kind == DistKind::BlockCyclic && (dist.mb < 1 || dist.nb < 1))
        throw ConfigError("block-cyclic block sizes must be positive");
    if (lanczos_steps < 2 || lanczos_runs < 1)
        throw ConfigError("lanczos needs at least 2 steps and 1 run");
}

template <typename T>
RankBuffers<T>::RankBuffers(DenseMatrix<T> h, Index n_c, Index n_e)
    : H(std::move(h)), C(H.rows(), n_e), C2(H.rows(), n_e), B(n_c, n_e), B2(n_c, n_e), A(n_e, n_e)
{
}

template <typename T>
std::size_t RankBuffers<T>::elements() const
{
    return static_cast<std::size_t>(H.size() + C.size() + C2.size() + B.size() + B2.size() + A.size());
}

template <typename T>
void permute_columns(MatrixView<T> m, std::span<const Index> perm)
{
    if (static_cast<Index>(perm.size()) != m.cols)
        throw DimensionError("permute_columns: permutation length differs from column count");
    DenseMatrix<T> tmp = DenseMatrix<T>::from(m);
    for (Index j = 0; j < m.cols; ++j)
        std::copy_n(tmp.col(perm[j]), m.rows, m.col(j));
}

std::vector<Index> locking_order(std::span<const double> res, std::span<const double> ritz, double tol, Index locked,
                                 Index& new_converged)
{
    const Index n = static_cast<Index>(res.size());
    std::vector<Index> perm(static_cast<std::size_t>(locked));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::vector<Index> conv, rest;
    for (Index j = locked; j < n; ++j)
        (res[j] <= tol ? conv : rest).push_back(j);
    std::stable_sort(conv.begin(), conv.end(), [&](Index a, Index b) { return ritz[a] < ritz[b]; });
    new_converged = static_cast<Index>(conv.size());
    perm.insert(perm.end(), conv.begin(), conv.end());
    perm.insert(perm.end(), rest.begin(), rest.end());
    return perm;
}

bool wanted_converged(std::span<const double> ritz, Index locked, Index nev)
{
    if (locked < nev)
        return false;
    std::vector<double> lk(ritz.begin(), ritz.begin() + locked);
    std::nth_element(lk.begin(), lk.begin() + (nev - 1), lk.end());
    const double top = lk[static_cast<std::size_t>(nev - 1)];
    for (std::size_t j = static_cast<std::size_t>(locked); j < ritz.size(); ++j)
        if (ritz[j] < top)
            return false;
    return true;
}

template <typename T>
std::vector<double> rayleigh_ritz(RankContext& ctx, RankBuffers<T>& buf, Index locked)
{
    const Index k = buf.C.cols() - locked;
    const auto c2 = buf.C2.columns(locked, k);
    const auto b2 = buf.B2.columns(locked, k);
    const auto b = buf.B.columns(locked, k);
    redistribute_c_to_b<T>(ctx, c2, b2);
    hemm_to_b<T>(ctx, buf.H.view(), 1.0, c2, 0.0, b);
    MatrixView<T> a(buf.A.data(), k, k, k);
    kernels::gemm<T>(T(1), b2, kernels::Op::ConjTrans, b, kernels::Op::None, T(0), a);
    ctx.row_comm.allreduce_sum(a);
    auto eig = kernels::heevd<T>(a);
    const auto c = buf.C.columns(locked, k);
    kernels::gemm<T>(T(1), c2, kernels::Op::None, eig.vectors.view(), kernels::Op::None, T(0), c);
    copy<T>(c, c2);
    return std::move(eig.values);
}

template <typename T>
std::vector<double> residuals(RankContext& ctx, RankBuffers<T>& buf, std::span<const double> ritz, Index locked,
                              double scale)
{
    const Index k = buf.C.cols() - locked;
    if (static_cast<Index>(ritz.size()) != k)
        throw DimensionError("residuals: one Ritz value per active column expected");
    const auto c2 = buf.C2.columns(locked, k);
    const auto b2 = buf.B2.columns(locked, k);
    const auto b = buf.B.columns(locked, k);
    redistribute_c_to_b<T>(ctx, c2, b2);
    hemm_to_b<T>(ctx, buf.H.view(), 1.0, c2, 0.0, b);
    std::vector<double> nrm(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j)
    {
        kernels::axpy<T>(b.rows, T(-ritz[j]), b2.col(j), b.col(j));
        nrm[j] = kernels::sq_norm<T>(b.rows, b.col(j));
    }
    ctx.row_comm.allreduce_sum(std::span<double>(nrm));
    for (auto& r : nrm)
        r = std::sqrt(r) / scale;
    return nrm;
}

namespace
{

// What each rank hands back to the controller.
template <typename T>
struct Shared
{
    SolverResult<T>* result = nullptr;
    std::vector<std::size_t> elements;
    std::vector<std::vector<double>> final_ritz;
};

template <typename T>
class RankSolver
{
  public:
    RankSolver(RankContext& ctx, ConstMatrixView<T> h, const SolverConfig& cfg, const SolverObserver<T>* obs)
        : ctx_(ctx), cfg_(cfg), obs_(obs), ne_(cfg.n_e()),
          buf_(distribute<T>(h, *ctx.layout, ctx.row, ctx.col, Axis::Full2D), ctx.n_c(), cfg.n_e())
    {
    }

    void run(Shared<T>& out)
    {
        out.elements[ctx_.rank()] = buf_.elements();
        bounds_ = lanczos_bounds<T>(ctx_, buf_.H.view(), ne_,
                                    LanczosOptions{cfg_.lanczos_steps, cfg_.lanczos_runs, cfg_.seed});
        const SpectralBounds initial = bounds_;
        scale_ = std::max(std::abs(bounds_.mu_1), std::abs(bounds_.b_sup));
        if (!(scale_ > 0.0))
            scale_ = 1.0;

        buf_.C = random_initial_vectors<T>(ctx_.n_r(), ne_, ctx_.row, cfg_.seed);
        ritz_.assign(static_cast<std::size_t>(ne_), 0.0);
        res_.assign(static_cast<std::size_t>(ne_), 1.0);
        degs_.assign(static_cast<std::size_t>(ne_), cfg_.deg_init);

        std::vector<IterationInfo> history;
        std::uint64_t matvecs = 0;
        int iter = 1;
        for (; !wanted_converged(ritz_, locked_, cfg_.nev) && iter <= cfg_.max_iter; ++iter)
        {
            try
            {
                history.push_back(iterate(iter));
                matvecs += history.back().matvecs;
            }
            catch (const KernelError& e)
            {
                throw KernelError("iteration " + std::to_string(iter) + ": " + e.what());
            }
        }

        // Report the lowest nev among the locked pairs (or among all on failure).
        const bool converged = wanted_converged(ritz_, locked_, cfg_.nev);
        std::vector<Index> pool(static_cast<std::size_t>(converged ? locked_ : ne_));
        std::iota(pool.begin(), pool.end(), Index{0});
        std::stable_sort(pool.begin(), pool.end(), [&](Index a, Index b) { return ritz_[a] < ritz_[b]; });
        pool.resize(static_cast<std::size_t>(cfg_.nev));

        const DenseMatrix<T> all = allgather_c<T>(ctx_, buf_.C2.view());
        out.final_ritz[ctx_.rank()] = ritz_;
        if (!ctx_.is_root())
            return;
        SolverResult<T>& r = *out.result;
        r.status = converged ? SolveStatus::Converged : SolveStatus::MaxIterReached;
        r.locked = locked_;
        r.initial_bounds = initial;
        r.residual_scale = scale_;
        r.eigenvectors = DenseMatrix<T>(all.rows(), cfg_.nev);
        for (std::size_t j = 0; j < pool.size(); ++j)
        {
            r.eigenvalues.push_back(ritz_[pool[j]]);
            r.residuals.push_back(res_[pool[j]]);
            std::copy_n(all.col(pool[j]), all.rows(), r.eigenvectors.col(static_cast<Index>(j)));
        }
        r.stats.matvecs = matvecs;
        r.stats.iterations = iter - 1;
        r.stats.history = std::move(history);
    }

  private:
    void apply(std::span<const Index> perm)
    {
        permute_columns<T>(buf_.C.view(), perm);
        permute_columns<T>(buf_.C2.view(), perm);
        permute(ritz_, perm);
        permute(res_, perm);
        permute(degs_, perm);
    }

    IterationInfo iterate(int iter)
    {
        IterationInfo info;
        info.iteration = iter;
        info.locked = locked_;
        const Index k = ne_ - locked_;

        if (iter != 1)
        {
            const auto [lo, hi] = update_bounds(ritz_);
            bounds_.mu_1 = lo;
            bounds_.mu_ne = hi;
            apply_degenerate_safeguard(bounds_);
            if (cfg_.opt)
            {
                const auto d = degree_opt(cfg_.tol, std::span(res_).subspan(locked_), std::span(ritz_).subspan(locked_),
                                          bounds_.c(), bounds_.e(), cfg_.deg_max);
                std::copy(d.begin(), d.end(), degs_.begin() + locked_);
            }
            const auto order = degree_order(std::span(degs_).subspan(locked_), std::span(ritz_).subspan(locked_));
            std::vector<Index> perm(static_cast<std::size_t>(ne_));
            std::iota(perm.begin(), perm.begin() + locked_, Index{0});
            for (Index j = 0; j < k; ++j)
                perm[locked_ + j] = locked_ + order[j];
            apply(perm);
        }
        info.bounds = bounds_;
        info.degs = degs_;

        {
            Profiler::Scope s(ctx_.profiler, Kernel::Filter, iter);
            info.matvecs = chebyshev_filter<T>(ctx_, buf_.H.view(), buf_.C.columns(locked_, k),
                                               buf_.B.columns(locked_, k), std::span(degs_).subspan(locked_),
                                               FilterParams(bounds_));
        }
        if (obs_ && obs_->after_filter)
            obs_->after_filter(info, ctx_, buf_.C.view());

        {
            Profiler::Scope s(ctx_.profiler, Kernel::QR, iter);
            if (iter == 1 && cfg_.first_estimate == FirstEstimate::Safest)
                info.est_cond = 1.0 / unit_roundoff<T>();
            else if (iter == 1)
            {
                const std::vector<double> guess(static_cast<std::size_t>(ne_), bounds_.mu_1);
                info.est_cond = cond_est(guess, bounds_.c(), bounds_.e(), degs_, locked_);
            }
            else
                info.est_cond = cond_est(ritz_, bounds_.c(), bounds_.e(), degs_, locked_);

            const AxisMap& rows = ctx_.layout->rows;
            switch (cfg_.qr)
            {
            case QrMode::Auto:
                info.qr = caqr<T>(ctx_.col_comm, buf_.C.view(), rows, info.est_cond);
                break;
            case QrMode::Householder:
                info.qr = caqr_forced<T>(ctx_.col_comm, buf_.C.view(), rows, QrVariant::Householder);
                break;
            case QrMode::Chol1:
                info.qr = caqr_forced<T>(ctx_.col_comm, buf_.C.view(), rows, QrVariant::Chol1);
                break;
            case QrMode::Chol2:
                info.qr = caqr_forced<T>(ctx_.col_comm, buf_.C.view(), rows, QrVariant::Chol2);
                break;
            case QrMode::Shifted:
                info.qr = caqr_forced<T>(ctx_.col_comm, buf_.C.view(), rows, QrVariant::ShiftedChol2);
                break;
            }
            info.qr.est_cond = info.est_cond;
            copy<T>(buf_.C2.columns(0, locked_), buf_.C.columns(0, locked_));
            copy<T>(buf_.C.columns(locked_, k), buf_.C2.columns(locked_, k));
        }
        if (obs_ && obs_->after_qr)
            obs_->after_qr(info, ctx_, buf_.C.view());

        {
            Profiler::Scope s(ctx_.profiler, Kernel::RR, iter);
            const auto vals = rayleigh_ritz<T>(ctx_, buf_, locked_);
            std::copy(vals.begin(), vals.end(), ritz_.begin() + locked_);
        }
        {
            Profiler::Scope s(ctx_.profiler, Kernel::Resid, iter);
            const auto r = residuals<T>(ctx_, buf_, std::span(ritz_).subspan(locked_), locked_, scale_);
            std::copy(r.begin(), r.end(), res_.begin() + locked_);
        }

        Index fresh = 0;
        const auto perm = locking_order(res_, ritz_, cfg_.tol, locked_, fresh);
        apply(perm);
        locked_ += fresh;
        info.new_converged = fresh;
        return info;
    }

    RankContext& ctx_;
    const SolverConfig& cfg_;
    const SolverObserver<T>* obs_;
    Index ne_;
    RankBuffers<T> buf_;
    SpectralBounds bounds_;
    double scale_ = 1.0;
    Index locked_ = 0;
    std::vector<double> ritz_;
    std::vector<double> res_;
    std::vector<int> degs_;
};

// Samples entry pairs and rejects clearly non-Hermitian input.
template <typename T>
void spot_check_hermitian(ConstMatrixView<T> h)
{
    const Index n = h.rows;
    double scale = 0.0;
    for (Index i = 0; i < n; ++i)
        scale = std::max(scale, std::abs(h(i, i)));
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    const int samples = static_cast<int>(std::min<Index>(256, n * n));
    for (int s = 0; s < samples; ++s)
    {
        const Index i = pick(rng), j = pick(rng);
        scale = std::max(scale, std::abs(h(i, j)));
        if (std::abs(h(i, j) - conj(h(j, i))) > 1e-10 * std::max(scale, 1e-300))
            throw ConfigError("matrix is not Hermitian: entries (" + std::to_string(i) + "," + std::to_string(j) +
                              ") and its mirror differ");
    }
}

} // namespace

template <typename T>
SolverResult<T> solve(ConstMatrixView<T> h, const SolverConfig& config, const SolverObserver<T>* observer)
{
    if (h.rows != h.cols)
        throw DimensionError("solve: matrix must be square");
    config.validate(h.rows);
    spot_check_hermitian(h);
    const GridLayout layout(h.rows, config.grid, config.dist);
    layout.check_redistribution();
    const GridTopology topo(config.grid);

    SolverResult<T> result;
    Shared<T> shared;
    shared.result = &result;
    shared.elements.resize(static_cast<std::size_t>(config.grid.size()));
    shared.final_ritz.resize(static_cast<std::size_t>(config.grid.size()));
    std::vector<Profiler> profilers(static_cast<std::size_t>(config.grid.size()));

    const auto t0 = std::chrono::steady_clock::now();
    topo.run(
        layout,
        [&](RankContext& ctx) {
            RankSolver<T> rs(ctx, h, config, observer);
            rs.run(shared);
        },
        profilers);
    result.stats.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // The small eigenproblem is solved redundantly; every rank must agree bit for bit.
    for (const auto& r : shared.final_ritz)
        if (r != shared.final_ritz[0])
            throw Error("solve: ranks disagree on the Ritz values");

    result.stats.buffer_elements = std::move(shared.elements);
    for (const auto& p : profilers)
        result.stats.per_rank.push_back(p.records());
    result.stats.records = Profiler::merge(result.stats.per_rank);
    return result;
}

#define FILTEIG_INSTANTIATE(T)                                                                                         \
    template struct RankBuffers<T>;                                                                                    \
    template void permute_columns<T>(MatrixView<T>, std::span<const Index>);                                           \
    template std::vector<double> rayleigh_ritz<T>(RankContext&, RankBuffers<T>&, Index);                               \
    template std::vector<double> residuals<T>(RankContext&, RankBuffers<T>&, std::span<const double>, Index, double);  \
    template SolverResult<T> solve<T>(ConstMatrixView<T>, const SolverConfig&, const SolverObserver<T>*);

FILTEIG_INSTANTIATE(double)
FILTEIG_INSTANTIATE(std::complex<double>)

} // namespace filteig
