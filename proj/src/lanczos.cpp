#include "filteig/lanczos.hpp"

#include "filteig/dist.hpp"
#include "filteig/matgen.hpp"

#include <algorithm>
#include <cmath>

namespace filteig
{

void apply_degenerate_safeguard(SpectralBounds& b)
{
    const double gap = 1e-8 * std::max(1.0, std::abs(b.b_sup));
    if (b.b_sup - b.mu_ne < gap)
        b.mu_ne = b.b_sup - gap;
    b.mu_1 = std::min(b.mu_1, b.mu_ne);
}

std::pair<double, double> update_bounds(std::span<const double> ritz)
{
    if (ritz.empty())
        throw DimensionError("update_bounds: no Ritz values");
    const auto [lo, hi] = std::minmax_element(ritz.begin(), ritz.end());
    return {*lo, *hi};
}

namespace
{

template <typename T>
struct LanczosRun
{
    std::vector<double> alpha;
    std::vector<double> beta; // beta[j] couples steps j and j+1; last entry is ||f_k||
};

template <typename T>
class Lanczos
{
  public:
    Lanczos(RankContext& ctx, ConstMatrixView<T> h, Index steps)
        : ctx_(ctx), h_(h), n_r_(ctx.n_r()), V_(n_r_, steps + 1), vb_(ctx.n_c(), 1), w_(n_r_, 1)
    {
    }

    double norm(const T* x)
    {
        double s = kernels::sq_norm<T>(n_r_, x);
        ctx_.col_comm.allreduce_sum(std::span<double>(&s, 1));
        return std::sqrt(s);
    }

    // x -= V[:, :cols] (V[:, :cols]^H x), applied twice.
    void orthogonalize(T* x, Index cols)
    {
        if (cols == 0)
            return;
        DenseMatrix<T> coef(cols, 1);
        const ConstMatrixView<T> xv(x, n_r_, 1, n_r_);
        const auto basis = V_.columns(0, cols);
        for (int pass = 0; pass < 2; ++pass)
        {
            kernels::gemm<T>(T(1), basis, kernels::Op::ConjTrans, xv, kernels::Op::None, T(0), coef.view());
            ctx_.col_comm.allreduce_sum(coef.span());
            kernels::gemm<T>(T(-1), basis, kernels::Op::None, coef.view(), kernels::Op::None, T(1),
                             MatrixView<T>(x, n_r_, 1, n_r_));
        }
    }

    // Fills column j of V with a unit random vector orthogonal to columns
    // 0..j-1. Returns false if no such vector could be found.
    bool fresh_vector(Index j, std::uint64_t seed)
    {
        for (int attempt = 0; attempt < 3; ++attempt)
        {
            const auto r = random_initial_vectors<T>(n_r_, 1, ctx_.row, seed + 7919 * static_cast<std::uint64_t>(attempt));
            std::copy_n(r.data(), n_r_, V_.col(j));
            orthogonalize(V_.col(j), j);
            const double nr = norm(V_.col(j));
            if (nr > 1e-8 * std::sqrt(static_cast<double>(ctx_.layout->n)))
            {
                kernels::scal<T>(n_r_, T(1.0 / nr), V_.col(j));
                return true;
            }
        }
        return false;
    }

    LanczosRun<T> run(Index steps, std::uint64_t seed)
    {
        LanczosRun<T> out;
        if (!fresh_vector(0, seed))
            throw KernelError("lanczos: could not draw a starting vector");
        for (Index j = 0; j < steps; ++j)
        {
            redistribute_c_to_b<T>(ctx_, ConstMatrixView<T>(V_.col(j), n_r_, 1, n_r_), vb_.view());
            hemm_to_c<T>(ctx_, h_, 1.0, vb_.view(), 0.0, w_.view());
            if (j > 0)
                kernels::axpy<T>(n_r_, T(-out.beta[j - 1]), V_.col(j - 1), w_.data());
            T a = kernels::dot<T>(n_r_, V_.col(j), w_.data());
            ctx_.col_comm.allreduce_sum(std::span<T>(&a, 1));
            const double alpha = real_part(a);
            kernels::axpy<T>(n_r_, T(-alpha), V_.col(j), w_.data());
            orthogonalize(w_.data(), j + 1);
            const double beta = norm(w_.data());
            out.alpha.push_back(alpha);
            out.beta.push_back(beta);
            if (j + 1 == steps)
                break;
            const double scale = std::abs(alpha) + (j > 0 ? out.beta[j - 1] : 0.0);
            if (beta <= 1e-12 * scale || beta == 0.0)
            {
                // Invariant subspace found: continue from a new direction.
                out.beta.back() = 0.0;
                if (!fresh_vector(j + 1, seed + 104729 * static_cast<std::uint64_t>(j + 1)))
                    break;
            }
            else
            {
                std::copy_n(w_.data(), n_r_, V_.col(j + 1));
                kernels::scal<T>(n_r_, T(1.0 / beta), V_.col(j + 1));
            }
        }
        return out;
    }

  private:
    RankContext& ctx_;
    ConstMatrixView<T> h_;
    Index n_r_;
    DenseMatrix<T> V_;
    DenseMatrix<T> vb_;
    DenseMatrix<T> w_;
};

} // namespace

template <typename T>
SpectralBounds lanczos_bounds(RankContext& ctx, ConstMatrixView<T> h_loc, Index n_e, const LanczosOptions& opt)
{
    const Index n = ctx.layout->n;
    if (opt.steps < 2 || opt.runs < 1)
        throw ConfigError("lanczos: need at least 2 steps and 1 run");
    if (n_e < 1 || n_e > n)
        throw ConfigError("lanczos: n_e must lie in [1, N]");
    Profiler::Scope scope(ctx.profiler, Kernel::Lanczos, 0);

    const Index steps = std::min<Index>(opt.steps, n);
    Lanczos<T> lz(ctx, h_loc, steps);

    struct Node
    {
        double theta;
        double weight;
    };
    std::vector<Node> nodes;
    SpectralBounds b;
    b.mu_1 = std::numeric_limits<double>::infinity();
    b.b_sup = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < opt.runs; ++r)
    {
        const auto run = lz.run(steps, opt.seed * 6364136223846793005ULL + 1442695040888963407ULL * (r + 1));
        const std::size_t k = run.alpha.size();
        const auto eig = kernels::tridiagonal_eig(run.alpha, std::span<const double>(run.beta.data(), k - 1));
        b.mu_1 = std::min(b.mu_1, eig.values.front());
        b.b_sup = std::max(b.b_sup, eig.values.back() + std::abs(run.beta.back()));
        for (std::size_t i = 0; i < k; ++i)
            nodes.push_back({eig.values[i], eig.vectors(0, static_cast<Index>(i)) *
                                                eig.vectors(0, static_cast<Index>(i)) / opt.runs});
    }

    std::stable_sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& c) { return a.theta < c.theta; });
    // The weight strictly below a node is a lower bound on the spectral mass
    // there, so the first node where that bound reaches n_e does not fall
    // short of the n_e-th eigenvalue.
    b.mu_ne = nodes.back().theta;
    double below = 0.0;
    for (const auto& nd : nodes)
    {
        if (below * static_cast<double>(n) >= static_cast<double>(n_e))
        {
            b.mu_ne = nd.theta;
            break;
        }
        below += nd.weight;
    }
    apply_degenerate_safeguard(b);
    return b;
}

template SpectralBounds lanczos_bounds<double>(RankContext&, ConstMatrixView<double>, Index, const LanczosOptions&);
template SpectralBounds lanczos_bounds<std::complex<double>>(RankContext&, ConstMatrixView<std::complex<double>>,
                                                             Index, const LanczosOptions&);

} // namespace filteig
