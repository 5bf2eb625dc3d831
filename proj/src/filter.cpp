#include "filteig/filter.hpp"

#include "filteig/dist.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace filteig
{

FilterParams::FilterParams(const SpectralBounds& b) : FilterParams(b.c(), b.e(), b.mu_1) {}

FilterParams::FilterParams(double c_, double e_, double mu_1_) : c(c_), e(e_), mu_1(mu_1_)
{
    if (!(e > 0.0))
        throw ConfigError("filter: half-width e must be positive");
    if (mu_1 == c)
        throw ConfigError("filter: mu_1 coincides with the interval centre");
}

double chebyshev_scalar(double x, int degree, const FilterParams& fp)
{
    if (degree < 0)
        throw ConfigError("filter: negative degree");
    if (degree == 0)
        return 1.0;
    const double s1 = fp.e / (fp.mu_1 - fp.c);
    double prev = 1.0;
    double cur = (s1 / fp.e) * (x - fp.c);
    double s = s1;
    for (int i = 1; i < degree; ++i)
    {
        const double sn = 1.0 / (2.0 / s1 - s);
        const double next = 2.0 * (sn / fp.e) * (x - fp.c) * cur - s * sn * prev;
        prev = cur;
        cur = next;
        s = sn;
    }
    return cur;
}

namespace
{

// Shifts the global diagonal of the local H block by -c and puts it back.
template <typename T>
class DiagonalShift
{
  public:
    DiagonalShift(const RankContext& ctx, MatrixView<T> h, double c)
        : h_(h), pos_(local_diagonal(*ctx.layout, ctx.row, ctx.col))
    {
        saved_.reserve(pos_.size());
        for (const auto& [i, j] : pos_)
        {
            saved_.push_back(h_(i, j));
            h_(i, j) -= T(c);
        }
    }
    DiagonalShift(const DiagonalShift&) = delete;
    DiagonalShift& operator=(const DiagonalShift&) = delete;
    ~DiagonalShift()
    {
        for (std::size_t k = 0; k < pos_.size(); ++k)
            h_(pos_[k].first, pos_[k].second) = saved_[k];
    }

  private:
    MatrixView<T> h_;
    std::vector<std::pair<Index, Index>> pos_;
    std::vector<T> saved_;
};

} // namespace

template <typename T>
std::uint64_t chebyshev_filter(RankContext& ctx, MatrixView<T> h_loc, MatrixView<T> c, MatrixView<T> b,
                               std::span<const int> degs, const FilterParams& fp)
{
    const Index k = c.cols;
    if (static_cast<Index>(degs.size()) != k || b.cols < k)
        throw DimensionError("filter: degree list or scratch does not match the block");
    if (c.rows != ctx.n_r() || b.rows != ctx.n_c())
        throw DimensionError("filter: block heights do not match the layout");
    if ((k > 1 && c.ld != c.rows) || (b.cols > 1 && b.ld != b.rows))
        throw DimensionError("filter: blocks must be contiguous");
    for (Index j = 0; j < k; ++j)
    {
        if (degs[j] < 2 || degs[j] % 2 != 0)
            throw ConfigError("filter: degrees must be even and at least 2");
        if (j > 0 && degs[j] < degs[j - 1])
            throw ConfigError("filter: degrees must be sorted ascending");
    }
    if (k == 0)
        return 0;

    DiagonalShift<T> shift(ctx, h_loc, fp.c);
    const ConstMatrixView<T> h = h_loc;
    const int d_max = degs[k - 1];
    const double s1 = fp.e / (fp.mu_1 - fp.c);
    double s = s1;
    Index first = 0; // columns [first, k) are still being filtered

    hemm_to_b<T>(ctx, h, s1 / fp.e, c, 0.0, b.columns(0, k));
    for (int step = 2; step <= d_max; ++step)
    {
        const double sn = 1.0 / (2.0 / s1 - s);
        const double alpha = 2.0 * sn / fp.e;
        const double beta = -s * sn;
        const Index w = k - first;
        if (step % 2 == 0)
            hemm_to_c<T>(ctx, h, alpha, b.columns(first, w), beta, c.columns(first, w));
        else
            hemm_to_b<T>(ctx, h, alpha, c.columns(first, w), beta, b.columns(first, w));
        s = sn;
        if (step % 2 == 0)
            while (first < k && degs[first] == step)
                ++first;
    }
    return std::accumulate(degs.begin(), degs.end(), std::uint64_t{0},
                           [](std::uint64_t acc, int d) { return acc + static_cast<std::uint64_t>(d); });
}

double growth_factor(double t)
{
    const std::complex<double> r = std::sqrt(std::complex<double>(t * t - 1.0, 0.0));
    return std::max(std::abs(t - r), std::abs(t + r));
}

std::vector<int> degree_opt(double tol, std::span<const double> res, std::span<const double> ritz, double c, double e,
                            int deg_max)
{
    if (res.size() != ritz.size())
        throw DimensionError("degree_opt: residual and Ritz lists differ in length");
    if (deg_max < 2)
        throw ConfigError("degree_opt: deg_max must be at least 2");
    std::vector<int> out(res.size());
    const int cap = deg_max % 2 == 0 ? deg_max : deg_max - 1;
    for (std::size_t j = 0; j < res.size(); ++j)
    {
        const double rho = growth_factor((ritz[j] - c) / e);
        int d;
        if (rho <= 1.0 + 1e-12)
            d = cap;
        else
        {
            const double raw = std::ceil(std::log(tol / res[j]) / std::log(1.0 / rho));
            d = static_cast<int>(std::clamp(raw, 2.0, static_cast<double>(cap)));
        }
        if (d % 2 != 0)
            ++d;
        out[j] = std::min(d, cap);
    }
    return out;
}

std::vector<Index> degree_order(std::span<const int> degs, std::span<const double> ritz)
{
    std::vector<Index> perm(degs.size());
    std::iota(perm.begin(), perm.end(), Index{0});
    std::stable_sort(perm.begin(), perm.end(), [&](Index a, Index b) {
        if (degs[a] != degs[b])
            return degs[a] < degs[b];
        return ritz[a] < ritz[b];
    });
    return perm;
}

template std::uint64_t chebyshev_filter<double>(RankContext&, MatrixView<double>, MatrixView<double>,
                                                MatrixView<double>, std::span<const int>, const FilterParams&);
template std::uint64_t chebyshev_filter<std::complex<double>>(RankContext&, MatrixView<std::complex<double>>,
                                                              MatrixView<std::complex<double>>,
                                                              MatrixView<std::complex<double>>, std::span<const int>,
                                                              const FilterParams&);

} // namespace filteig
