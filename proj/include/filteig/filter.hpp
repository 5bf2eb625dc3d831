#pragma once

// Damped Chebyshev filter with per-column degrees, degree optimisation and
// the sort that keeps columns ordered by degree.

#include "filteig/grid.hpp"
#include "filteig/lanczos.hpp"

#include <cstdint>

namespace filteig
{

/// Scalars of the three-term recurrence for one filter application:
/// sigma_1 = e / (mu_1 - c), sigma_{i+1} = 1 / (2/sigma_1 - sigma_i).
/// Step 1 multiplies by sigma_1/e; step i+1 by alpha = 2 sigma_{i+1}/e and adds
/// beta = -sigma_i sigma_{i+1} times the vector from two steps back.
struct FilterParams
{
    double c = 0.0;
    double e = 1.0;
    double mu_1 = 0.0;

    FilterParams() = default;
    FilterParams(const SpectralBounds& b);
    FilterParams(double c, double e, double mu_1);
};

/// p_d(x) for the scaled polynomial above, by the scalar recurrence.
double chebyshev_scalar(double x, int degree, const FilterParams& fp);

/// Filters the n_r x k block `c` in place on the grid; column j receives
/// p_{degs[j]}(H) c_j. Degrees must be even, positive and non-decreasing.
/// `b` is Row1D scratch of at least k columns. H's diagonal is shifted by -c
/// for the duration of the call and restored bit-exactly afterwards. Returns
/// the number of single-vector products, sum(degs).
template <typename T>
std::uint64_t chebyshev_filter(RankContext& ctx, MatrixView<T> h_loc, MatrixView<T> c, MatrixView<T> b,
                               std::span<const int> degs, const FilterParams& fp);

/// Growth factor max |t +- sqrt(t^2 - 1)| (complex root), 1 on [-1, 1].
double growth_factor(double t);

/// Per-column degrees: ceil(ln(tol/res) / ln(1/rho)) clamped to [2, deg_max]
/// and rounded up to even; rho <= 1 + 1e-12 forces deg_max.
std::vector<int> degree_opt(double tol, std::span<const double> res, std::span<const double> ritz, double c, double e,
                            int deg_max);

/// Stable permutation of [0, n) ordering by degree, then by Ritz value.
std::vector<Index> degree_order(std::span<const int> degs, std::span<const double> ritz);

} // namespace filteig
