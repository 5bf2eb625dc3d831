#pragma once

// Spectral bounds from a few short Lanczos runs on the distributed operator.

#include "filteig/grid.hpp"

#include <cstdint>

namespace filteig
{

struct SpectralBounds
{
    double mu_1 = 0.0;  // lower end of the wanted spectrum
    double mu_ne = 0.0; // estimate of the n_e-th eigenvalue
    double b_sup = 0.0; // upper bound of the whole spectrum

    double c() const { return 0.5 * (b_sup + mu_ne); }
    double e() const { return 0.5 * (b_sup - mu_ne); }
};

/// Keeps e > 0 and mu_1 <= mu_ne: a damped interval narrower than
/// 1e-8 * max(1, |b_sup|) is widened downward from b_sup.
void apply_degenerate_safeguard(SpectralBounds& b);

struct LanczosOptions
{
    int steps = 25;
    int runs = 4;
    std::uint64_t seed = 1;
};

/// Runs `runs` independent k-step Lanczos processes with full
/// reorthogonalisation. b_sup = max over runs of (largest Ritz value + final
/// residual norm); mu_1 = smallest Ritz value; mu_ne comes from the pooled
/// Ritz values weighted by the squared first components of their eigenvectors,
/// read as a cumulative eigenvalue count. Collective over the whole grid.
template <typename T>
SpectralBounds lanczos_bounds(RankContext& ctx, ConstMatrixView<T> h_loc, Index n_e, const LanczosOptions& opt);

/// (min, max) of the current Ritz values.
std::pair<double, double> update_bounds(std::span<const double> ritz);

} // namespace filteig
