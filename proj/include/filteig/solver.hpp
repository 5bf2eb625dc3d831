#pragma once

// Chebyshev-filtered subspace iteration on the process grid.
//
// Per iteration: bounds update and degree optimisation, filter of the active
// columns, condition-driven QR of the whole block, Rayleigh-Ritz on the active
// columns, residuals, locking. Columns that converge are frozen at the front
// of the block.

#include "filteig/caqr.hpp"
#include "filteig/filter.hpp"
#include "filteig/grid.hpp"
#include "filteig/lanczos.hpp"
#include "filteig/profiler.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace filteig
{

enum class QrMode
{
    Auto,
    Householder,
    Chol1,
    Chol2,
    Shifted
};

const char* to_string(QrMode m) noexcept;
std::optional<QrMode> qr_mode_from_string(std::string_view s) noexcept;

/// How the first QR, which has no Ritz values to go on, is steered.
enum class FirstEstimate
{
    Spectral, // condition estimate with every Ritz value set to the Lanczos mu_1
    Safest    // estimate = 1/u, i.e. always the shifted path
};

struct SolverConfig
{
    Index nev = 0;
    Index nex = 0;
    double tol = 1e-10;
    int deg_init = 20;
    int deg_max = 36;
    int max_iter = 25;
    bool opt = true;
    std::uint64_t seed = 1;
    GridShape grid{1, 1};
    Distribution dist{};
    QrMode qr = QrMode::Auto;
    FirstEstimate first_estimate = FirstEstimate::Spectral;
    int lanczos_steps = 25;
    int lanczos_runs = 4;

    Index n_e() const { return nev + nex; }
    /// Throws ConfigError on an inconsistent configuration for an N x N problem.
    void validate(Index n) const;
};

enum class SolveStatus
{
    Converged,
    MaxIterReached
};

struct IterationInfo
{
    int iteration = 0;
    Index locked = 0; // columns frozen before this iteration
    SpectralBounds bounds;
    std::vector<int> degs; // all n_e entries, in column order
    double est_cond = 1.0;
    QrTrace qr;
    std::uint64_t matvecs = 0; // filter products in this iteration
    Index new_converged = 0;
};

struct SolverStats
{
    std::uint64_t matvecs = 0;
    int iterations = 0;
    std::vector<IterationInfo> history;
    std::vector<KernelRecord> records;                // merged across ranks
    std::vector<std::vector<KernelRecord>> per_rank;  // row-major rank order
    std::vector<std::size_t> buffer_elements;         // per rank: H, C, C2, B, B2, A
    double wall_s = 0.0;
};

template <typename T>
struct SolverResult
{
    SolveStatus status = SolveStatus::MaxIterReached;
    Index locked = 0;
    std::vector<double> eigenvalues; // nev entries, ascending
    std::vector<double> residuals;   // normalised, paired with eigenvalues
    DenseMatrix<T> eigenvectors;     // N x nev
    SpectralBounds initial_bounds;
    double residual_scale = 1.0; // residuals are ||Hv - lambda v|| / residual_scale
    SolverStats stats;
};

/// The per-rank working set. Element count matches the memory model.
template <typename T>
struct RankBuffers
{
    DenseMatrix<T> H;  // n_r x n_c
    DenseMatrix<T> C;  // n_r x n_e
    DenseMatrix<T> C2; // n_r x n_e
    DenseMatrix<T> B;  // n_c x n_e
    DenseMatrix<T> B2; // n_c x n_e
    DenseMatrix<T> A;  // n_e x n_e

    RankBuffers(DenseMatrix<T> h, Index n_c, Index n_e);
    std::size_t elements() const;
};

/// Hooks called on every rank; they may use the rank's communicators.
template <typename T>
struct SolverObserver
{
    /// C holds locked columns followed by the freshly filtered active ones.
    std::function<void(const IterationInfo&, RankContext&, ConstMatrixView<T> c)> after_filter;
    /// C after QR and the restore of the locked columns.
    std::function<void(const IterationInfo&, RankContext&, ConstMatrixView<T> c)> after_qr;
};

/// Rayleigh-Ritz on columns [locked, n_e) of C2 (orthonormal on entry).
/// Leaves the Ritz vectors in both C and C2 and returns the Ritz values.
template <typename T>
std::vector<double> rayleigh_ritz(RankContext& ctx, RankBuffers<T>& buf, Index locked);

/// Normalised residual norms of columns [locked, n_e) of C2 against `ritz`.
template <typename T>
std::vector<double> residuals(RankContext& ctx, RankBuffers<T>& buf, std::span<const double> ritz, Index locked,
                              double scale);

/// Column order after locking: active columns [locked, n) with res <= tol
/// first (ascending Ritz value), then the rest in their current order.
/// The locked prefix maps to itself.
std::vector<Index> locking_order(std::span<const double> res, std::span<const double> ritz, double tol, Index locked,
                                 Index& new_converged);

/// True once nev pairs are locked and no active Ritz value lies below the
/// nev-th smallest locked one. A locked count alone can be reached by pairs
/// further up the spectrum while a lower one is still unconverged.
bool wanted_converged(std::span<const double> ritz, Index locked, Index nev);

/// Reorders columns so that new column j is old column perm[j].
template <typename T>
void permute_columns(MatrixView<T> m, std::span<const Index> perm);

template <typename T>
void permute(std::vector<T>& v, std::span<const Index> perm)
{
    std::vector<T> out(v.size());
    for (std::size_t j = 0; j < perm.size(); ++j)
        out[j] = v[static_cast<std::size_t>(perm[j])];
    v = std::move(out);
}

/// Solves for the nev lowest eigenpairs of the Hermitian matrix h on an
/// in-process grid of config.grid ranks.
template <typename T>
SolverResult<T> solve(ConstMatrixView<T> h, const SolverConfig& config, const SolverObserver<T>* observer = nullptr);

} // namespace filteig
