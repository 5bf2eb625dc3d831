#pragma once

// Runs per-rank test code against a distributed copy of a global matrix.

#include "filteig/dist.hpp"

#include <mutex>
#include <vector>

namespace harness
{

using namespace filteig;

/// Calls fn(ctx, h_loc) on every rank and returns the per-rank results in
/// row-major rank order. h_loc is a private, writable copy of the rank's block.
template <typename T, typename F>
auto on_grid(const DenseMatrix<T>& h, GridShape shape, F fn, Distribution dist = Distribution::block(),
             std::span<Profiler> profilers = {})
{
    using R = decltype(fn(std::declval<RankContext&>(), std::declval<DenseMatrix<T>&>()));
    const GridLayout layout(h.rows(), shape, dist);
    std::vector<R> out(static_cast<std::size_t>(shape.size()));
    GridTopology(shape).run(
        layout,
        [&](RankContext& ctx) {
            DenseMatrix<T> local = distribute<T>(h.view(), layout, ctx.row, ctx.col, Axis::Full2D);
            out[static_cast<std::size_t>(ctx.rank())] = fn(ctx, local);
        },
        profilers);
    return out;
}

template <typename T>
DenseMatrix<T> diagonal(std::span<const double> d)
{
    const Index n = static_cast<Index>(d.size());
    DenseMatrix<T> m(n, n);
    for (Index i = 0; i < n; ++i)
        m(i, i) = T(d[static_cast<std::size_t>(i)]);
    return m;
}

} // namespace harness
