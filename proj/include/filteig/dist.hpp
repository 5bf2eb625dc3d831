#pragma once

// Moving dense data onto and around the grid.
//
// Three layouts are used:
//   Full2D   - an N x N operator, block (rows part i, cols part j) on rank (i,j)
//   Column1D - an N x m block of vectors split by `layout.rows` and held by
//              every column communicator (the C, C2 buffers)
//   Row1D    - an N x m block split by `layout.cols` and held by every row
//              communicator (the B, B2 buffers)

#include "filteig/grid.hpp"
#include "filteig/kernels.hpp"

namespace filteig
{

enum class Axis
{
    Full2D,
    Column1D,
    Row1D
};

/// Local block of `global` owned by rank (row, col).
template <typename T>
DenseMatrix<T> distribute(ConstMatrixView<T> global, const GridLayout& layout, int row, int col, Axis axis);

/// Inverse of distribute. `blocks` holds one entry per rank in row-major rank order.
template <typename T>
DenseMatrix<T> gather(std::span<const DenseMatrix<T>> blocks, const GridLayout& layout, Axis axis);

/// Every member of the column communicator receives the full N x m matrix
/// assembled from the Column1D blocks.
template <typename T>
DenseMatrix<T> allgather_c(RankContext& ctx, ConstMatrixView<T> local);

/// Row-communicator counterpart for Row1D blocks.
template <typename T>
DenseMatrix<T> allgather_b(RankContext& ctx, ConstMatrixView<T> local);

/// Column1D -> Row1D over the column communicator. One broadcast per member
/// whose row range meets this rank's column range, so one on square grids.
template <typename T>
void redistribute_c_to_b(RankContext& ctx, ConstMatrixView<T> c, MatrixView<T> b);

/// Row1D -> Column1D over the row communicator.
template <typename T>
void redistribute_b_to_c(RankContext& ctx, ConstMatrixView<T> b, MatrixView<T> c);

/// B <- alpha * H^H * C + beta * B, reduced over the column communicator.
template <typename T>
void hemm_to_b(RankContext& ctx, ConstMatrixView<T> h_loc, Base<T> alpha, ConstMatrixView<T> c, Base<T> beta,
               MatrixView<T> b);

/// C <- alpha * H * B + beta * C, reduced over the row communicator.
template <typename T>
void hemm_to_c(RankContext& ctx, ConstMatrixView<T> h_loc, Base<T> alpha, ConstMatrixView<T> b, Base<T> beta,
               MatrixView<T> c);

/// Positions (local row, local col) of the global diagonal inside rank (row, col)'s H block.
std::vector<std::pair<Index, Index>> local_diagonal(const GridLayout& layout, int row, int col);

} // namespace filteig
