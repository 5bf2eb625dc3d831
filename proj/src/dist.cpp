#include "filteig/dist.hpp"

namespace filteig
{

namespace
{

const AxisMap& row_map(const GridLayout& layout, Axis axis)
{
    return axis == Axis::Row1D ? layout.cols : layout.rows;
}

template <typename T>
void require_contiguous(ConstMatrixView<T> v, const char* what)
{
    if (v.cols > 1 && v.ld != v.rows)
        throw DimensionError(std::string(what) + ": view must be contiguous");
}

// Gathers the pieces held by the members of `comm`, where member k holds the
// rows map.globals(k). Each member broadcasts its piece in turn.
template <typename T>
DenseMatrix<T> allgather_rows(Communicator& comm, const AxisMap& map, ConstMatrixView<T> local)
{
    const Index m = local.cols;
    if (local.rows != map.local_size(comm.rank()))
        throw DimensionError("allgather: local block has the wrong number of rows");
    DenseMatrix<T> out(map.extent(), m);
    DenseMatrix<T> piece;
    for (int k = 0; k < map.parts(); ++k)
    {
        if (k == comm.rank())
            piece = DenseMatrix<T>::from(local);
        else
            piece = DenseMatrix<T>(map.local_size(k), m);
        comm.bcast(piece.span(), k);
        const auto g = map.globals(k);
        for (Index j = 0; j < m; ++j)
            for (Index l = 0; l < static_cast<Index>(g.size()); ++l)
                out(g[l], j) = piece(l, j);
    }
    return out;
}

// Fills `dst` (rows dst_map.globals(dst_part)) from the pieces of `comm`'s
// members (member k holding src_map.globals(k)). Members whose rows do not
// meet the destination range are skipped on every member alike.
template <typename T>
void redistribute(Communicator& comm, const AxisMap& src_map, const AxisMap& dst_map, int dst_part,
                  ConstMatrixView<T> src, MatrixView<T> dst)
{
    const Index m = src.cols;
    if (dst.cols != m || src.rows != src_map.local_size(comm.rank()) || dst.rows != dst_map.local_size(dst_part))
        throw DimensionError("redistribute: block shapes do not match the layout");
    const auto dst_globals = dst_map.globals(dst_part);
    DenseMatrix<T> piece;
    for (int k = 0; k < src_map.parts(); ++k)
    {
        // Which destination rows live on member k, and where.
        std::vector<std::pair<Index, Index>> hits; // (dst local, src local)
        for (Index l = 0; l < static_cast<Index>(dst_globals.size()); ++l)
        {
            const auto [part, loc] = src_map.to_local(dst_globals[l]);
            if (part == k)
                hits.emplace_back(l, loc);
        }
        if (hits.empty())
            continue;
        const ConstMatrixView<T>* from = &src;
        ConstMatrixView<T> pv;
        if (comm.size() > 1)
        {
            if (k == comm.rank())
                piece = DenseMatrix<T>::from(src);
            else
                piece = DenseMatrix<T>(src_map.local_size(k), m);
            comm.bcast(piece.span(), k);
            pv = piece.view();
            from = &pv;
        }
        for (Index j = 0; j < m; ++j)
            for (const auto& [dl, sl] : hits)
                dst(dl, j) = (*from)(sl, j);
    }
}

} // namespace

template <typename T>
DenseMatrix<T> distribute(ConstMatrixView<T> global, const GridLayout& layout, int row, int col, Axis axis)
{
    if (global.rows != layout.n)
        throw DimensionError("distribute: matrix has " + std::to_string(global.rows) + " rows, layout expects " +
                             std::to_string(layout.n));
    if (row < 0 || row >= layout.shape.p || col < 0 || col >= layout.shape.q)
        throw DimensionError("distribute: rank outside the grid");
    if (axis == Axis::Full2D)
    {
        if (global.cols != layout.n)
            throw DimensionError("distribute: operator must be square");
        const auto rg = layout.rows.globals(row);
        const auto cg = layout.cols.globals(col);
        DenseMatrix<T> out(static_cast<Index>(rg.size()), static_cast<Index>(cg.size()));
        for (Index j = 0; j < out.cols(); ++j)
            for (Index i = 0; i < out.rows(); ++i)
                out(i, j) = global(rg[i], cg[j]);
        return out;
    }
    const auto g = axis == Axis::Column1D ? layout.rows.globals(row) : layout.cols.globals(col);
    DenseMatrix<T> out(static_cast<Index>(g.size()), global.cols);
    for (Index j = 0; j < out.cols(); ++j)
        for (Index i = 0; i < out.rows(); ++i)
            out(i, j) = global(g[i], j);
    return out;
}

template <typename T>
DenseMatrix<T> gather(std::span<const DenseMatrix<T>> blocks, const GridLayout& layout, Axis axis)
{
    const int p = layout.shape.p, q = layout.shape.q;
    if (static_cast<int>(blocks.size()) != p * q)
        throw DimensionError("gather: need one block per rank");
    if (axis == Axis::Full2D)
    {
        DenseMatrix<T> out(layout.n, layout.n);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < q; ++j)
            {
                const auto& b = blocks[i * q + j];
                const auto rg = layout.rows.globals(i);
                const auto cg = layout.cols.globals(j);
                if (b.rows() != static_cast<Index>(rg.size()) || b.cols() != static_cast<Index>(cg.size()))
                    throw DimensionError("gather: block shape does not match the layout");
                for (Index c = 0; c < b.cols(); ++c)
                    for (Index r = 0; r < b.rows(); ++r)
                        out(rg[r], cg[c]) = b(r, c);
            }
        return out;
    }
    const AxisMap& map = row_map(layout, axis);
    const Index m = blocks[0].cols();
    DenseMatrix<T> out(layout.n, m);
    for (int k = 0; k < map.parts(); ++k)
    {
        const auto& b = axis == Axis::Column1D ? blocks[k * q] : blocks[k];
        const auto g = map.globals(k);
        if (b.rows() != static_cast<Index>(g.size()) || b.cols() != m)
            throw DimensionError("gather: block shape does not match the layout");
        for (Index c = 0; c < m; ++c)
            for (Index r = 0; r < b.rows(); ++r)
                out(g[r], c) = b(r, c);
    }
    return out;
}

template <typename T>
DenseMatrix<T> allgather_c(RankContext& ctx, ConstMatrixView<T> local)
{
    return allgather_rows(ctx.col_comm, ctx.layout->rows, local);
}

template <typename T>
DenseMatrix<T> allgather_b(RankContext& ctx, ConstMatrixView<T> local)
{
    return allgather_rows(ctx.row_comm, ctx.layout->cols, local);
}

template <typename T>
void redistribute_c_to_b(RankContext& ctx, ConstMatrixView<T> c, MatrixView<T> b)
{
    redistribute(ctx.col_comm, ctx.layout->rows, ctx.layout->cols, ctx.col, c, b);
}

template <typename T>
void redistribute_b_to_c(RankContext& ctx, ConstMatrixView<T> b, MatrixView<T> c)
{
    redistribute(ctx.row_comm, ctx.layout->cols, ctx.layout->rows, ctx.row, b, c);
}

template <typename T>
void hemm_to_b(RankContext& ctx, ConstMatrixView<T> h_loc, Base<T> alpha, ConstMatrixView<T> c, Base<T> beta,
               MatrixView<T> b)
{
    require_contiguous<T>(b, "hemm_to_b");
    // The beta term is identical on every member; add it once before the sum.
    const T bt = ctx.col_comm.rank() == 0 ? T(beta) : T(0);
    kernels::gemm<T>(T(alpha), h_loc, kernels::Op::ConjTrans, c, kernels::Op::None, bt, b);
    ctx.col_comm.allreduce_sum(b);
}

template <typename T>
void hemm_to_c(RankContext& ctx, ConstMatrixView<T> h_loc, Base<T> alpha, ConstMatrixView<T> b, Base<T> beta,
               MatrixView<T> c)
{
    require_contiguous<T>(c, "hemm_to_c");
    const T bt = ctx.row_comm.rank() == 0 ? T(beta) : T(0);
    kernels::gemm<T>(T(alpha), h_loc, kernels::Op::None, b, kernels::Op::None, bt, c);
    ctx.row_comm.allreduce_sum(c);
}

std::vector<std::pair<Index, Index>> local_diagonal(const GridLayout& layout, int row, int col)
{
    std::vector<std::pair<Index, Index>> out;
    const auto rg = layout.rows.globals(row);
    for (Index l = 0; l < static_cast<Index>(rg.size()); ++l)
    {
        const auto [part, loc] = layout.cols.to_local(rg[l]);
        if (part == col)
            out.emplace_back(l, loc);
    }
    return out;
}

#define FILTEIG_INSTANTIATE(T)                                                                                         \
    template DenseMatrix<T> distribute<T>(ConstMatrixView<T>, const GridLayout&, int, int, Axis);                      \
    template DenseMatrix<T> gather<T>(std::span<const DenseMatrix<T>>, const GridLayout&, Axis);                       \
    template DenseMatrix<T> allgather_c<T>(RankContext&, ConstMatrixView<T>);                                          \
    template DenseMatrix<T> allgather_b<T>(RankContext&, ConstMatrixView<T>);                                          \
    template void redistribute_c_to_b<T>(RankContext&, ConstMatrixView<T>, MatrixView<T>);                             \
    template void redistribute_b_to_c<T>(RankContext&, ConstMatrixView<T>, MatrixView<T>);                             \
    template void hemm_to_b<T>(RankContext&, ConstMatrixView<T>, Base<T>, ConstMatrixView<T>, Base<T>, MatrixView<T>); \
    template void hemm_to_c<T>(RankContext&, ConstMatrixView<T>, Base<T>, ConstMatrixView<T>, Base<T>, MatrixView<T>);

FILTEIG_INSTANTIATE(double)
FILTEIG_INSTANTIATE(std::complex<double>)

} // namespace filteig
