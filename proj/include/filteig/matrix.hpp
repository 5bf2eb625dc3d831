#pragma once

#include "filteig/types.hpp"

#include <algorithm>
#include <cassert>
#include <span>
#include <vector>

namespace filteig
{

/// Non-owning column-major view: element (i,j) lives at data[i + j*ld].
template <typename T>
struct MatrixView
{
    T* data = nullptr;
    Index rows = 0;
    Index cols = 0;
    Index ld = 1;

    MatrixView() = default;
    MatrixView(T* d, Index r, Index c, Index l) : data(d), rows(r), cols(c), ld(std::max<Index>(l, 1)) {}

    // Mutable -> const conversion.
    template <typename U>
        requires std::is_same_v<T, const U>
    MatrixView(MatrixView<U> o) : data(o.data), rows(o.rows), cols(o.cols), ld(o.ld)
    {
    }

    T& operator()(Index i, Index j) const
    {
        assert(i >= 0 && i < rows && j >= 0 && j < cols);
        return data[i + j * ld];
    }

    T* col(Index j) const { return data + j * ld; }

    MatrixView block(Index r0, Index c0, Index nr, Index nc) const
    {
        assert(r0 >= 0 && c0 >= 0 && r0 + nr <= rows && c0 + nc <= cols);
        return MatrixView(data + r0 + c0 * ld, nr, nc, ld);
    }

    MatrixView columns(Index c0, Index nc) const { return block(0, c0, rows, nc); }

    bool empty() const { return rows == 0 || cols == 0; }
};

template <typename T>
using ConstMatrixView = MatrixView<const T>;

/// Owning dense column-major matrix.
template <typename T>
class DenseMatrix
{
  public:
    using value_type = T;

    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {}
    DenseMatrix(Index rows, Index cols, T fill)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill)
    {
    }

    static DenseMatrix identity(Index n, Index m = -1)
    {
        if (m < 0)
            m = n;
        DenseMatrix I(n, m);
        for (Index i = 0; i < std::min(n, m); ++i)
            I(i, i) = T(1);
        return I;
    }

    /// Copies a (possibly strided) view.
    static DenseMatrix from(ConstMatrixView<T> v)
    {
        DenseMatrix M(v.rows, v.cols);
        for (Index j = 0; j < v.cols; ++j)
            std::copy_n(v.col(j), v.rows, M.col(j));
        return M;
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const { return rows_ * cols_; }

    T& operator()(Index i, Index j)
    {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<std::size_t>(i + j * rows_)];
    }
    const T& operator()(Index i, Index j) const
    {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<std::size_t>(i + j * rows_)];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* col(Index j) { return data_.data() + j * rows_; }
    const T* col(Index j) const { return data_.data() + j * rows_; }

    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }

    MatrixView<T> view() { return {data_.data(), rows_, cols_, rows_}; }
    ConstMatrixView<T> view() const { return {data_.data(), rows_, cols_, rows_}; }
    ConstMatrixView<T> cview() const { return view(); }

    MatrixView<T> columns(Index c0, Index nc) { return view().columns(c0, nc); }
    ConstMatrixView<T> columns(Index c0, Index nc) const { return view().columns(c0, nc); }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

  private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
void copy(ConstMatrixView<T> src, MatrixView<T> dst)
{
    assert(src.rows == dst.rows && src.cols == dst.cols);
    for (Index j = 0; j < src.cols; ++j)
        std::copy_n(src.col(j), src.rows, dst.col(j));
}

} // namespace filteig
