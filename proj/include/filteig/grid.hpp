#pragma once

// 2D process grid: shape selection, index maps for block and block-cyclic
// layouts, the collective backend abstraction and the in-process rank runner.

#include "filteig/matrix.hpp"
#include "filteig/profiler.hpp"

#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace filteig
{

struct GridShape
{
    int p = 1; // grid rows
    int q = 1; // grid columns

    int size() const { return p * q; }
    bool square() const { return p == q; }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// As-square-as-possible factorisation p x q = num_ranks with p >= q.
GridShape create_grid(int num_ranks);

enum class DistKind
{
    Block,
    BlockCyclic
};

struct Distribution
{
    DistKind kind = DistKind::Block;
    Index mb = 1; // row block size (BlockCyclic only)
    Index nb = 1; // column block size (BlockCyclic only)

    static Distribution block() { return {}; }
    static Distribution block_cyclic(Index mb, Index nb) { return {DistKind::BlockCyclic, mb, nb}; }
};

/// Global <-> (part, local) index map along one axis.
///
/// Block: the first (n mod parts) parts own ceil(n/parts) indices, the rest
/// floor(n/parts). BlockCyclic: index g lives in part floor(g/block) mod parts.
class AxisMap
{
  public:
    AxisMap(Index n, int parts, DistKind kind, Index block = 1);

    Index extent() const { return n_; }
    int parts() const { return parts_; }
    Index local_size(int part) const;
    Index to_global(int part, Index local) const;
    std::pair<int, Index> to_local(Index global) const;
    std::vector<Index> globals(int part) const;

    /// True when both maps split the same extent identically.
    bool same_partition(const AxisMap& o) const;

  private:
    Index n_;
    int parts_;
    DistKind kind_;
    Index block_;
};

/// Where every piece of an N x N operator and its N x n_e companions lives.
/// H is split over rows by `rows` (grid rows) and over columns by `cols`
/// (grid columns); C-type buffers follow `rows`, B-type buffers follow `cols`.
struct GridLayout
{
    Index n;
    GridShape shape;
    Distribution dist;
    AxisMap rows;
    AxisMap cols;

    GridLayout(Index n, GridShape shape, Distribution dist);

    Index n_r(int row) const { return rows.local_size(row); }
    Index n_c(int col) const { return cols.local_size(col); }

    /// Throws UnsupportedRedistribution for the C->B layouts the solver refuses:
    /// block-cyclic H on a grid that is neither square nor a single row/column.
    void check_redistribution() const;
};

/// Per-rank element count of H, C, C2, B, B2 and A for a divisible block layout:
/// N^2/(pq) + 2 N n_e / p + 2 N n_e / q + n_e^2.
double memory_model(double n, double n_e, double p, double q);

// ---------------------------------------------------------------------------
// Collectives

/// The whole contract a transport has to meet. Members are numbered 0..size-1;
/// every member calls each collective in the same order.
class CollectiveBackend
{
  public:
    virtual ~CollectiveBackend() = default;
    virtual int size() const = 0;
    /// Element-wise sum; the reduction order is fixed and identical on every member.
    virtual void allreduce_sum(int member, std::span<double> data) = 0;
    virtual void bcast(int member, std::span<std::byte> data, int root) = 0;
    virtual void barrier(int member) = 0;
    /// Wakes every waiting member with an error; used when one rank fails.
    virtual void abort() noexcept = 0;
};

/// Members are threads of this process. Each member reduces all published
/// buffers itself along a fixed binary tree, so results are bitwise identical
/// across members and runs.
class InProcessBackend final : public CollectiveBackend
{
  public:
    explicit InProcessBackend(int size);

    int size() const override { return size_; }
    void allreduce_sum(int member, std::span<double> data) override;
    void bcast(int member, std::span<std::byte> data, int root) override;
    void barrier(int member) override;
    void abort() noexcept override;

  private:
    void wait_all();
    void tree_sum(int lo, int hi, std::size_t n, double* out) const;

    int size_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int arrived_ = 0;
    std::uint64_t generation_ = 0;
    bool aborted_ = false;
    std::vector<const std::byte*> slots_;
    std::vector<std::size_t> sizes_;
};

using BackendFactory = std::function<std::shared_ptr<CollectiveBackend>(int size)>;

/// Thrown on ranks woken by an abort triggered elsewhere.
class GridAborted : public Error
{
  public:
    GridAborted() : Error("collective aborted because another rank failed") {}
};

/// A member's handle on one communicator. A default-constructed communicator
/// has a single member and every collective is a no-op.
class Communicator
{
  public:
    Communicator() = default;
    Communicator(std::shared_ptr<CollectiveBackend> backend, int member, Profiler* profiler);

    int size() const { return backend_ ? backend_->size() : 1; }
    int rank() const { return member_; }

    template <typename T>
    void allreduce_sum(std::span<T> data)
    {
        if (size() == 1)
            return;
        const auto t0 = Profiler::Clock::now();
        backend_->allreduce_sum(member_, as_reals(data));
        account(t0, data.size());
    }

    /// Requires a contiguous view (ld == rows).
    template <typename T>
    void allreduce_sum(MatrixView<T> m)
    {
        if (m.cols > 1 && m.ld != m.rows)
            throw DimensionError("allreduce_sum: view must be contiguous");
        allreduce_sum(std::span<T>(m.data, static_cast<std::size_t>(m.rows * m.cols)));
    }

    template <typename T>
    void bcast(std::span<T> data, int root)
    {
        if (root < 0 || root >= size())
            throw ConfigError("bcast: root " + std::to_string(root) + " outside communicator");
        if (size() == 1)
            return;
        const auto t0 = Profiler::Clock::now();
        backend_->bcast(member_, std::as_writable_bytes(data), root);
        account(t0, data.size());
    }

    void barrier();

  private:
    template <typename T>
    static std::span<double> as_reals(std::span<T> s)
    {
        if constexpr (is_complex_v<T>)
            return {reinterpret_cast<double*>(s.data()), 2 * s.size()};
        else
            return s;
    }

    void account(Profiler::Clock::time_point t0, std::size_t words);

    std::shared_ptr<CollectiveBackend> backend_;
    int member_ = 0;
    Profiler* profiler_ = nullptr;
};

/// Everything one rank sees of the grid.
struct RankContext
{
    const GridLayout* layout = nullptr;
    int row = 0;
    int col = 0;
    Communicator row_comm; // q members, indexed by col
    Communicator col_comm; // p members, indexed by row
    Profiler* profiler = nullptr;

    Index n_r() const { return layout->n_r(row); }
    Index n_c() const { return layout->n_c(col); }
    int rank() const { return row * layout->shape.q + col; }
    bool is_root() const { return row == 0 && col == 0; }
};

/// p x q workers inside this process with their row and column communicators.
class GridTopology
{
  public:
    explicit GridTopology(GridShape shape, BackendFactory factory = {});

    GridShape shape() const { return shape_; }

    /// Ranks (row-major ids) of the row communicator of grid row `row`, in member order.
    std::vector<int> row_members(int row) const;
    /// Ranks of the column communicator of grid column `col`, in member order.
    std::vector<int> col_members(int col) const;

    /// Runs fn on every rank, each on its own thread, with fresh communicators.
    /// profilers, when non-empty, must hold one entry per rank (row-major).
    /// The first exception thrown by any rank is rethrown here.
    void run(const GridLayout& layout, const std::function<void(RankContext&)>& fn,
             std::span<Profiler> profilers = {}) const;

  private:
    GridShape shape_;
    BackendFactory factory_;
};

} // namespace filteig
