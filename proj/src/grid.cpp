#include "filteig/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <thread>

namespace filteig
{

GridShape create_grid(int num_ranks)
{
    if (num_ranks < 1)
        throw ConfigError("create_grid: need at least one rank");
    int q = static_cast<int>(std::sqrt(static_cast<double>(num_ranks)));
    while (q > 1 && num_ranks % q != 0)
        --q;
    while ((q + 1) * (q + 1) <= num_ranks && num_ranks % (q + 1) == 0)
        ++q;
    return {num_ranks / q, q};
}

// ---------------------------------------------------------------------------
// AxisMap

AxisMap::AxisMap(Index n, int parts, DistKind kind, Index block) : n_(n), parts_(parts), kind_(kind), block_(block)
{
    if (n < 0 || parts < 1)
        throw DimensionError("AxisMap: invalid extent or part count");
    if (kind == DistKind::BlockCyclic && block < 1)
        throw DimensionError("AxisMap: block size must be positive");
    if (kind == DistKind::Block)
        block_ = 1;
}

Index AxisMap::local_size(int part) const
{
    if (kind_ == DistKind::Block)
    {
        const Index base = n_ / parts_;
        const Index rem = n_ % parts_;
        return base + (part < rem ? 1 : 0);
    }
    const Index nblocks = (n_ + block_ - 1) / block_;
    Index size = 0;
    for (Index k = part; k < nblocks; k += parts_)
        size += std::min(block_, n_ - k * block_);
    return size;
}

Index AxisMap::to_global(int part, Index local) const
{
    if (kind_ == DistKind::Block)
    {
        const Index base = n_ / parts_;
        const Index rem = n_ % parts_;
        return part * base + std::min<Index>(part, rem) + local;
    }
    const Index kb = local / block_;
    return (kb * parts_ + part) * block_ + local % block_;
}

std::pair<int, Index> AxisMap::to_local(Index g) const
{
    if (g < 0 || g >= n_)
        throw DimensionError("AxisMap: global index out of range");
    if (kind_ == DistKind::Block)
    {
        const Index base = n_ / parts_;
        const Index rem = n_ % parts_;
        const Index split = rem * (base + 1);
        if (g < split)
            return {static_cast<int>(g / (base + 1)), g % (base + 1)};
        return {static_cast<int>(rem + (g - split) / base), (g - split) % base};
    }
    const Index k = g / block_;
    return {static_cast<int>(k % parts_), (k / parts_) * block_ + g % block_};
}

std::vector<Index> AxisMap::globals(int part) const
{
    std::vector<Index> out(static_cast<std::size_t>(local_size(part)));
    for (Index l = 0; l < static_cast<Index>(out.size()); ++l)
        out[l] = to_global(part, l);
    return out;
}

bool AxisMap::same_partition(const AxisMap& o) const
{
    return n_ == o.n_ && parts_ == o.parts_ && kind_ == o.kind_ && block_ == o.block_;
}

// ---------------------------------------------------------------------------
// GridLayout

GridLayout::GridLayout(Index n_, GridShape shape_, Distribution dist_)
    : n(n_),
      shape(shape_),
      dist(dist_),
      rows(n_, shape_.p, dist_.kind, dist_.mb),
      cols(n_, shape_.q, dist_.kind, dist_.nb)
{
    if (shape.p < 1 || shape.q < 1)
        throw ConfigError("GridLayout: grid dimensions must be positive");
}

void GridLayout::check_redistribution() const
{
    if (dist.kind == DistKind::BlockCyclic && shape.p != shape.q && shape.p > 1 && shape.q > 1)
        throw UnsupportedRedistribution("block-cyclic redistribution between column and row communicators is only "
                                        "supported on square grids or single-row/column grids (got " +
                                        std::to_string(shape.p) + "x" + std::to_string(shape.q) + ")");
}

double memory_model(double n, double n_e, double p, double q)
{
    return n * n / (p * q) + 2.0 * n * n_e / p + 2.0 * n * n_e / q + n_e * n_e;
}

// ---------------------------------------------------------------------------
// InProcessBackend

InProcessBackend::InProcessBackend(int size)
    : size_(size), slots_(static_cast<std::size_t>(size)), sizes_(static_cast<std::size_t>(size))
{
    if (size < 1)
        throw ConfigError("InProcessBackend: size must be positive");
}

void InProcessBackend::wait_all()
{
    std::unique_lock lock(mutex_);
    if (aborted_)
        throw GridAborted();
    const std::uint64_t gen = generation_;
    if (++arrived_ == size_)
    {
        arrived_ = 0;
        ++generation_;
        cv_.notify_all();
        return;
    }
    cv_.wait(lock, [&] { return generation_ != gen || aborted_; });
    if (generation_ == gen)
        throw GridAborted();
}

void InProcessBackend::abort() noexcept
{
    std::lock_guard lock(mutex_);
    aborted_ = true;
    cv_.notify_all();
}

void InProcessBackend::barrier(int)
{
    wait_all();
}

void InProcessBackend::tree_sum(int lo, int hi, std::size_t n, double* out) const
{
    if (hi - lo == 1)
    {
        std::memcpy(out, slots_[lo], n * sizeof(double));
        return;
    }
    // Left half gets the extra member: 3 members sum as (m0 + m1) + m2.
    const int mid = lo + (hi - lo + 1) / 2;
    tree_sum(lo, mid, n, out);
    std::vector<double> right(n);
    tree_sum(mid, hi, n, right.data());
    for (std::size_t i = 0; i < n; ++i)
        out[i] += right[i];
}

void InProcessBackend::allreduce_sum(int member, std::span<double> data)
{
    slots_[member] = reinterpret_cast<const std::byte*>(data.data());
    sizes_[member] = data.size();
    wait_all();
    const bool mismatch = std::any_of(sizes_.begin(), sizes_.end(), [&](std::size_t s) { return s != sizes_[0]; });
    std::vector<double> sum;
    if (!mismatch)
    {
        sum.resize(data.size());
        tree_sum(0, size_, data.size(), sum.data());
    }
    wait_all();
    if (mismatch)
        throw DimensionError("allreduce_sum: array shape differs across members");
    std::copy(sum.begin(), sum.end(), data.begin());
}

void InProcessBackend::bcast(int member, std::span<std::byte> data, int root)
{
    slots_[member] = data.data();
    sizes_[member] = data.size();
    wait_all();
    const bool mismatch = sizes_[member] != sizes_[root];
    if (member != root && !mismatch)
        std::memcpy(data.data(), slots_[root], data.size());
    wait_all();
    if (mismatch)
        throw DimensionError("bcast: buffer size differs from the root's");
}

// ---------------------------------------------------------------------------
// Communicator

Communicator::Communicator(std::shared_ptr<CollectiveBackend> backend, int member, Profiler* profiler)
    : backend_(std::move(backend)), member_(member), profiler_(profiler)
{
}

void Communicator::barrier()
{
    if (size() > 1)
        backend_->barrier(member_);
}

void Communicator::account(Profiler::Clock::time_point t0, std::size_t words)
{
    if (profiler_)
        profiler_->on_collective(std::chrono::duration<double>(Profiler::Clock::now() - t0).count(), words);
}

// ---------------------------------------------------------------------------
// GridTopology

GridTopology::GridTopology(GridShape shape, BackendFactory factory) : shape_(shape), factory_(std::move(factory))
{
    if (shape.p < 1 || shape.q < 1)
        throw ConfigError("GridTopology: grid dimensions must be positive");
    if (!factory_)
        factory_ = [](int size) { return std::make_shared<InProcessBackend>(size); };
}

std::vector<int> GridTopology::row_members(int row) const
{
    std::vector<int> m;
    for (int j = 0; j < shape_.q; ++j)
        m.push_back(row * shape_.q + j);
    return m;
}

std::vector<int> GridTopology::col_members(int col) const
{
    std::vector<int> m;
    for (int i = 0; i < shape_.p; ++i)
        m.push_back(i * shape_.q + col);
    return m;
}

void GridTopology::run(const GridLayout& layout, const std::function<void(RankContext&)>& fn,
                       std::span<Profiler> profilers) const
{
    if (!(layout.shape == shape_))
        throw ConfigError("GridTopology::run: layout was built for a different grid shape");
    if (!profilers.empty() && static_cast<int>(profilers.size()) != shape_.size())
        throw ConfigError("GridTopology::run: need one profiler per rank");

    std::vector<std::shared_ptr<CollectiveBackend>> row_backends, col_backends;
    for (int i = 0; i < shape_.p; ++i)
        row_backends.push_back(shape_.q > 1 ? factory_(shape_.q) : nullptr);
    for (int j = 0; j < shape_.q; ++j)
        col_backends.push_back(shape_.p > 1 ? factory_(shape_.p) : nullptr);

    std::mutex err_mutex;
    std::exception_ptr first_error;
    bool first_is_abort = false;

    auto body = [&](int row, int col) {
        RankContext ctx;
        ctx.layout = &layout;
        ctx.row = row;
        ctx.col = col;
        ctx.profiler = profilers.empty() ? nullptr : &profilers[row * shape_.q + col];
        if (row_backends[row])
            ctx.row_comm = Communicator(row_backends[row], col, ctx.profiler);
        if (col_backends[col])
            ctx.col_comm = Communicator(col_backends[col], row, ctx.profiler);
        try
        {
            fn(ctx);
        }
        catch (...)
        {
            bool aborted = false;
            try
            {
                throw;
            }
            catch (const GridAborted&)
            {
                aborted = true;
            }
            catch (...)
            {
            }
            {
                std::lock_guard lock(err_mutex);
                if (!first_error || (first_is_abort && !aborted))
                {
                    first_error = std::current_exception();
                    first_is_abort = aborted;
                }
            }
            for (auto& b : row_backends)
                if (b)
                    b->abort();
            for (auto& b : col_backends)
                if (b)
                    b->abort();
        }
    };

    if (shape_.size() == 1)
    {
        body(0, 0);
    }
    else
    {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(shape_.size()));
        for (int i = 0; i < shape_.p; ++i)
            for (int j = 0; j < shape_.q; ++j)
                threads.emplace_back(body, i, j);
        for (auto& t : threads)
            t.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace filteig
