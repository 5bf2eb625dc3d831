#pragma once

// Per-kernel instrumentation: wall time split into compute / communicate /
// copy, plus message and word counters fed by the collectives. One Profiler
// per rank; records stay in memory until export.

#include "filteig/types.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace filteig
{

enum class Kernel
{
    Lanczos,
    Filter,
    QR,
    RR,
    Resid
};

enum class Phase
{
    Compute,
    Comm,
    Copy
};

const char* to_string(Kernel k) noexcept;
std::optional<Kernel> kernel_from_string(std::string_view s) noexcept;

struct KernelRecord
{
    Kernel kernel = Kernel::Filter;
    int iteration = 0;
    double compute_s = 0.0;
    double comm_s = 0.0;
    double copy_s = 0.0;
    std::uint64_t messages = 0;
    std::uint64_t words = 0;

    friend bool operator==(const KernelRecord&, const KernelRecord&) = default;
};

class Profiler
{
  public:
    using Clock = std::chrono::steady_clock;

    /// Accumulates into the (kernel, iteration) record, creating it on first use.
    void record(Kernel kernel, int iteration, Phase phase, double seconds, std::uint64_t messages = 0,
                std::uint64_t words = 0);

    /// Opens a timed region. Collective time observed inside it is booked as
    /// comm, the remainder of the wall time as compute.
    class Scope
    {
      public:
        Scope(Profiler* prof, Kernel kernel, int iteration);
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;
        ~Scope();

      private:
        Profiler* prof_;
        Kernel kernel_;
        int iteration_;
        Clock::time_point start_;
        double comm_before_;
    };

    /// Called by communicators after each collective with more than one member.
    void on_collective(double seconds, std::uint64_t words);

    /// Records sorted by (iteration, kernel).
    std::vector<KernelRecord> records() const;

    bool empty() const { return records_.empty(); }

    /// Order-fixed merge across ranks: times and counters take the per-field
    /// maximum, i.e. the slowest / busiest member.
    static std::vector<KernelRecord> merge(std::span<const std::vector<KernelRecord>> per_rank);

  private:
    struct Active
    {
        Kernel kernel;
        int iteration;
        double comm_s = 0.0;
    };

    std::map<std::pair<int, int>, KernelRecord> records_;
    std::optional<Active> active_;
};

inline constexpr const char* kCsvHeader = "kernel,iteration,compute_s,comm_s,copy_s,messages,words";

/// Writes `# scalar=<kind>` followed by the header and one row per record.
void export_csv(std::span<const KernelRecord> records, const std::string& path, ScalarKind scalar);
std::string to_csv(std::span<const KernelRecord> records, ScalarKind scalar);

/// Parses what export_csv wrote; comment lines are skipped. Throws IoError.
std::vector<KernelRecord> parse_csv(const std::string& text);
std::vector<KernelRecord> read_csv(const std::string& path);

} // namespace filteig
