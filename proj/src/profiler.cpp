#include "filteig/profiler.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace filteig
{

namespace
{

constexpr Kernel kAllKernels[] = {Kernel::Lanczos, Kernel::Filter, Kernel::QR, Kernel::RR, Kernel::Resid};

std::pair<int, int> key_of(Kernel k, int iteration)
{
    return {iteration, static_cast<int>(k)};
}

} // namespace

const char* to_string(Kernel k) noexcept
{
    switch (k)
    {
    case Kernel::Lanczos:
        return "Lanczos";
    case Kernel::Filter:
        return "Filter";
    case Kernel::QR:
        return "QR";
    case Kernel::RR:
        return "RR";
    case Kernel::Resid:
        return "Resid";
    }
    return "?";
}

std::optional<Kernel> kernel_from_string(std::string_view s) noexcept
{
    for (Kernel k : kAllKernels)
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

void Profiler::record(Kernel kernel, int iteration, Phase phase, double seconds, std::uint64_t messages,
                      std::uint64_t words)
{
    auto [it, inserted] = records_.try_emplace(key_of(kernel, iteration));
    KernelRecord& r = it->second;
    if (inserted)
    {
        r.kernel = kernel;
        r.iteration = iteration;
    }
    seconds = std::max(seconds, 0.0);
    switch (phase)
    {
    case Phase::Compute:
        r.compute_s += seconds;
        break;
    case Phase::Comm:
        r.comm_s += seconds;
        break;
    case Phase::Copy:
        r.copy_s += seconds;
        break;
    }
    r.messages += messages;
    r.words += words;
}

Profiler::Scope::Scope(Profiler* prof, Kernel kernel, int iteration)
    : prof_(prof), kernel_(kernel), iteration_(iteration), comm_before_(0.0)
{
    if (!prof_)
        return;
    if (!prof_->active_)
        prof_->active_ = Active{kernel, iteration};
    comm_before_ = prof_->active_->comm_s;
    start_ = Clock::now();
}

Profiler::Scope::~Scope()
{
    if (!prof_ || !prof_->active_)
        return;
    const double wall = std::chrono::duration<double>(Clock::now() - start_).count();
    const double comm = prof_->active_->comm_s - comm_before_;
    prof_->record(kernel_, iteration_, Phase::Compute, wall - comm);
    if (prof_->active_->kernel == kernel_ && prof_->active_->iteration == iteration_)
        prof_->active_.reset();
}

void Profiler::on_collective(double seconds, std::uint64_t words)
{
    if (!active_)
        return;
    active_->comm_s += seconds;
    record(active_->kernel, active_->iteration, Phase::Comm, seconds, 1, words);
}

std::vector<KernelRecord> Profiler::records() const
{
    std::vector<KernelRecord> out;
    out.reserve(records_.size());
    for (const auto& [key, rec] : records_)
        out.push_back(rec);
    return out;
}

std::vector<KernelRecord> Profiler::merge(std::span<const std::vector<KernelRecord>> per_rank)
{
    std::map<std::pair<int, int>, KernelRecord> merged;
    for (const auto& recs : per_rank)
        for (const auto& r : recs)
        {
            auto [it, inserted] = merged.try_emplace(key_of(r.kernel, r.iteration), r);
            if (inserted)
                continue;
            KernelRecord& m = it->second;
            m.compute_s = std::max(m.compute_s, r.compute_s);
            m.comm_s = std::max(m.comm_s, r.comm_s);
            m.copy_s = std::max(m.copy_s, r.copy_s);
            m.messages = std::max(m.messages, r.messages);
            m.words = std::max(m.words, r.words);
        }
    std::vector<KernelRecord> out;
    for (const auto& [key, rec] : merged)
        out.push_back(rec);
    return out;
}

std::string to_csv(std::span<const KernelRecord> records, ScalarKind scalar)
{
    std::vector<KernelRecord> sorted(records.begin(), records.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const KernelRecord& a, const KernelRecord& b) {
        return key_of(a.kernel, a.iteration) < key_of(b.kernel, b.iteration);
    });
    std::string out = std::string("# scalar=") + to_string(scalar) + "\n" + kCsvHeader + "\n";
    char line[256];
    for (const auto& r : sorted)
    {
        std::snprintf(line, sizeof line, "%s,%d,%.17g,%.17g,%.17g,%llu,%llu\n", to_string(r.kernel), r.iteration,
                      r.compute_s, r.comm_s, r.copy_s, static_cast<unsigned long long>(r.messages),
                      static_cast<unsigned long long>(r.words));
        out += line;
    }
    return out;
}

void export_csv(std::span<const KernelRecord> records, const std::string& path, ScalarKind scalar)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    f << to_csv(records, scalar);
    if (!f)
        throw IoError("write failed for '" + path + "'");
}

std::vector<KernelRecord> parse_csv(const std::string& text)
{
    std::vector<KernelRecord> out;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line))
    {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header_seen)
        {
            if (line != kCsvHeader)
                throw IoError("profile CSV: unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            fields.push_back(field);
        if (fields.size() != 7)
            throw IoError("profile CSV: expected 7 fields in '" + line + "'");
        KernelRecord r;
        const auto k = kernel_from_string(fields[0]);
        if (!k)
            throw IoError("profile CSV: unknown kernel '" + fields[0] + "'");
        r.kernel = *k;
        try
        {
            r.iteration = std::stoi(fields[1]);
            r.compute_s = std::stod(fields[2]);
            r.comm_s = std::stod(fields[3]);
            r.copy_s = std::stod(fields[4]);
            r.messages = std::stoull(fields[5]);
            r.words = std::stoull(fields[6]);
        }
        catch (const std::exception&)
        {
            throw IoError("profile CSV: malformed number in '" + line + "'");
        }
        out.push_back(r);
    }
    if (!header_seen)
        throw IoError("profile CSV: missing header");
    return out;
}

std::vector<KernelRecord> read_csv(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

} // namespace filteig
