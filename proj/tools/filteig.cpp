// filteig: generate test matrices and run the distributed eigensolver.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
// 3 no convergence within --max-iter (partial outputs are still written).

#include "filteig/matgen.hpp"
#include "filteig/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace
{

using namespace filteig;

enum Exit
{
    kOk = 0,
    kUsage = 1,
    kIo = 2,
    kNoConvergence = 3
};

struct Range
{
    double lo = 0.0;
    double hi = 1.0;
};

Range parse_range(const std::string& s)
{
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw ConfigError("--uniform expects lo,hi");
    Range r;
    try
    {
        std::size_t used = 0;
        r.lo = std::stod(s.substr(0, comma), &used);
        if (used != comma)
            throw ConfigError("");
        const std::string rest = s.substr(comma + 1);
        r.hi = std::stod(rest, &used);
        if (used != rest.size())
            throw ConfigError("");
    }
    catch (const std::exception&)
    {
        throw ConfigError("--uniform expects two numbers lo,hi, got '" + s + "'");
    }
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
        throw ConfigError("--uniform needs finite lo <= hi");
    return r;
}

GridShape parse_grid(const std::string& s)
{
    int p = 0, q = 0;
    char x = 0, tail = 0;
    if (std::sscanf(s.c_str(), "%d%c%d%c", &p, &x, &q, &tail) != 3 || (x != 'x' && x != 'X') || p < 1 || q < 1)
        throw ConfigError("--grid expects PxQ with positive P and Q, got '" + s + "'");
    return {p, q};
}

struct Options
{
    Index n = 0;
    std::string uniform;
    std::string matrix_file;
    std::string scalar = "r64";
    std::uint64_t seed = 1;
    // generate
    std::string out;
    // solve
    Index nev = 0;
    Index nex = 0;
    double tol = 1e-10;
    int deg = 20;
    int deg_max = 36;
    int max_iter = 25;
    bool no_opt = false;
    std::string qr = "auto";
    std::string grid = "1x1";
    std::string dist = "block";
    Index mb = 64;
    Index nb = 64;
    std::string out_evals;
    std::string out_evecs;
    std::string stats;
};

ScalarKind scalar_of(const Options& o)
{
    if (o.scalar == "r64")
        return ScalarKind::Real64;
    if (o.scalar == "c128")
        return ScalarKind::Complex128;
    throw ConfigError("--scalar must be r64 or c128");
}

template <typename T>
int run_generate(const Options& o)
{
    const Range r = parse_range(o.uniform);
    const SpectrumSpec spec{r.lo, r.hi, o.n};
    const DenseMatrix<T> a = generate<T>(spec, o.seed);
    write_matrix<T>(a.view(), o.out);
    std::cout << "N=" << o.n << " spectrum=[" << r.lo << "," << r.hi << "] seed=" << o.seed << " out=" << o.out
              << '\n';
    return kOk;
}

void write_evals(std::span<const double> ev, const std::string& path)
{
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        throw IoError("cannot open " + path + " for writing");
    bool ok = true;
    for (double v : ev)
        ok = ok && std::fprintf(f, "%.17g\n", v) > 0;
    ok = (std::fclose(f) == 0) && ok;
    if (!ok)
        throw IoError("short write to " + path);
}

template <typename T>
int run_solve(const Options& o)
{
    SolverConfig cfg;
    cfg.nev = o.nev;
    cfg.nex = o.nex;
    cfg.tol = o.tol;
    cfg.deg_init = o.deg;
    cfg.deg_max = o.deg_max;
    cfg.max_iter = o.max_iter;
    cfg.opt = !o.no_opt;
    cfg.seed = o.seed;
    cfg.grid = parse_grid(o.grid);
    if (o.dist == "block")
        cfg.dist = Distribution::block();
    else if (o.dist == "block-cyclic")
        cfg.dist = Distribution::block_cyclic(o.mb, o.nb);
    else
        throw ConfigError("--dist must be block or block-cyclic");
    const auto mode = qr_mode_from_string(o.qr);
    if (!mode)
        throw ConfigError("--qr must be one of auto, hhqr, chol1, chol2, shifted");
    cfg.qr = *mode;
    cfg.validate(o.n);
    GridLayout(o.n, cfg.grid, cfg.dist).check_redistribution();

    DenseMatrix<T> h;
    if (!o.matrix_file.empty())
        h = read_matrix<T>(o.matrix_file, o.n);
    else
    {
        const Range r = parse_range(o.uniform);
        h = generate<T>(SpectrumSpec{r.lo, r.hi, o.n}, o.seed);
    }

    const SolverResult<T> res = solve<T>(h.view(), cfg);
    if (!o.out_evals.empty())
        write_evals(res.eigenvalues, o.out_evals);
    if (!o.out_evecs.empty())
        write_matrix<T>(res.eigenvectors.view(), o.out_evecs);
    if (!o.stats.empty())
        export_csv(res.stats.records, o.stats, scalar_kind_of<T>());

    std::printf("iters=%d matvecs=%llu locked=%td time_s=%.3f\n", res.stats.iterations,
                static_cast<unsigned long long>(res.stats.matvecs), res.locked, res.stats.wall_s);
    if (res.status != SolveStatus::Converged)
    {
        std::fflush(stdout);
        std::fprintf(stderr, "filteig: no convergence after %d iterations (%td of %td locked)\n", res.stats.iterations,
                     res.locked, cfg.nev);
        return kNoConvergence;
    }
    return kOk;
}

template <template <typename> class F>
int dispatch(const Options& o)
{
    return scalar_of(o) == ScalarKind::Real64 ? F<double>::run(o) : F<std::complex<double>>::run(o);
}

template <typename T>
struct Generate
{
    static int run(const Options& o) { return run_generate<T>(o); }
};

template <typename T>
struct Solve
{
    static int run(const Options& o) { return run_solve<T>(o); }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Chebyshev-filtered subspace iteration for the lowest eigenpairs of a Hermitian matrix"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("generate", "write a matrix with a uniform spectrum");
    gen->add_option("--n", o.n, "matrix size")->required()->check(CLI::PositiveNumber);
    gen->add_option("--uniform", o.uniform, "spectrum lo,hi")->required();
    gen->add_option("--scalar", o.scalar, "r64 or c128")->check(CLI::IsMember({"r64", "c128"}));
    gen->add_option("--seed", o.seed, "RNG seed");
    gen->add_option("--out", o.out, "output path")->required();

    auto* sol = app.add_subcommand("solve", "compute the lowest eigenpairs");
    sol->add_option("--n", o.n, "matrix size")->required()->check(CLI::PositiveNumber);
    auto* uni = sol->add_option("--uniform", o.uniform, "generate with spectrum lo,hi");
    auto* mf = sol->add_option("--matrix-file", o.matrix_file, "read the matrix from a raw file");
    uni->excludes(mf);
    mf->excludes(uni);
    sol->add_option("--scalar", o.scalar, "r64 or c128")->check(CLI::IsMember({"r64", "c128"}));
    sol->add_option("--nev", o.nev, "wanted eigenpairs")->required()->check(CLI::PositiveNumber);
    sol->add_option("--nex", o.nex, "extra search columns")->required()->check(CLI::PositiveNumber);
    sol->add_option("--tol", o.tol, "residual tolerance")->check(CLI::PositiveNumber);
    sol->add_option("--deg", o.deg, "initial filter degree");
    sol->add_option("--deg-max", o.deg_max, "degree cap");
    sol->add_option("--max-iter", o.max_iter, "iteration limit")->check(CLI::PositiveNumber);
    sol->add_flag("--no-opt", o.no_opt, "keep every degree at --deg");
    sol->add_option("--qr", o.qr, "auto, hhqr, chol1, chol2 or shifted")
        ->check(CLI::IsMember({"auto", "hhqr", "chol1", "chol2", "shifted"}));
    sol->add_option("--grid", o.grid, "PxQ");
    sol->add_option("--dist", o.dist, "block or block-cyclic")->check(CLI::IsMember({"block", "block-cyclic"}));
    sol->add_option("--mb", o.mb, "row block size")->check(CLI::PositiveNumber);
    sol->add_option("--nb", o.nb, "column block size")->check(CLI::PositiveNumber);
    sol->add_option("--seed", o.seed, "RNG seed");
    sol->add_option("--out-evals", o.out_evals, "eigenvalue text file");
    sol->add_option("--out-evecs", o.out_evecs, "eigenvector matrix file");
    sol->add_option("--stats", o.stats, "per-kernel profile CSV");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try
    {
        if (gen->parsed())
            return dispatch<Generate>(o);
        if (o.uniform.empty() && o.matrix_file.empty())
            throw ConfigError("solve needs --uniform or --matrix-file");
        return dispatch<Solve>(o);
    }
    catch (const IoError& e)
    {
        std::cerr << "filteig: " << e.what() << '\n';
        return kIo;
    }
    catch (const ConfigError& e)
    {
        std::cerr << "filteig: " << e.what() << '\n';
        return kUsage;
    }
    catch (const DimensionError& e)
    {
        std::cerr << "filteig: " << e.what() << '\n';
        return kUsage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "filteig: " << e.what() << '\n';
        return kUsage;
    }
}
