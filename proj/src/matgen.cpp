#include "filteig/matgen.hpp"

#include "filteig/kernels.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

static_assert(std::endian::native == std::endian::little, "matrix files are little-endian; add byte swapping");

namespace filteig
{

std::vector<double> SpectrumSpec::eigenvalues() const
{
    if (n < 1)
        throw ConfigError("spectrum: n must be positive");
    if (lo > hi)
        throw ConfigError("spectrum: lo must not exceed hi");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k)
        v[k] = n == 1 ? lo : lo + static_cast<double>(k) * (hi - lo) / static_cast<double>(n - 1);
    return v;
}

double GaussianStream::uniform01()
{
    // 53 random bits, shifted off zero so the log below is finite.
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
}

double GaussianStream::next()
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

template <typename T>
DenseMatrix<T> generate_with_spectrum(std::span<const double> eigs, std::uint64_t seed)
{
    const Index n = static_cast<Index>(eigs.size());
    GaussianStream g(seed);
    DenseMatrix<T> G(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            G(i, j) = g.sample<T>();
    const DenseMatrix<T> Q = kernels::householder_qr<T>(G.view());

    DenseMatrix<T> DQ = Q;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            DQ(i, j) *= eigs[i];
    DenseMatrix<T> A(n, n);
    kernels::gemm<T>(T(1), Q.view(), kernels::Op::ConjTrans, DQ.view(), kernels::Op::None, T(0), A.view());

    for (Index j = 0; j < n; ++j)
    {
        A(j, j) = T(real_part(A(j, j)));
        for (Index i = j + 1; i < n; ++i)
        {
            const T s = (A(i, j) + conj(A(j, i))) * 0.5;
            A(i, j) = s;
            A(j, i) = conj(s);
        }
    }
    return A;
}

template <typename T>
DenseMatrix<T> generate(const SpectrumSpec& spec, std::uint64_t seed)
{
    const auto eigs = spec.eigenvalues();
    return generate_with_spectrum<T>(eigs, seed);
}

template <typename T>
DenseMatrix<T> random_initial_vectors(Index n_r, Index n_e, int col_rank, std::uint64_t seed)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(col_rank)};
    GaussianStream g(seq);
    DenseMatrix<T> C(n_r, n_e);
    for (Index j = 0; j < n_e; ++j)
        for (Index i = 0; i < n_r; ++i)
            C(i, j) = g.sample<T>();
    return C;
}

template <typename T>
void write_matrix(ConstMatrixView<T> m, const std::string& path)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    for (Index j = 0; j < m.cols; ++j)
        f.write(reinterpret_cast<const char*>(m.col(j)), static_cast<std::streamsize>(m.rows * sizeof(T)));
    f.flush();
    if (!f)
        throw IoError("write failed for '" + path + "'");
}

template <typename T>
DenseMatrix<T> read_matrix(const std::string& path, Index rows, Index cols)
{
    if (cols < 0)
        cols = rows;
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(path, ec);
    if (ec)
        throw IoError("cannot read '" + path + "': " + ec.message());
    const auto expected = static_cast<std::uintmax_t>(rows * cols) * sizeof(T);
    if (bytes != expected)
        throw IoError("'" + path + "' holds " + std::to_string(bytes) + " bytes, expected " +
                      std::to_string(expected) + " for a " + std::to_string(rows) + "x" + std::to_string(cols) + " " +
                      to_string(scalar_kind_of<T>()) + " matrix");
    DenseMatrix<T> m(rows, cols);
    std::ifstream f(path, std::ios::binary);
    f.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(expected));
    if (!f)
        throw IoError("read failed for '" + path + "'");
    return m;
}

#define FILTEIG_INSTANTIATE(T)                                                                                         \
    template DenseMatrix<T> generate<T>(const SpectrumSpec&, std::uint64_t);                                           \
    template DenseMatrix<T> generate_with_spectrum<T>(std::span<const double>, std::uint64_t);                         \
    template DenseMatrix<T> random_initial_vectors<T>(Index, Index, int, std::uint64_t);                               \
    template void write_matrix<T>(ConstMatrixView<T>, const std::string&);                                             \
    template DenseMatrix<T> read_matrix<T>(const std::string&, Index, Index);

FILTEIG_INSTANTIATE(double)
FILTEIG_INSTANTIATE(std::complex<double>)

} // namespace filteig
