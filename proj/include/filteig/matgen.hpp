#pragma once

// Test matrices with a prescribed spectrum, seeded starting vectors and the
// raw matrix file format (headerless, column-major, little-endian; complex
// values stored as interleaved re,im).

#include "filteig/matrix.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace filteig
{

struct SpectrumSpec
{
    double lo = 0.0;
    double hi = 1.0;
    Index n = 1;

    /// lo + k (hi - lo) / (n - 1), k = 0..n-1. lo == hi gives a constant spectrum.
    std::vector<double> eigenvalues() const;
};

/// Standard normal samples from a 64-bit Mersenne Twister via Box-Muller.
/// Fixed here rather than taken from <random> so streams are identical across
/// standard libraries.
class GaussianStream
{
  public:
    explicit GaussianStream(std::seed_seq& seq) : rng_(seq) {}
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next();

    template <typename T>
    T sample()
    {
        if constexpr (is_complex_v<T>)
        {
            const double re = next();
            return T(re, next());
        }
        else
            return next();
    }

  private:
    double uniform01(); // in (0, 1]
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// A = Q^H D Q with Q from the QR of a seeded Gaussian matrix, then A <- (A + A^H)/2.
template <typename T>
DenseMatrix<T> generate(const SpectrumSpec& spec, std::uint64_t seed);

/// A = Q^H diag(eigs) Q for arbitrary prescribed eigenvalues.
template <typename T>
DenseMatrix<T> generate_with_spectrum(std::span<const double> eigs, std::uint64_t seed);

/// n_r x n_e Gaussian block seeded by (seed, col_rank): identical for equal
/// col_rank in different column communicators.
template <typename T>
DenseMatrix<T> random_initial_vectors(Index n_r, Index n_e, int col_rank, std::uint64_t seed);

template <typename T>
void write_matrix(ConstMatrixView<T> m, const std::string& path);

/// Reads a rows x cols matrix (cols < 0 means square). Throws IoError when the
/// file length differs from rows*cols elements.
template <typename T>
DenseMatrix<T> read_matrix(const std::string& path, Index rows, Index cols = -1);

} // namespace filteig
