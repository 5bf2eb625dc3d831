#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace filteig
{

using Index = std::ptrdiff_t;

template <typename T>
struct ScalarTraits
{
    using Real = T;
    static constexpr bool is_complex = false;
};

template <typename R>
struct ScalarTraits<std::complex<R>>
{
    using Real = R;
    static constexpr bool is_complex = true;
};

template <typename T>
using Base = typename ScalarTraits<T>::Real;

template <typename T>
inline constexpr bool is_complex_v = ScalarTraits<T>::is_complex;

template <typename T>
constexpr T conj(T x) noexcept
{
    if constexpr (is_complex_v<T>)
        return std::conj(x);
    else
        return x;
}

template <typename T>
constexpr Base<T> real_part(T x) noexcept
{
    if constexpr (is_complex_v<T>)
        return x.real();
    else
        return x;
}

/// |x|^2 without the hypot call std::norm/abs would make.
template <typename T>
constexpr Base<T> abs2(T x) noexcept
{
    if constexpr (is_complex_v<T>)
        return x.real() * x.real() + x.imag() * x.imag();
    else
        return x * x;
}

/// Unit round-off of the working precision (2^-53 for double).
template <typename T>
constexpr Base<T> unit_roundoff() noexcept
{
    return std::numeric_limits<Base<T>>::epsilon() / 2;
}

enum class ScalarKind
{
    Real64,
    Complex128
};

template <typename T>
constexpr ScalarKind scalar_kind_of()
{
    if constexpr (std::is_same_v<T, double>)
        return ScalarKind::Real64;
    else
    {
        static_assert(std::is_same_v<T, std::complex<double>>, "unsupported scalar");
        return ScalarKind::Complex128;
    }
}

inline std::size_t element_bytes(ScalarKind k)
{
    return k == ScalarKind::Real64 ? 8 : 16;
}

inline const char* to_string(ScalarKind k)
{
    return k == ScalarKind::Real64 ? "r64" : "c128";
}

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error
{
  public:
    using Error::Error;
};

class DimensionError : public Error
{
  public:
    using Error::Error;
};

class IoError : public Error
{
  public:
    using Error::Error;
};

class KernelError : public Error
{
  public:
    using Error::Error;
};

class UnsupportedRedistribution : public ConfigError
{
  public:
    using ConfigError::ConfigError;
};

} // namespace filteig
