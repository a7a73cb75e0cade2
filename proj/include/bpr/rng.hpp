#pragma once
// Counter-based deterministic random numbers. Output i of a stream is a pure
// function of (seed, i), so results never depend on scheduling or on any
// ambient generator state.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "bpr/core.hpp"

namespace bpr {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed, e.g. one per block or per restart.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on (0, 1), never exactly 0.
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Circular complex Gaussian with E|z|^2 = 1.
    cplx complex_normal() noexcept {
        const double re = normal() * std::numbers::sqrt2 * 0.5;
        const double im = normal() * std::numbers::sqrt2 * 0.5;
        return {re, im};
    }

    bool bernoulli_half() noexcept { return (next_u64() >> 63) != 0; }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline ComplexVec random_complex_gaussian(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    ComplexVec v(n);
    for (auto& e : v) e = rng.complex_normal();
    return v;
}

inline DenseMatrix random_gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    CounterRng rng(seed);
    DenseMatrix m(rows, cols);
    for (auto& e : m.entries()) e = rng.complex_normal();
    return m;
}

/// Entries drawn from {0, 1} with probability 1/2 each.
inline DenseMatrix random_binary_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    CounterRng rng(seed);
    DenseMatrix m(rows, cols);
    for (auto& e : m.entries()) e = rng.bernoulli_half() ? 1.0 : 0.0;
    return m;
}

}  // namespace bpr
