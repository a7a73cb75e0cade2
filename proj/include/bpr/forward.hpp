#pragma once
// Measurement models, intensity noise and recovery metrics.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "bpr/core.hpp"
#include "bpr/rng.hpp"

namespace bpr {

template <LinearOperator Op>
ComplexVec apply(const Op& op, std::span<const cplx> x) {
    if (op.cols() != x.size())
        throw DimensionMismatch("apply: operator has " + std::to_string(op.cols()) + " columns, signal has " +
                                std::to_string(x.size()) + " entries");
    ComplexVec out(op.rows());
    op.multiply(x, out);
    return out;
}

inline ComplexVec apply(const Operator& op, std::span<const cplx> x) {
    return std::visit([&](const auto& m) { return apply(m, x); }, op);
}

/// |op x| (magnitude) or |op x|^2 (intensity), elementwise.
template <typename Op>
RealVec measure(const Op& op, std::span<const cplx> x, MeasurementKind kind) {
    const ComplexVec u = apply(op, x);
    RealVec b(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        b[i] = kind == MeasurementKind::intensity ? detail::abs2(u[i]) : std::abs(u[i]);
    }
    return b;
}

/// Noise level in dB of mean(b^2)/sigma^2. An infinite value means noiseless.
struct NoiseSpec {
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;

    bool noiseless() const noexcept { return std::isinf(snr_db) && snr_db > 0; }
};

inline double noise_variance(std::span<const double> b, double snr_db) {
    if (b.empty()) return 0.0;
    double p = 0.0;
    for (double v : b) p += v * v;
    p /= static_cast<double>(b.size());
    return p * std::pow(10.0, -snr_db / 10.0);
}

/// b + w with w ~ N(0, sigma^2) i.i.d.; negative results are clamped to 0.
inline RealVec add_noise_intensity(std::span<const double> b, const NoiseSpec& spec) {
    RealVec out(b.begin(), b.end());
    if (spec.noiseless()) return out;
    const double sigma = std::sqrt(noise_variance(b, spec.snr_db));
    CounterRng rng(spec.seed);
    for (auto& v : out) {
        v += sigma * rng.normal();
        if (v < 0.0) v = 0.0;
    }
    return out;
}

inline RealVec intensities_to_magnitudes(std::span<const double> b) {
    RealVec a(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) a[i] = std::sqrt(std::max(b[i], 0.0));
    return a;
}

inline RealVec magnitudes_to_intensities(std::span<const double> a) {
    RealVec b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = a[i] * a[i];
    return b;
}

/// Unit-modulus c minimizing ||x_ref - c x_est||; 1 when the vectors are orthogonal.
inline cplx align_global_phase(std::span<const cplx> x_ref, std::span<const cplx> x_est) {
    if (x_ref.size() != x_est.size()) throw DimensionMismatch("align_global_phase: length mismatch");
    cplx ip{};
    for (std::size_t i = 0; i < x_ref.size(); ++i) ip += detail::conj_mul(x_est[i], x_ref[i]);
    const double m = std::abs(ip);
    if (m == 0.0) return 1.0;
    return ip / m;
}

/// ||x_ref - c x_est||^2 / ||x_ref||^2 after global phase alignment.
inline double nmse(std::span<const cplx> x_ref, std::span<const cplx> x_est) {
    const cplx c = align_global_phase(x_ref, x_est);
    const double ref = norm2_sq(x_ref);
    if (ref == 0.0) throw InvalidArgument("nmse: zero reference vector");
    double err = 0.0;
    for (std::size_t i = 0; i < x_ref.size(); ++i) err += detail::abs2(x_ref[i] - detail::mul(c, x_est[i]));
    return err / ref;
}

/// || |u| - a || / ||a|| for precomputed u = op z.
inline double magnitude_residual(std::span<const cplx> u, std::span<const double> a) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(u[i]) - a[i];
        num += d * d;
        den += a[i] * a[i];
    }
    if (den == 0.0) throw ZeroMeasurements("residual: zero measurement vector");
    return std::sqrt(num / den);
}

template <typename Op>
double residual(const Op& op, std::span<const double> a, std::span<const cplx> z) {
    const ComplexVec u = apply(op, z);
    if (u.size() != a.size()) throw DimensionMismatch("residual: measurement count != operator rows");
    return magnitude_residual(u, a);
}

}  // namespace bpr
