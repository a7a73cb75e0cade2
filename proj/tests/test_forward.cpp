#include <cmath>
#include <cstring>
#include <numbers>

#include <gtest/gtest.h>

#include "bpr/forward.hpp"
#include "bpr/rng.hpp"

using namespace bpr;
using namespace std::complex_literals;

namespace {

double aligned_error(std::span<const cplx> ref, std::span<const cplx> est, cplx c) {
    double e = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) e += std::norm(ref[i] - c * est[i]);
    return std::sqrt(e);
}

// Brute force over a uniform phase grid; independent of the closed form.
double grid_search_error(std::span<const cplx> ref, std::span<const cplx> est, int points) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < points; ++k) {
        const cplx c = std::polar(1.0, 2.0 * std::numbers::pi * k / points);
        best = std::min(best, aligned_error(ref, est, c));
    }
    return best;
}

}  // namespace

TEST(Apply, Examples) {
    const ComplexVec id = bpr::apply(DenseMatrix::identity(2), ComplexVec{3.0 + 4.0i, 1.0});
    EXPECT_EQ(id, (ComplexVec{3.0 + 4.0i, 1.0}));

    const DenseMatrix h(2, 2, {1.0, 1.0, 1.0, -1.0});
    const ComplexVec u = bpr::apply(h, ComplexVec{1.0, 1.0i});
    EXPECT_EQ(u, (ComplexVec{1.0 + 1.0i, 1.0 - 1.0i}));

    const KRBDMatrix k = make_krbd({DenseMatrix(1, 1, {2.0}), DenseMatrix(1, 1, {3.0})});
    EXPECT_EQ(bpr::apply(k, ComplexVec{1.0, 1.0i}), (ComplexVec{2.0, 3.0i}));

    EXPECT_THROW(bpr::apply(h, ComplexVec{1.0}), DimensionMismatch);
}

TEST(Measure, Examples) {
    const auto id = DenseMatrix::identity(1);
    EXPECT_EQ(measure(id, ComplexVec{3.0 + 4.0i}, MeasurementKind::magnitude), RealVec{5.0});
    EXPECT_EQ(measure(id, ComplexVec{3.0 + 4.0i}, MeasurementKind::intensity), RealVec{25.0});

    const DenseMatrix h(2, 2, {1.0, 1.0, 1.0, -1.0});
    const RealVec a = measure(h, ComplexVec{1.0, 1.0i}, MeasurementKind::magnitude);
    EXPECT_NEAR(a[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(a[1], std::sqrt(2.0), 1e-15);

    const DenseMatrix g = random_gaussian_matrix(7, 4, 1);
    for (double v : measure(g, ComplexVec(4), MeasurementKind::intensity)) EXPECT_EQ(v, 0.0);
}

TEST(Measure, IntensityIsSquaredMagnitude) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const DenseMatrix h = random_gaussian_matrix(20, 6, s);
        const ComplexVec x = random_complex_gaussian(6, 1000 + s);
        const RealVec a = measure(h, x, MeasurementKind::magnitude);
        const RealVec b = measure(h, x, MeasurementKind::intensity);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(b[i] - a[i] * a[i]), 1e-12 * b[i]);
    }
}

TEST(Noise, InfiniteSnrIsIdentity) {
    const RealVec b{1.0, 2.0, 3.0};
    EXPECT_EQ(add_noise_intensity(b, {std::numeric_limits<double>::infinity(), 3}), b);
}

TEST(Noise, EmpiricalVarianceMatchesSnr) {
    const RealVec b(100000, 1.0);
    const RealVec y = add_noise_intensity(b, {30.0, 12345});
    double var = 0.0;
    for (double v : y) var += (v - 1.0) * (v - 1.0);
    var /= static_cast<double>(y.size());
    EXPECT_NEAR(var, 1e-3, 0.05 * 1e-3);
}

TEST(Noise, NegativeValuesAreClamped) {
    // sigma = 100 at -40 dB: a negative draw drives the single entry below zero
    const RealVec b{1.0};
    int clamped = 0;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const RealVec y = add_noise_intensity(b, {-40.0, seed});
        ASSERT_GE(y[0], 0.0);
        if (y[0] == 0.0) ++clamped;
    }
    EXPECT_GT(clamped, 10);
}

TEST(Noise, SameSeedSameBits) {
    const RealVec b = measure(random_gaussian_matrix(50, 5, 1), random_complex_gaussian(5, 2), MeasurementKind::intensity);
    const RealVec y1 = add_noise_intensity(b, {20.0, 99});
    const RealVec y2 = add_noise_intensity(b, {20.0, 99});
    EXPECT_EQ(std::memcmp(y1.data(), y2.data(), y1.size() * sizeof(double)), 0);
    EXPECT_NE(add_noise_intensity(b, {20.0, 100}), y1);
}

TEST(AlignGlobalPhase, Examples) {
    const ComplexVec x = random_complex_gaussian(16, 4);
    ComplexVec ix(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ix[i] = 1.0i * x[i];
    EXPECT_LE(std::abs(align_global_phase(x, ix) - (-1.0i)), 1e-12);
    EXPECT_LE(std::abs(align_global_phase(x, x) - 1.0), 1e-12);
    EXPECT_EQ(align_global_phase(ComplexVec{1.0, 0.0}, ComplexVec{0.0, 1.0}), cplx(1.0));
    EXPECT_THROW(align_global_phase(x, ComplexVec(3)), DimensionMismatch);
}

TEST(AlignGlobalPhase, AgreesWithGridSearch) {
    CounterRng rng(2024);
    for (int t = 0; t < 50; ++t) {
        const ComplexVec ref = random_complex_gaussian(32, rng.next_u64());
        ComplexVec est(ref.size());
        const cplx rot = std::polar(1.0, 0.7 + rng.uniform());
        for (std::size_t i = 0; i < ref.size(); ++i) est[i] = rot * ref[i] + 0.05 * rng.complex_normal();
        const double closed = aligned_error(ref, est, align_global_phase(ref, est));
        const double grid = grid_search_error(ref, est, 10000);
        EXPECT_LE(closed, grid * (1.0 + 1e-12));
        // achieved NMSE of both alignments
        const double scale = norm2_sq(ref);
        EXPECT_LE(std::abs(closed * closed - grid * grid) / scale, 1e-6);
        EXPECT_NEAR(nmse(ref, est), closed * closed / scale, 1e-12);
    }
}

TEST(Nmse, Examples) {
    const ComplexVec x = random_complex_gaussian(24, 8);
    ComplexVec rot(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) rot[i] = std::polar(1.0, std::numbers::pi / 3) * x[i];
    EXPECT_LE(nmse(x, rot), 1e-24);
    EXPECT_EQ(nmse(x, ComplexVec(x.size())), 1.0);
    EXPECT_THROW(nmse(ComplexVec(3), ComplexVec(3)), InvalidArgument);
}

TEST(Nmse, UnitPerturbationBound) {
    ComplexVec x = random_complex_gaussian(10, 5);
    const double n = norm2(x);
    for (auto& e : x) e /= n;
    for (double eps : {1e-1, 1e-3, 1e-6}) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            ComplexVec y = x;
            y[k] += eps;
            EXPECT_LE(nmse(x, y), eps * eps * (1.0 + 1e-9));
        }
    }
}

TEST(Nmse, InvariantToGlobalPhase) {
    CounterRng rng(17);
    const ComplexVec x = random_complex_gaussian(40, 1);
    ComplexVec est = x;
    for (auto& e : est) e += 0.1 * rng.complex_normal();
    const double base = nmse(x, est);
    for (int t = 0; t < 100; ++t) {
        const cplx c = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
        ComplexVec r1 = est, r2 = x;
        for (auto& e : r1) e *= c;
        for (auto& e : r2) e *= c;
        EXPECT_NEAR(nmse(x, r1), base, 1e-12);
        EXPECT_NEAR(nmse(r2, est), base, 1e-12);
    }
}

TEST(Residual, Examples) {
    const DenseMatrix h = random_gaussian_matrix(30, 5, 3);
    const ComplexVec x = random_complex_gaussian(5, 4);
    const RealVec a = measure(h, x, MeasurementKind::magnitude);
    EXPECT_LE(residual(h, a, x), 1e-15);
    EXPECT_DOUBLE_EQ(residual(h, a, ComplexVec(5)), 1.0);
    EXPECT_EQ(residual(DenseMatrix::identity(1), RealVec{5.0}, ComplexVec{3.0 + 4.0i}), 0.0);
    EXPECT_THROW(residual(h, RealVec(30, 0.0), x), ZeroMeasurements);
}
