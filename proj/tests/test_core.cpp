#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "bpr/core.hpp"
#include "bpr/forward.hpp"
#include "bpr/rng.hpp"

using namespace bpr;
using namespace std::complex_literals;

namespace {

bool bitwise_equal(std::span<const cplx> a, std::span<const cplx> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(cplx)) == 0;
}

// Random partition of n columns into k nonempty parts, with rows = alpha * cols.
BlockPartition random_partition(CounterRng& rng, std::size_t n, std::size_t k, std::size_t alpha) {
    std::vector<std::size_t> cols(k, 1);
    for (std::size_t extra = n - k; extra > 0; --extra) cols[rng.next_u64() % k] += 1;
    std::vector<std::size_t> rows;
    for (auto c : cols) rows.push_back(alpha * c);
    return {rows, cols};
}

}  // namespace

TEST(MakeKrbd, TwoColumnBlocks) {
    auto k = make_krbd({DenseMatrix(2, 1), DenseMatrix(2, 1)});
    EXPECT_EQ(k.rows(), 4u);
    EXPECT_EQ(k.cols(), 2u);
    EXPECT_EQ(k.num_blocks(), 2u);
}

TEST(MakeKrbd, SingleBlockIsDense) {
    auto k = make_krbd({random_gaussian_matrix(5, 3, 1)});
    EXPECT_EQ(k.num_blocks(), 1u);
    EXPECT_EQ(densify(k), k.block(0));
}

TEST(MakeKrbd, UnequalBlocksFollowOversampling) {
    auto k = make_krbd({DenseMatrix(3, 1), DenseMatrix(6, 2)});
    EXPECT_EQ(k.partition().row_sizes(), (std::vector<std::size_t>{3, 6}));
    EXPECT_EQ(k.partition().col_sizes(), (std::vector<std::size_t>{1, 2}));
    // m_i = ceil(alpha * n_i) with alpha = 3
    for (std::size_t i = 0; i < 2; ++i) {
        const double n_i = static_cast<double>(k.partition().col_sizes()[i]);
        EXPECT_EQ(k.partition().row_sizes()[i], static_cast<std::size_t>(std::ceil(3.0 * n_i)));
    }
}

TEST(MakeKrbd, Errors) {
    EXPECT_THROW(make_krbd({}), InvalidArgument);
    EXPECT_THROW(make_krbd({DenseMatrix{}}), InvalidArgument);
    EXPECT_THROW(DenseMatrix(0, 3), InvalidArgument);
    EXPECT_THROW(DenseMatrix(2, 2, {1.0, 2.0, std::nan(""), 0.0}), InvalidArgument);
}

TEST(BlockPartition, EqualConstructorRequiresExactDivision) {
    auto p = BlockPartition::equal(24, 8, 4);
    EXPECT_EQ(p.num_blocks(), 4u);
    EXPECT_EQ(p.row_offset(2), 12u);
    EXPECT_EQ(p.col_offset(3), 6u);
    EXPECT_THROW(BlockPartition::equal(24, 9, 4), InvalidArgument);
    EXPECT_THROW(BlockPartition::equal(24, 8, 0), InvalidArgument);
    EXPECT_THROW(BlockPartition({1, 2}, {1}), DimensionMismatch);
    EXPECT_THROW(BlockPartition({}, {}), InvalidArgument);
}

TEST(KrbdFromDense, IdentityTwoBlocks) {
    auto k = krbd_from_dense(DenseMatrix::identity(4), BlockPartition::equal(4, 4, 2));
    ASSERT_EQ(k.num_blocks(), 2u);
    EXPECT_EQ(k.block(0), DenseMatrix::identity(2));
    EXPECT_EQ(k.block(1), DenseMatrix::identity(2));
}

TEST(KrbdFromDense, ReportsOffendingEntry) {
    auto m = DenseMatrix::identity(4);
    m(0, 3) = 1.0;
    try {
        krbd_from_dense(m, BlockPartition::equal(4, 4, 2));
        FAIL() << "expected OffBlockMass";
    } catch (const OffBlockMass& e) {
        EXPECT_EQ(e.row(), 0u);
        EXPECT_EQ(e.col(), 3u);
        EXPECT_DOUBLE_EQ(e.modulus(), 1.0);
    }
}

TEST(KrbdFromDense, ReportsLargestOffender) {
    auto m = DenseMatrix::identity(4);
    m(0, 3) = 0.5;
    m(3, 1) = 2.0i;
    try {
        krbd_from_dense(m, BlockPartition::equal(4, 4, 2));
        FAIL() << "expected OffBlockMass";
    } catch (const OffBlockMass& e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_EQ(e.col(), 1u);
        EXPECT_DOUBLE_EQ(e.modulus(), 2.0);
    }
}

TEST(KrbdFromDense, ToleratesTinyPerturbation) {
    const auto p = BlockPartition::equal(8, 4, 2);
    DenseMatrix m = random_gaussian_matrix(8, 4, 42);
    // zero the off-block part, then perturb it below tolerance
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            if ((r < 4) != (c < 2)) m(r, c) = 1e-12;
    auto k = krbd_from_dense(m, p, 1e-9);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(k.block(i)(r, c), m(4 * i + r, 2 * i + c));
    EXPECT_THROW(krbd_from_dense(m, p, 0.0), OffBlockMass);
}

TEST(KrbdFromDense, ShapeMismatch) {
    EXPECT_THROW(krbd_from_dense(DenseMatrix::identity(4), BlockPartition::equal(6, 4, 2)), DimensionMismatch);
}

TEST(KrbdFromDense, DensifyRoundTripProperty) {
    CounterRng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 1 + rng.next_u64() % 5;
        const std::size_t n = k + rng.next_u64() % 12;
        const auto p = random_partition(rng, n, k, 1 + rng.next_u64() % 3);
        std::vector<DenseMatrix> blocks;
        for (std::size_t i = 0; i < k; ++i)
            blocks.push_back(random_gaussian_matrix(p.row_sizes()[i], p.col_sizes()[i], rng.next_u64()));
        const KRBDMatrix m(p, std::move(blocks));
        EXPECT_EQ(krbd_from_dense(densify(m), p, 0.0), m);
    }
}

TEST(SplitSignal, Examples) {
    const ComplexVec x{1.0, 2.0i, 3.0, 4.0};
    auto parts = split_signal(x, BlockPartition({2, 2}, {2, 2}));
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0], (ComplexVec{1.0, 2.0i}));
    EXPECT_EQ(parts[1], (ComplexVec{3.0, 4.0}));

    auto whole = split_signal(x, BlockPartition({4}, {4}));
    ASSERT_EQ(whole.size(), 1u);
    EXPECT_EQ(whole[0], x);

    const ComplexVec abcd{1.0 + 1.0i, 2.0, 3.0 - 1.0i, -4.0};
    auto uneven = split_signal(abcd, BlockPartition({1, 3}, {1, 3}));
    EXPECT_EQ(uneven[0], (ComplexVec{abcd[0]}));
    EXPECT_EQ(uneven[1], (ComplexVec{abcd[1], abcd[2], abcd[3]}));
}

TEST(SplitSignal, LengthMismatch) {
    EXPECT_THROW(split_signal(ComplexVec(5), BlockPartition::equal(4, 4, 2)), DimensionMismatch);
}

TEST(ConcatBlocks, Examples) {
    EXPECT_EQ(concat_blocks({{1.0}, {2.0}}), (ComplexVec{1.0, 2.0}));
    const ComplexVec single{1.0i, 2.0};
    EXPECT_EQ(concat_blocks({single}), single);
    EXPECT_THROW(concat_blocks({}), InvalidArgument);
}

TEST(ConcatBlocks, InvertsSplitBitwise) {
    const ComplexVec x = random_complex_gaussian(64, 3);
    EXPECT_TRUE(bitwise_equal(concat_blocks(split_signal(x, BlockPartition::equal(64, 64, 4))), x));

    CounterRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 1 + rng.next_u64() % 8;
        const std::size_t n = k + rng.next_u64() % 40;
        const auto p = random_partition(rng, n, k, 1);
        const ComplexVec v = random_complex_gaussian(n, rng.next_u64());
        EXPECT_TRUE(bitwise_equal(concat_blocks(split_signal(v, p)), v));
    }
}

TEST(KrbdApply, SingleBlockMatchesDenseBitwise) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const DenseMatrix h = random_gaussian_matrix(30, 7, s);
        const KRBDMatrix k = make_krbd({h});
        const ComplexVec x = random_complex_gaussian(7, 100 + s);
        EXPECT_TRUE(bitwise_equal(bpr::apply(k, x), bpr::apply(h, x)));
    }
}

TEST(KrbdApply, MatchesDensifiedProduct) {
    const KRBDMatrix k = make_krbd({random_gaussian_matrix(6, 2, 1), random_gaussian_matrix(9, 3, 2)});
    const DenseMatrix full = densify(k);
    const ComplexVec x = random_complex_gaussian(5, 3);
    const ComplexVec a = bpr::apply(k, x), b = bpr::apply(full, x);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-14);

    const ComplexVec v = random_complex_gaussian(15, 4);
    ComplexVec ka(5), fa(5);
    k.multiply_adjoint(v, ka);
    full.multiply_adjoint(v, fa);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_LE(std::abs(ka[i] - fa[i]), 1e-14);
}

TEST(BlockPRInstance, ValidatesTuningShape) {
    BlockPRInstance inst;
    inst.op = make_krbd({random_gaussian_matrix(6, 2, 1), random_gaussian_matrix(6, 2, 2)});
    inst.measurements.assign(12, 1.0);
    inst.beta = 4.0;
    inst.tuning_matrix = random_gaussian_matrix(8, 4, 3);
    inst.tuning_measurements.assign(8, 1.0);
    EXPECT_NO_THROW(inst.validate());
    inst.beta = 5.0;
    EXPECT_THROW(inst.validate(), DimensionMismatch);
    inst.beta = 4.0;
    inst.measurements[0] = -1.0;
    EXPECT_THROW(inst.validate(), InvalidArgument);
}
