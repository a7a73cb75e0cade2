#pragma once
// Domain containers: complex vectors, dense matrices, K-rectangular block
// diagonal (K-RBD) matrices and measurement instances.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bpr/errors.hpp"

namespace bpr {

using cplx = std::complex<double>;
using ComplexVec = std::vector<cplx>;
using RealVec = std::vector<double>;

namespace detail {

// Plain arithmetic products. std::complex operator* goes through the
// Annex G NaN/Inf recovery path which is both slow and unnecessary here.
inline cplx mul(cplx a, cplx b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// conj(a) * b
inline cplx conj_mul(cplx a, cplx b) noexcept {
    return {a.real() * b.real() + a.imag() * b.imag(), a.real() * b.imag() - a.imag() * b.real()};
}

inline double abs2(cplx a) noexcept { return a.real() * a.real() + a.imag() * a.imag(); }

inline bool finite(cplx a) noexcept { return std::isfinite(a.real()) && std::isfinite(a.imag()); }

}  // namespace detail

inline void require_finite(std::span<const cplx> v, const char* what) {
    for (const auto& e : v) {
        if (!detail::finite(e)) {
            throw InvalidArgument(std::string(what) + ": non-finite entry");
        }
    }
}

inline double norm2_sq(std::span<const cplx> v) noexcept {
    double s = 0.0;
    for (const auto& e : v) s += detail::abs2(e);
    return s;
}

inline double norm2(std::span<const cplx> v) noexcept { return std::sqrt(norm2_sq(v)); }

/// Row-major dense complex matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {
        if (rows == 0 || cols == 0) throw InvalidArgument("DenseMatrix: zero-sized shape");
    }

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (rows == 0 || cols == 0) throw InvalidArgument("DenseMatrix: zero-sized shape");
        if (data_.size() != rows * cols) throw DimensionMismatch("DenseMatrix: entry count != rows*cols");
        require_finite(data_, "DenseMatrix");
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    cplx& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<const cplx> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<cplx> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const cplx> entries() const noexcept { return data_; }
    std::span<cplx> entries() noexcept { return data_; }

    /// out = H x. Each output is accumulated in ascending column order.
    void multiply(std::span<const cplx> x, std::span<cplx> out) const noexcept {
        const cplx* p = data_.data();
        for (std::size_t r = 0; r < rows_; ++r, p += cols_) {
            double re = 0.0, im = 0.0;
            for (std::size_t c = 0; c < cols_; ++c) {
                const double ar = p[c].real(), ai = p[c].imag();
                const double br = x[c].real(), bi = x[c].imag();
                re += ar * br - ai * bi;
                im += ar * bi + ai * br;
            }
            out[r] = {re, im};
        }
    }

    /// out = H^H v, accumulated in ascending row order.
    void multiply_adjoint(std::span<const cplx> v, std::span<cplx> out) const noexcept {
        std::fill(out.begin(), out.end(), cplx{});
        const cplx* p = data_.data();
        for (std::size_t r = 0; r < rows_; ++r, p += cols_) {
            const double vr = v[r].real(), vi = v[r].imag();
            for (std::size_t c = 0; c < cols_; ++c) {
                const double ar = p[c].real(), ai = p[c].imag();
                out[c] = {out[c].real() + ar * vr + ai * vi, out[c].imag() + ar * vi - ai * vr};
            }
        }
    }

    RealVec row_norms_sq() const {
        RealVec n(rows_);
        for (std::size_t r = 0; r < rows_; ++r) n[r] = norm2_sq(row(r));
        return n;
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

/// Row and column sizes of the K diagonal blocks. Blocks may be unequal.
class BlockPartition {
public:
    BlockPartition() = default;

    BlockPartition(std::vector<std::size_t> row_sizes, std::vector<std::size_t> col_sizes)
        : row_sizes_(std::move(row_sizes)), col_sizes_(std::move(col_sizes)) {
        if (row_sizes_.empty()) throw InvalidArgument("BlockPartition: K must be >= 1");
        if (row_sizes_.size() != col_sizes_.size())
            throw DimensionMismatch("BlockPartition: row and column size lists differ in length");
        for (std::size_t i = 0; i < row_sizes_.size(); ++i) {
            if (row_sizes_[i] == 0 || col_sizes_[i] == 0)
                throw InvalidArgument("BlockPartition: block " + std::to_string(i) + " is zero-sized");
        }
        row_offsets_.resize(row_sizes_.size() + 1, 0);
        col_offsets_.resize(col_sizes_.size() + 1, 0);
        std::partial_sum(row_sizes_.begin(), row_sizes_.end(), row_offsets_.begin() + 1);
        std::partial_sum(col_sizes_.begin(), col_sizes_.end(), col_offsets_.begin() + 1);
    }

    /// K blocks of size (M/K) x (N/K); both divisions must be exact.
    static BlockPartition equal(std::size_t M, std::size_t N, std::size_t K) {
        if (K == 0) throw InvalidArgument("BlockPartition::equal: K must be >= 1");
        if (M % K != 0 || N % K != 0)
            throw InvalidArgument("BlockPartition::equal: M and N must be divisible by K");
        return {std::vector<std::size_t>(K, M / K), std::vector<std::size_t>(K, N / K)};
    }

    std::size_t num_blocks() const noexcept { return row_sizes_.size(); }
    std::size_t total_rows() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.back(); }
    std::size_t total_cols() const noexcept { return col_offsets_.empty() ? 0 : col_offsets_.back(); }

    const std::vector<std::size_t>& row_sizes() const noexcept { return row_sizes_; }
    const std::vector<std::size_t>& col_sizes() const noexcept { return col_sizes_; }
    std::size_t row_offset(std::size_t i) const noexcept { return row_offsets_[i]; }
    std::size_t col_offset(std::size_t i) const noexcept { return col_offsets_[i]; }

    friend bool operator==(const BlockPartition& a, const BlockPartition& b) {
        return a.row_sizes_ == b.row_sizes_ && a.col_sizes_ == b.col_sizes_;
    }

private:
    std::vector<std::size_t> row_sizes_;
    std::vector<std::size_t> col_sizes_;
    std::vector<std::size_t> row_offsets_;
    std::vector<std::size_t> col_offsets_;
};

/// K-rectangular block diagonal matrix. Only the diagonal blocks are stored.
class KRBDMatrix {
public:
    KRBDMatrix() = default;

    KRBDMatrix(BlockPartition partition, std::vector<DenseMatrix> blocks)
        : partition_(std::move(partition)), blocks_(std::move(blocks)) {
        if (blocks_.size() != partition_.num_blocks())
            throw DimensionMismatch("KRBDMatrix: block count does not match partition");
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            if (blocks_[i].rows() != partition_.row_sizes()[i] || blocks_[i].cols() != partition_.col_sizes()[i])
                throw DimensionMismatch("KRBDMatrix: block " + std::to_string(i) + " shape does not match partition");
        }
    }

    std::size_t rows() const noexcept { return partition_.total_rows(); }
    std::size_t cols() const noexcept { return partition_.total_cols(); }
    std::size_t num_blocks() const noexcept { return blocks_.size(); }
    const BlockPartition& partition() const noexcept { return partition_; }
    const std::vector<DenseMatrix>& blocks() const noexcept { return blocks_; }
    const DenseMatrix& block(std::size_t i) const noexcept { return blocks_[i]; }

    void multiply(std::span<const cplx> x, std::span<cplx> out) const noexcept {
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            blocks_[i].multiply(x.subspan(partition_.col_offset(i), partition_.col_sizes()[i]),
                                out.subspan(partition_.row_offset(i), partition_.row_sizes()[i]));
        }
    }

    void multiply_adjoint(std::span<const cplx> v, std::span<cplx> out) const noexcept {
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            blocks_[i].multiply_adjoint(v.subspan(partition_.row_offset(i), partition_.row_sizes()[i]),
                                        out.subspan(partition_.col_offset(i), partition_.col_sizes()[i]));
        }
    }

    RealVec row_norms_sq() const {
        RealVec n;
        n.reserve(rows());
        for (const auto& b : blocks_) {
            auto bn = b.row_norms_sq();
            n.insert(n.end(), bn.begin(), bn.end());
        }
        return n;
    }

    friend bool operator==(const KRBDMatrix&, const KRBDMatrix&) = default;

private:
    BlockPartition partition_;
    std::vector<DenseMatrix> blocks_;
};

/// Anything usable as a measurement operator by the solvers.
template <typename T>
concept LinearOperator = requires(const T& op, std::span<const cplx> in, std::span<cplx> out) {
    { op.rows() } -> std::convertible_to<std::size_t>;
    { op.cols() } -> std::convertible_to<std::size_t>;
    op.multiply(in, out);
    op.multiply_adjoint(in, out);
    { op.row_norms_sq() } -> std::convertible_to<RealVec>;
};

/// Builds a K-RBD matrix whose partition is read off the block shapes.
inline KRBDMatrix make_krbd(std::vector<DenseMatrix> blocks) {
    if (blocks.empty()) throw InvalidArgument("make_krbd: empty block list");
    std::vector<std::size_t> rs, cs;
    for (const auto& b : blocks) {
        if (b.rows() == 0 || b.cols() == 0) throw InvalidArgument("make_krbd: zero-sized block");
        require_finite(b.entries(), "make_krbd");
        rs.push_back(b.rows());
        cs.push_back(b.cols());
    }
    return {BlockPartition(std::move(rs), std::move(cs)), std::move(blocks)};
}

/// Extracts the diagonal blocks of `full`. Throws OffBlockMass naming the
/// largest off-block entry when any has modulus above `tol`.
inline KRBDMatrix krbd_from_dense(const DenseMatrix& full, const BlockPartition& partition, double tol = 0.0) {
    if (partition.total_rows() != full.rows() || partition.total_cols() != full.cols())
        throw DimensionMismatch("krbd_from_dense: partition sums do not match matrix shape");

    // block index owning each column
    std::vector<std::size_t> col_block(full.cols());
    for (std::size_t i = 0; i < partition.num_blocks(); ++i)
        std::fill_n(col_block.begin() + static_cast<std::ptrdiff_t>(partition.col_offset(i)),
                    partition.col_sizes()[i], i);

    double worst = -1.0;
    std::size_t wr = 0, wc = 0;
    std::size_t blk = 0;
    for (std::size_t r = 0; r < full.rows(); ++r) {
        while (r >= partition.row_offset(blk + 1)) ++blk;
        for (std::size_t c = 0; c < full.cols(); ++c) {
            if (col_block[c] == blk) continue;
            const double m = std::abs(full(r, c));
            if (m > tol && m > worst) {
                worst = m;
                wr = r;
                wc = c;
            }
        }
    }
    if (worst >= 0.0) throw OffBlockMass(wr, wc, worst);

    std::vector<DenseMatrix> blocks;
    blocks.reserve(partition.num_blocks());
    for (std::size_t i = 0; i < partition.num_blocks(); ++i) {
        DenseMatrix b(partition.row_sizes()[i], partition.col_sizes()[i]);
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t c = 0; c < b.cols(); ++c)
                b(r, c) = full(partition.row_offset(i) + r, partition.col_offset(i) + c);
        blocks.push_back(std::move(b));
    }
    return {partition, std::move(blocks)};
}

/// Materializes the full M x N matrix including the off-block zeros.
inline DenseMatrix densify(const KRBDMatrix& m) {
    DenseMatrix full(m.rows(), m.cols());
    const auto& p = m.partition();
    for (std::size_t i = 0; i < m.num_blocks(); ++i) {
        const auto& b = m.block(i);
        for (std::size_t r = 0; r < b.rows(); ++r)
            std::copy(b.row(r).begin(), b.row(r).end(),
                      full.row(p.row_offset(i) + r).begin() + static_cast<std::ptrdiff_t>(p.col_offset(i)));
    }
    return full;
}

inline std::vector<ComplexVec> split_signal(std::span<const cplx> x, const BlockPartition& partition) {
    if (x.size() != partition.total_cols())
        throw DimensionMismatch("split_signal: signal length " + std::to_string(x.size()) +
                                " != partition width " + std::to_string(partition.total_cols()));
    std::vector<ComplexVec> parts;
    parts.reserve(partition.num_blocks());
    for (std::size_t i = 0; i < partition.num_blocks(); ++i) {
        auto s = x.subspan(partition.col_offset(i), partition.col_sizes()[i]);
        parts.emplace_back(s.begin(), s.end());
    }
    return parts;
}

inline ComplexVec concat_blocks(const std::vector<ComplexVec>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_blocks: no parts");
    ComplexVec x;
    std::size_t n = 0;
    for (const auto& p : parts) n += p.size();
    x.reserve(n);
    for (const auto& p : parts) x.insert(x.end(), p.begin(), p.end());
    return x;
}

enum class MeasurementKind { magnitude, intensity };

using Operator = std::variant<DenseMatrix, KRBDMatrix>;

inline std::size_t op_rows(const Operator& op) {
    return std::visit([](const auto& m) { return m.rows(); }, op);
}
inline std::size_t op_cols(const Operator& op) {
    return std::visit([](const auto& m) { return m.cols(); }, op);
}

/// A phase retrieval problem: recover x from measurements of |op x| or |op x|^2.
struct PRInstance {
    Operator op;
    RealVec measurements;
    MeasurementKind kind = MeasurementKind::intensity;
    std::optional<double> snr_db;

    void validate() const {
        if (measurements.size() != op_rows(op))
            throw DimensionMismatch("PRInstance: measurement count != operator rows");
        for (double v : measurements)
            if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("PRInstance: measurements must be finite and >= 0");
    }
};

/// Block problem plus the L = round(beta*K) global tuning measurements,
/// stored separately from the M block rows.
struct BlockPRInstance {
    KRBDMatrix op;
    RealVec measurements;  // length M
    MeasurementKind kind = MeasurementKind::intensity;
    std::optional<double> snr_db;
    DenseMatrix tuning_matrix;      // L x N
    RealVec tuning_measurements;    // length L, same kind as `measurements`
    double beta = 20.0;

    std::size_t num_blocks() const noexcept { return op.num_blocks(); }

    void validate() const {
        if (measurements.size() != op.rows())
            throw DimensionMismatch("BlockPRInstance: measurement count != operator rows");
        if (beta <= 0.0) throw InvalidArgument("BlockPRInstance: beta must be positive");
        for (double v : measurements)
            if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("BlockPRInstance: measurements must be finite and >= 0");
        if (op.num_blocks() > 1) {
            const auto L = static_cast<std::size_t>(std::lround(beta * static_cast<double>(op.num_blocks())));
            if (tuning_matrix.rows() != L)
                throw DimensionMismatch("BlockPRInstance: tuning rows != round(beta*K)");
            if (tuning_matrix.cols() != op.cols())
                throw DimensionMismatch("BlockPRInstance: tuning matrix width != N");
            if (tuning_measurements.size() != L)
                throw DimensionMismatch("BlockPRInstance: tuning measurement count != L");
            for (double v : tuning_measurements)
                if (!std::isfinite(v) || v < 0.0)
                    throw InvalidArgument("BlockPRInstance: tuning measurements must be finite and >= 0");
        }
    }
};

}  // namespace bpr
