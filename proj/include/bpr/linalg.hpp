#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "bpr/core.hpp"

namespace bpr {

/// Estimate of the largest singular value by power iteration on H^H H.
inline double largest_singular_value(const DenseMatrix& h, int iters = 50) {
    ComplexVec v(h.cols(), cplx{1.0, 0.0});
    ComplexVec u(h.rows());
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        const double nv = norm2(v);
        if (nv == 0.0) return 0.0;
        for (auto& e : v) e /= nv;
        h.multiply(v, u);
        sigma = norm2(u);
        h.multiply_adjoint(u, v);
    }
    return sigma;
}

/// Householder QR of a tall matrix, applied as the minimizer of ||H z - v||_2.
class LeastSquaresOperator {
public:
    LeastSquaresOperator() = default;

    explicit LeastSquaresOperator(const DenseMatrix& h) : rows_(h.rows()), cols_(h.cols()) {
        if (rows_ < cols_) throw DimensionMismatch("pinv_factor: operator must have rows >= cols");
        const double smax = largest_singular_value(h);
        // column-major working copy; reflectors overwrite the lower part
        qr_.assign(rows_ * cols_, cplx{});
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) qr_[c * rows_ + r] = h(r, c);
        diag_.resize(cols_);

        for (std::size_t k = 0; k < cols_; ++k) {
            cplx* col = &qr_[k * rows_];
            double xnorm_sq = 0.0;
            for (std::size_t r = k; r < rows_; ++r) xnorm_sq += detail::abs2(col[r]);
            const double xnorm = std::sqrt(xnorm_sq);
            if (xnorm <= 1e-10 * smax || xnorm == 0.0)
                throw RankDeficient("pinv_factor: column " + std::to_string(k) + " is dependent within tolerance");
            const double x0abs = std::abs(col[k]);
            const cplx sign = x0abs == 0.0 ? cplx{1.0, 0.0} : col[k] / x0abs;
            const cplx alpha = -sign * xnorm;
            // v = x - alpha e1, normalized to unit length
            col[k] -= alpha;
            const double vnorm = std::sqrt(xnorm_sq - detail::abs2(col[k] + alpha) + detail::abs2(col[k]));
            for (std::size_t r = k; r < rows_; ++r) col[r] /= vnorm;
            diag_[k] = alpha;

            for (std::size_t j = k + 1; j < cols_; ++j) {
                cplx* cj = &qr_[j * rows_];
                cplx s{};
                for (std::size_t r = k; r < rows_; ++r) s += detail::conj_mul(col[r], cj[r]);
                s *= 2.0;
                for (std::size_t r = k; r < rows_; ++r) cj[r] -= detail::mul(s, col[r]);
            }
        }
        double rmin = std::abs(diag_[0]);
        for (const auto& d : diag_) rmin = std::min(rmin, std::abs(d));
        if (rmin <= 1e-10 * smax) throw RankDeficient("pinv_factor: operator is rank deficient within tolerance");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    /// z = argmin ||H z - v||. `work` must hold rows() entries.
    void solve(std::span<const cplx> v, std::span<cplx> z, std::span<cplx> work) const {
        std::copy(v.begin(), v.end(), work.begin());
        for (std::size_t k = 0; k < cols_; ++k) {
            const cplx* col = &qr_[k * rows_];
            cplx s{};
            for (std::size_t r = k; r < rows_; ++r) s += detail::conj_mul(col[r], work[r]);
            s *= 2.0;
            for (std::size_t r = k; r < rows_; ++r) work[r] -= detail::mul(s, col[r]);
        }
        for (std::size_t kk = cols_; kk-- > 0;) {
            cplx s = work[kk];
            for (std::size_t j = kk + 1; j < cols_; ++j) s -= detail::mul(qr_[j * rows_ + kk], z[j]);
            z[kk] = s / diag_[kk];
        }
    }

    ComplexVec solve(std::span<const cplx> v) const {
        if (v.size() != rows_) throw DimensionMismatch("LeastSquaresOperator::solve: length mismatch");
        ComplexVec z(cols_), work(rows_);
        solve(v, z, work);
        return z;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> qr_;
    ComplexVec diag_;
};

inline LeastSquaresOperator pinv_factor(const DenseMatrix& h) { return LeastSquaresOperator(h); }

}  // namespace bpr
