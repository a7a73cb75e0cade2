#pragma once
// Block-based phase retrieval:
//   1. blocking step: solve y_i = |H_i x_i| independently for every diagonal
//      block (optionally on a worker pool),
//   2. phase tuning: the block estimates are only known up to a phase each;
//      recover the K unit-modulus factors d_i from the extra global
//      measurements |A x| = |sum_i A_i xhat_i d_i|,
//   3. merge: xhat = [d_0 xhat_0, ..., d_{K-1} xhat_{K-1}].

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bpr/core.hpp"
#include "bpr/errors.hpp"
#include "bpr/forward.hpp"
#include "bpr/rng.hpp"
#include "bpr/solvers.hpp"

namespace bpr {

struct StageTimes {
    double blocking_s = 0.0;
    double tuning_s = 0.0;
    double merge_s = 0.0;
};

struct BlockSolveOutput {
    std::vector<ComplexVec> block_estimates;
    std::vector<SolverReport> per_block_reports;
    ComplexVec d_hat;
    SolverReport tuning_report;
    StageTimes stage_times;
};

/// One or more block solves failed. Completed blocks are kept for diagnosis.
class BlockSolveError : public Error {
public:
    struct Failure {
        std::size_t block;
        std::string message;
    };

    BlockSolveError(std::vector<Failure> failures, std::vector<std::optional<SolveResult>> partial)
        : Error(describe(failures)), failures_(std::move(failures)), partial_(std::move(partial)) {}

    const std::vector<Failure>& failures() const noexcept { return failures_; }
    /// Indexed by block; empty for failed blocks.
    const std::vector<std::optional<SolveResult>>& partial_results() const noexcept { return partial_; }

private:
    static std::string describe(const std::vector<Failure>& f) {
        std::string s = "block solve failed:";
        for (const auto& e : f) s += " [block " + std::to_string(e.block) + ": " + e.message + "]";
        return s;
    }

    std::vector<Failure> failures_;
    std::vector<std::optional<SolveResult>> partial_;
};

/// Seed used for block i; independent of execution order.
inline std::uint64_t block_seed(std::uint64_t seed, std::size_t block) {
    return derive_seed(seed, static_cast<std::uint64_t>(block));
}

inline std::size_t default_parallelism(std::size_t k) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return std::min(k, hw);
}

/// Solves every diagonal block with `spec`, running at most `parallelism`
/// blocks at a time. Results are keyed by block index, so the output does
/// not depend on the schedule.
inline std::vector<SolveResult> solve_blocks(const BlockPRInstance& inst, const SolverSpec& spec,
                                             std::size_t parallelism = 1) {
    const std::size_t k = inst.num_blocks();
    const auto& part = inst.op.partition();
    std::vector<std::optional<SolveResult>> slots(k);
    std::vector<std::string> errors(k);
    std::vector<char> failed(k, 0);

    auto run_block = [&](std::size_t i) {
        try {
            SolverSpec s = spec;
            s.seed = block_seed(spec.seed, i);
            const std::span<const double> yi(inst.measurements.data() + part.row_offset(i), part.row_sizes()[i]);
            slots[i] = solve(inst.op.block(i), yi, inst.kind, s);
        } catch (const std::exception& e) {
            errors[i] = e.what();
            failed[i] = 1;
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, k);
    if (workers == 1) {
        for (std::size_t i = 0; i < k; ++i) run_block(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < k; i = next.fetch_add(1)) run_block(i);
            });
        }
    }

    std::vector<BlockSolveError::Failure> failures;
    for (std::size_t i = 0; i < k; ++i)
        if (failed[i]) failures.push_back({i, errors[i]});
    if (!failures.empty()) throw BlockSolveError(std::move(failures), std::move(slots));

    std::vector<SolveResult> out;
    out.reserve(k);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// Column i is A_i xhat_i, A_i being the columns of A covering block i.
inline DenseMatrix build_tuning_matrix(const std::vector<ComplexVec>& estimates, const DenseMatrix& a,
                                       const BlockPartition& partition) {
    if (a.cols() != partition.total_cols()) throw DimensionMismatch("build_tuning_matrix: A width != N");
    if (estimates.size() != partition.num_blocks())
        throw DimensionMismatch("build_tuning_matrix: estimate count != K");
    for (std::size_t i = 0; i < estimates.size(); ++i)
        if (estimates[i].size() != partition.col_sizes()[i])
            throw DimensionMismatch("build_tuning_matrix: estimate " + std::to_string(i) + " has wrong length");

    DenseMatrix b(a.rows(), partition.num_blocks());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        for (std::size_t i = 0; i < estimates.size(); ++i) {
            const std::size_t off = partition.col_offset(i);
            cplx s{};
            for (std::size_t c = 0; c < estimates[i].size(); ++c) s += detail::mul(row[off + c], estimates[i][c]);
            b(r, i) = s;
        }
    }
    return b;
}

/// Recovers the per-block phase factors from |B d| = y_t (magnitudes).
/// The returned vector always has unit-modulus entries.
inline SolveResult phase_tune(const DenseMatrix& b, std::span<const double> y_t, const SolverSpec& spec) {
    SolveResult r = solve(b, y_t, MeasurementKind::magnitude, spec);
    if (spec.kind != SolverKind::unit_modulus_tuner) {
        for (auto& d : r.z) {
            const double m = std::abs(d);
            d = m < 1e-14 ? cplx{1.0, 0.0} : d / m;
        }
    }
    return r;
}

inline ComplexVec merge(const std::vector<ComplexVec>& estimates, std::span<const cplx> d_hat) {
    if (estimates.size() != d_hat.size()) throw DimensionMismatch("merge: estimate count != phase count");
    std::vector<ComplexVec> scaled = estimates;
    for (std::size_t i = 0; i < scaled.size(); ++i)
        for (auto& e : scaled[i]) e = detail::mul(d_hat[i], e);
    return concat_blocks(scaled);
}

/// Full pipeline: blocking step, tuning matrix, phase tuning, merge.
/// With a single block the tuning step is skipped and d_hat = [1].
inline std::pair<ComplexVec, BlockSolveOutput> block_pr_solve(const BlockPRInstance& inst, const SolverSpec& block_spec,
                                                              const SolverSpec& tune_spec,
                                                              std::size_t parallelism = 1) {
    inst.validate();
    BlockSolveOutput out;
    const std::size_t k = inst.num_blocks();

    auto t0 = detail::Clock::now();
    auto results = solve_blocks(inst, block_spec, parallelism);
    out.stage_times.blocking_s = detail::seconds_since(t0);
    for (auto& r : results) {
        out.block_estimates.push_back(std::move(r.z));
        out.per_block_reports.push_back(std::move(r.report));
    }

    if (k == 1) {
        out.d_hat = {cplx{1.0, 0.0}};
        out.tuning_report.converged = true;
        t0 = detail::Clock::now();
        ComplexVec x = out.block_estimates.front();
        out.stage_times.merge_s = detail::seconds_since(t0);
        return {std::move(x), std::move(out)};
    }

    t0 = detail::Clock::now();
    const DenseMatrix b = build_tuning_matrix(out.block_estimates, inst.tuning_matrix, inst.op.partition());
    const RealVec y_t = inst.kind == MeasurementKind::magnitude ? inst.tuning_measurements
                                                                : intensities_to_magnitudes(inst.tuning_measurements);
    SolveResult tuned = phase_tune(b, y_t, tune_spec);
    out.d_hat = std::move(tuned.z);
    out.tuning_report = std::move(tuned.report);
    out.stage_times.tuning_s = detail::seconds_since(t0);

    t0 = detail::Clock::now();
    ComplexVec x = merge(out.block_estimates, out.d_hat);
    out.stage_times.merge_s = detail::seconds_since(t0);
    return {std::move(x), std::move(out)};
}

}  // namespace bpr
