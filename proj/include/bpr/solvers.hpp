#pragma once
// Base phase retrieval solvers:
//   - truncated Wirtinger flow on intensities with spectral initialization,
//   - alternating projections on magnitudes (least squares via Householder QR),
//   - alternating projections constrained to unit-modulus unknowns, used for
//     recovering the per-block phase factors.
// Every solver is a pure function of (operator, measurements, params, seed).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "bpr/core.hpp"
#include "bpr/errors.hpp"
#include "bpr/forward.hpp"
#include "bpr/linalg.hpp"
#include "bpr/rng.hpp"

namespace bpr {

struct WFParams {
    int max_iters = 400;
    double step_size = 0.2;
    int init_power_iters = 100;
    double trunc_y = 3.0;   // spectral init keeps b_r <= trunc_y^2 * mean(b)
    double trunc_lb = 0.3;  // gradient keeps rows whose normalized |<h_r,z>| lies in [lb, ub]
    double trunc_ub = 5.0;
    double trunc_h = 5.0;   // ... and whose misfit is below trunc_h times the average
    double tol = 1e-8;
    // Second stage run only when the truncated stage stops above `tol`:
    // plain gradient steps on sum_r (|<h_r,z>|^2 - b_r)^2, the maximum
    // likelihood loss under additive Gaussian intensity noise. 0 disables it.
    int refine_iters = 100;
    double refine_step = 0.1;

    void validate() const {
        if (refine_iters < 0 || refine_step <= 0) throw InvalidArgument("WFParams: invalid refinement settings");
        if (max_iters <= 0 || step_size <= 0 || init_power_iters <= 0 || trunc_y <= 0 || trunc_lb <= 0 ||
            trunc_ub <= 0 || trunc_h <= 0 || tol <= 0)
            throw InvalidArgument("WFParams: all parameters must be positive");
        if (trunc_lb >= trunc_ub) throw InvalidArgument("WFParams: trunc_lb must be < trunc_ub");
    }
};

enum class InitKind { random, spectral };

struct APParams {
    int max_iters = 600;
    double tol = 1e-10;
    InitKind init = InitKind::spectral;

    void validate() const {
        if (max_iters <= 0 || tol <= 0) throw InvalidArgument("APParams: all parameters must be positive");
    }
};

enum class SolverKind { wf_truncated, alt_proj, unit_modulus_tuner };

struct SolverSpec {
    SolverKind kind = SolverKind::wf_truncated;
    WFParams wf;
    APParams ap;
    std::uint64_t seed = 0;
    int restarts = 1;

    void validate() const {
        if (restarts < 1) throw InvalidArgument("SolverSpec: restarts must be >= 1");
        wf.validate();
        ap.validate();
    }

    static SolverSpec tuner(std::uint64_t seed = 0, int restarts = 50) {
        SolverSpec s;
        s.kind = SolverKind::unit_modulus_tuner;
        s.seed = seed;
        s.restarts = restarts;
        return s;
    }
};

struct SolverReport {
    int iterations = 0;
    double final_residual = 0.0;
    int restarts_used = 0;
    double wall_time_seconds = 0.0;
    bool converged = false;
    /// Relative magnitude residual of every iterate of the winning restart.
    RealVec residual_trace;
};

struct SolveResult {
    ComplexVec z;
    SolverReport report;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double e : v) s += e;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline cplx unit_phase(cplx u) {
    const double m = std::abs(u);
    return m == 0.0 ? cplx{1.0, 0.0} : u / m;
}

// Norm an initial guess should have so that ||z0||^2 estimates ||x||^2.
inline double init_scale(std::span<const double> intensities, std::span<const double> row_norms_sq, std::size_t n) {
    const double rn = mean(row_norms_sq);
    if (rn == 0.0) return 0.0;
    return std::sqrt(static_cast<double>(n) * mean(intensities) / rn);
}

inline ComplexVec scaled_random(std::size_t n, double scale, std::uint64_t seed) {
    ComplexVec z = random_complex_gaussian(n, seed);
    const double nz = norm2(z);
    for (auto& e : z) e *= scale / nz;
    return z;
}

inline bool better(const SolveResult& cand, const std::optional<SolveResult>& best) {
    return !best || cand.report.final_residual < best->report.final_residual;
}

}  // namespace detail

/// Leading eigenvector of the truncated, intensity-weighted row covariance,
/// scaled to the norm estimate sqrt(N mean(b) / mean ||h_r||^2).
template <LinearOperator Op>
ComplexVec spectral_init(const Op& op, std::span<const double> b, const WFParams& params, std::uint64_t seed) {
    if (b.size() != op.rows()) throw DimensionMismatch("spectral_init: measurement count != operator rows");
    const double mb = detail::mean(b);
    if (!(mb > 0.0)) throw ZeroMeasurements("spectral_init: zero measurement vector");

    const std::size_t m = op.rows();
    const std::size_t n = op.cols();
    RealVec weights(m);
    for (std::size_t r = 0; r < m; ++r) weights[r] = b[r] <= params.trunc_y * params.trunc_y * mb ? b[r] / static_cast<double>(m) : 0.0;

    ComplexVec v = random_complex_gaussian(n, seed);
    ComplexVec u(m);
    for (int it = 0; it < params.init_power_iters; ++it) {
        const double nv = norm2(v);
        if (nv == 0.0) break;
        for (auto& e : v) e /= nv;
        op.multiply(v, u);
        for (std::size_t r = 0; r < m; ++r) u[r] *= weights[r];
        op.multiply_adjoint(u, v);
    }
    double nv = norm2(v);
    if (nv == 0.0) {
        // every row truncated away or orthogonal to the start; fall back to the raw start
        v = random_complex_gaussian(n, seed);
        nv = norm2(v);
    }
    const double scale = detail::init_scale(b, op.row_norms_sq(), n);
    for (auto& e : v) e *= scale / nv;
    return v;
}

namespace detail {

template <LinearOperator Op>
SolveResult wf_single(const Op& op, std::span<const double> b, std::span<const double> a,
                      std::span<const double> row_norms, const WFParams& p, ComplexVec z) {
    const std::size_t m = op.rows();
    const double sqrt_n = std::sqrt(static_cast<double>(op.cols()));
    const double inv_m = 1.0 / static_cast<double>(m);
    ComplexVec u(m), g(m), grad(op.cols());
    SolveResult out;
    auto& rep = out.report;
    int empty_streak = 0;

    for (int t = 0;; ++t) {
        op.multiply(z, u);
        const double res = magnitude_residual(u, a);
        rep.residual_trace.push_back(res);
        rep.final_residual = res;
        rep.iterations = t;
        if (res <= p.tol) {
            rep.converged = true;
            break;
        }
        if (t == p.max_iters) break;

        const double zn = norm2(z);
        double misfit_l1 = 0.0;
        for (std::size_t r = 0; r < m; ++r) misfit_l1 += std::abs(b[r] - abs2(u[r]));
        std::size_t kept = 0;
        for (std::size_t r = 0; r < m; ++r) {
            g[r] = cplx{};
            if (zn == 0.0 || row_norms[r] == 0.0) continue;
            const double um2 = abs2(u[r]);
            const double ratio = sqrt_n * std::sqrt(um2) / (row_norms[r] * zn);
            if (ratio < p.trunc_lb || ratio > p.trunc_ub) continue;
            const double mis = b[r] - um2;
            if (std::abs(mis) > p.trunc_h * inv_m * misfit_l1 * ratio) continue;
            g[r] = (2.0 * (um2 - b[r]) / um2) * u[r];
            ++kept;
        }
        if (kept == 0) {
            if (++empty_streak >= 10)
                throw NonProgress("wf_solve: truncation rejected every measurement for 10 consecutive iterations");
            continue;
        }
        empty_streak = 0;
        op.multiply_adjoint(g, grad);
        const double s = p.step_size * inv_m;
        for (std::size_t c = 0; c < z.size(); ++c) z[c] -= s * grad[c];
    }

    if (!rep.converged && p.refine_iters > 0) {
        auto intensity_loss = [&] {
            double l = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
                const double d = abs2(u[r]) - b[r];
                l += d * d;
            }
            return l;
        };
        // u holds op*z from the last residual evaluation
        const double loss0 = intensity_loss();
        const double mb = mean(b);
        const double s = p.refine_step * inv_m / mb;
        ComplexVec zr = z;
        RealVec trace;
        double res = rep.final_residual;
        int it = 0;
        for (; it < p.refine_iters && res > p.tol; ++it) {
            for (std::size_t r = 0; r < m; ++r) g[r] = (2.0 * (abs2(u[r]) - b[r])) * u[r];
            op.multiply_adjoint(g, grad);
            for (std::size_t c = 0; c < zr.size(); ++c) zr[c] -= s * grad[c];
            op.multiply(zr, u);
            res = magnitude_residual(u, a);
            trace.push_back(res);
        }
        if (std::isfinite(res) && intensity_loss() <= loss0) {
            z = std::move(zr);
            rep.residual_trace.insert(rep.residual_trace.end(), trace.begin(), trace.end());
            rep.iterations += it;
            rep.final_residual = res;
            rep.converged = res <= p.tol;
        }
    }
    out.z = std::move(z);
    return out;
}

}  // namespace detail

/// Truncated Wirtinger flow on intensity data `b`. Restart 0 starts from the
/// spectral estimate (or `start` when given), later restarts from scaled
/// random draws; the lowest final residual wins and a restart that reaches
/// `tol` ends the search.
template <LinearOperator Op>
SolveResult wf_solve(const Op& op, std::span<const double> b, const WFParams& params, std::uint64_t seed,
                     int restarts = 1, const std::optional<ComplexVec>& start = std::nullopt) {
    params.validate();
    if (restarts < 1) throw InvalidArgument("wf_solve: restarts must be >= 1");
    if (b.size() != op.rows()) throw DimensionMismatch("wf_solve: measurement count != operator rows");
    if (start && start->size() != op.cols()) throw DimensionMismatch("wf_solve: start vector length != operator cols");
    const auto t0 = detail::Clock::now();

    const RealVec a = intensities_to_magnitudes(b);
    const RealVec row_sq = op.row_norms_sq();
    RealVec row_norms(row_sq.size());
    for (std::size_t r = 0; r < row_sq.size(); ++r) row_norms[r] = std::sqrt(row_sq[r]);

    std::optional<SolveResult> best;
    int used = 0;
    for (int k = 0; k < restarts; ++k) {
        const std::uint64_t rs = derive_seed(seed, static_cast<std::uint64_t>(k));
        ComplexVec z0;
        if (k == 0 && start) {
            z0 = *start;
        } else if (k == 0) {
            z0 = spectral_init(op, b, params, rs);
        } else {
            const double scale = detail::init_scale(b, row_sq, op.cols());
            if (!(scale > 0.0)) throw ZeroMeasurements("wf_solve: zero measurement vector");
            z0 = detail::scaled_random(op.cols(), scale, rs);
        }
        SolveResult cand = detail::wf_single(op, b, a, row_norms, params, std::move(z0));
        ++used;
        if (detail::better(cand, best)) best = std::move(cand);
        if (best->report.converged) break;
    }
    best->report.restarts_used = used;
    best->report.wall_time_seconds = detail::seconds_since(t0);
    return std::move(*best);
}

namespace detail {

inline SolveResult ap_single(const DenseMatrix& h, const LeastSquaresOperator& ls, std::span<const double> a,
                             const APParams& p, ComplexVec z, bool unit_modulus) {
    const std::size_t m = h.rows();
    ComplexVec u(m), v(m), work(m);
    SolveResult out;
    auto& rep = out.report;
    double prev = std::numeric_limits<double>::infinity();

    for (int t = 0;; ++t) {
        h.multiply(z, u);
        const double res = magnitude_residual(u, a);
        rep.residual_trace.push_back(res);
        rep.final_residual = res;
        rep.iterations = t;
        if (res <= p.tol || (t > 0 && std::abs(prev - res) <= p.tol * prev)) {
            rep.converged = true;
            break;
        }
        if (t == p.max_iters) break;
        prev = res;

        for (std::size_t r = 0; r < m; ++r) v[r] = a[r] * unit_phase(u[r]);
        ls.solve(v, z, work);
        if (unit_modulus) {
            for (auto& d : z) {
                const double md = std::abs(d);
                d = md < 1e-14 ? cplx{1.0, 0.0} : d / md;
            }
        }
    }
    out.z = std::move(z);
    return out;
}

}  // namespace detail

/// Alternating projections between the magnitude set and range(H).
/// Stops when the residual reaches `tol` or its relative decrease drops below `tol`.
inline SolveResult altproj_solve(const DenseMatrix& h, std::span<const double> a, const APParams& params,
                                 std::uint64_t seed, int restarts = 1,
                                 const std::optional<ComplexVec>& start = std::nullopt) {
    params.validate();
    if (restarts < 1) throw InvalidArgument("altproj_solve: restarts must be >= 1");
    if (a.size() != h.rows()) throw DimensionMismatch("altproj_solve: measurement count != operator rows");
    if (start && start->size() != h.cols()) throw DimensionMismatch("altproj_solve: start vector length != operator cols");
    const auto t0 = detail::Clock::now();

    const LeastSquaresOperator ls(h);

    double asq = 0.0;
    for (double e : a) asq += e * e;
    if (asq == 0.0) {
        SolveResult zero{ComplexVec(h.cols()), {}};
        zero.report.converged = true;
        zero.report.restarts_used = 1;
        zero.report.residual_trace = {0.0};
        zero.report.wall_time_seconds = detail::seconds_since(t0);
        return zero;
    }

    const RealVec b = magnitudes_to_intensities(a);
    const RealVec row_sq = h.row_norms_sq();
    std::optional<SolveResult> best;
    int used = 0;
    for (int k = 0; k < restarts; ++k) {
        const std::uint64_t rs = derive_seed(seed, static_cast<std::uint64_t>(k));
        ComplexVec z0;
        if (k == 0 && start) {
            z0 = *start;
        } else if (k == 0 && params.init == InitKind::spectral) {
            z0 = spectral_init(h, b, WFParams{}, rs);
        } else {
            z0 = detail::scaled_random(h.cols(), detail::init_scale(b, row_sq, h.cols()), rs);
        }
        SolveResult cand = detail::ap_single(h, ls, a, params, std::move(z0), false);
        ++used;
        if (detail::better(cand, best)) best = std::move(cand);
        if (best->report.final_residual <= params.tol) break;
    }
    best->report.restarts_used = used;
    best->report.wall_time_seconds = detail::seconds_since(t0);
    return std::move(*best);
}

/// Alternating projections for unknowns of modulus one: each least-squares
/// update is renormalized entrywise. Starts from random phases.
inline SolveResult unit_modulus_tune(const DenseMatrix& b, std::span<const double> y, const APParams& params,
                                     std::uint64_t seed, int restarts = 50) {
    params.validate();
    if (restarts < 1) throw InvalidArgument("unit_modulus_tune: restarts must be >= 1");
    if (y.size() != b.rows()) throw DimensionMismatch("unit_modulus_tune: measurement count != matrix rows");
    const auto t0 = detail::Clock::now();
    const std::size_t k = b.cols();

    double ysq = 0.0;
    for (double e : y) ysq += e * e;
    if (ysq == 0.0) {
        SolveResult ones{ComplexVec(k, cplx{1.0, 0.0}), {}};
        ones.report.converged = false;
        ones.report.restarts_used = 0;
        ones.report.wall_time_seconds = detail::seconds_since(t0);
        return ones;
    }

    const LeastSquaresOperator ls(b);
    std::optional<SolveResult> best;
    int used = 0;
    for (int r = 0; r < restarts; ++r) {
        CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        ComplexVec d(k);
        for (auto& e : d) e = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
        SolveResult cand = detail::ap_single(b, ls, y, params, std::move(d), true);
        ++used;
        if (detail::better(cand, best)) best = std::move(cand);
        if (best->report.final_residual <= params.tol) break;
    }
    best->report.restarts_used = used;
    best->report.wall_time_seconds = detail::seconds_since(t0);
    return std::move(*best);
}

/// Runs the solver named by `spec` on (op, measurements), converting between
/// intensity and magnitude data as the solver requires.
template <typename Op>
SolveResult solve(const Op& op, std::span<const double> measurements, MeasurementKind kind, const SolverSpec& spec) {
    spec.validate();
    RealVec converted;
    auto as = [&](MeasurementKind want) -> std::span<const double> {
        if (want == kind) return measurements;
        converted = want == MeasurementKind::magnitude ? intensities_to_magnitudes(measurements)
                                                       : magnitudes_to_intensities(measurements);
        return converted;
    };
    switch (spec.kind) {
        case SolverKind::wf_truncated:
            return wf_solve(op, as(MeasurementKind::intensity), spec.wf, spec.seed, spec.restarts);
        case SolverKind::alt_proj:
        case SolverKind::unit_modulus_tuner: {
            const DenseMatrix* dense = nullptr;
            DenseMatrix tmp;
            if constexpr (std::is_same_v<Op, DenseMatrix>) {
                dense = &op;
            } else {
                tmp = densify(op);
                dense = &tmp;
            }
            const auto a = as(MeasurementKind::magnitude);
            if (spec.kind == SolverKind::alt_proj) return altproj_solve(*dense, a, spec.ap, spec.seed, spec.restarts);
            return unit_modulus_tune(*dense, a, spec.ap, spec.seed, spec.restarts);
        }
    }
    throw InvalidArgument("solve: unknown solver kind");
}

inline SolveResult solve(const PRInstance& inst, const SolverSpec& spec) {
    inst.validate();
    return std::visit([&](const auto& op) { return solve(op, inst.measurements, inst.kind, spec); }, inst.op);
}

}  // namespace bpr
