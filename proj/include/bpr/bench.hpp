#pragma once
// Experiment harness: synthetic Gaussian/binary instances, timed trials
// against a monolithic baseline, block-count selection, N and K sweeps and
// CSV/JSON reports.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpr/blockpr.hpp"
#include "bpr/core.hpp"
#include "bpr/errors.hpp"
#include "bpr/forward.hpp"
#include "bpr/rng.hpp"
#include "bpr/solvers.hpp"

namespace bpr::bench {

enum class MatrixKind { gaussian, binary01 };
enum class KMode { empirical, theoretical, power_law };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ExperimentConfig {
    std::size_t N = 256;
    std::optional<std::size_t> K;  // empty: choose with select_k
    double alpha = 6.0;
    double beta = 20.0;
    double snr_db = 30.0;  // +inf for noiseless
    int trials = 10;
    std::uint64_t seed = 0;
    SolverSpec solver{};
    SolverSpec tune_solver = SolverSpec::tuner();
    MatrixKind matrix_kind = MatrixKind::gaussian;
    bool noisy_tuning = true;
    std::size_t parallelism = 1;
    std::string output_path;
    bool baseline_include_tuning_rows = false;
    KMode k_mode = KMode::empirical;
    double k_constant = 0.5;
};

std::size_t select_k(std::size_t n, KMode mode = KMode::empirical, double c = 0.5);

inline std::size_t resolve_k(const ExperimentConfig& cfg) {
    return cfg.K ? *cfg.K : select_k(cfg.N, cfg.k_mode, cfg.k_constant);
}

/// Rows per block, alpha * N / K, which must come out integral.
inline std::size_t block_rows(const ExperimentConfig& cfg, std::size_t k) {
    const double m = cfg.alpha * static_cast<double>(cfg.N / k);
    const double mr = std::round(m);
    if (std::abs(m - mr) > 1e-9 || mr < 1.0) throw ConfigError("alpha * N/K must be a positive integer");
    return static_cast<std::size_t>(mr);
}

inline std::size_t tuning_rows(const ExperimentConfig& cfg, std::size_t k) {
    return static_cast<std::size_t>(std::lround(cfg.beta * static_cast<double>(k)));
}

inline void validate(const ExperimentConfig& cfg) {
    if (cfg.N == 0) throw ConfigError("N must be positive");
    if (!(cfg.alpha > 0.0) || !(cfg.beta > 0.0)) throw ConfigError("alpha and beta must be positive");
    if (std::isnan(cfg.snr_db) || cfg.snr_db == -kInf) throw ConfigError("snr_db must be finite or +inf");
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    const std::size_t k = resolve_k(cfg);
    if (k == 0 || cfg.N % k != 0) throw ConfigError("N must be divisible by K");
    block_rows(cfg, k);
    if (k > 1 && tuning_rows(cfg, k) == 0) throw ConfigError("beta * K must round to at least one row");
    try {
        cfg.solver.validate();
        cfg.tune_solver.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

struct GeneratedInstance {
    BlockPRInstance instance;
    ComplexVec truth;
};

namespace seeds {
// stream tags for everything drawn from one trial seed
inline std::uint64_t signal(std::uint64_t t) { return derive_seed(t, 0x51); }
inline std::uint64_t blocks(std::uint64_t t) { return derive_seed(t, 0x52); }
inline std::uint64_t tuning_matrix(std::uint64_t t) { return derive_seed(t, 0x53); }
inline std::uint64_t noise(std::uint64_t t) { return derive_seed(t, 0x54); }
inline std::uint64_t tuning_noise(std::uint64_t t) { return derive_seed(t, 0x55); }
inline std::uint64_t solver(std::uint64_t t) { return derive_seed(t, 0x56); }
inline std::uint64_t tuner(std::uint64_t t) { return derive_seed(t, 0x57); }
}  // namespace seeds

inline DenseMatrix draw_matrix(MatrixKind kind, std::size_t rows, std::size_t cols, std::uint64_t seed) {
    return kind == MatrixKind::gaussian ? random_gaussian_matrix(rows, cols, seed)
                                        : random_binary_matrix(rows, cols, seed);
}

/// x ~ CN(0, I_N); K diagonal blocks of shape (alpha N/K) x (N/K); a dense
/// L x N tuning matrix with L = round(beta K); intensity measurements with
/// optional noise.
inline GeneratedInstance gen_instance(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    validate(cfg);
    const std::size_t k = resolve_k(cfg);
    const std::size_t n = cfg.N / k;
    const std::size_t m = block_rows(cfg, k);

    GeneratedInstance g;
    g.truth = random_complex_gaussian(cfg.N, seeds::signal(trial_seed));
    std::vector<DenseMatrix> blocks;
    blocks.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        blocks.push_back(draw_matrix(cfg.matrix_kind, m, n, derive_seed(seeds::blocks(trial_seed), i)));

    auto& inst = g.instance;
    inst.op = make_krbd(std::move(blocks));
    inst.kind = MeasurementKind::intensity;
    inst.beta = cfg.beta;
    if (std::isfinite(cfg.snr_db)) inst.snr_db = cfg.snr_db;
    inst.measurements = measure(inst.op, g.truth, MeasurementKind::intensity);
    inst.measurements = add_noise_intensity(inst.measurements, {cfg.snr_db, seeds::noise(trial_seed)});

    if (k > 1) {
        inst.tuning_matrix = draw_matrix(cfg.matrix_kind, tuning_rows(cfg, k), cfg.N, seeds::tuning_matrix(trial_seed));
        inst.tuning_measurements = measure(inst.tuning_matrix, g.truth, MeasurementKind::intensity);
        if (cfg.noisy_tuning)
            inst.tuning_measurements =
                add_noise_intensity(inst.tuning_measurements, {cfg.snr_db, seeds::tuning_noise(trial_seed)});
    }
    return g;
}

struct TrialRecord {
    std::size_t N = 0;
    std::size_t K = 0;
    std::uint64_t seed = 0;
    double nmse = 0.0;
    double blocking_s = 0.0;
    double tuning_s = 0.0;
    double merge_s = 0.0;
    double total_s = 0.0;
    std::optional<double> monolithic_s;
    std::optional<double> monolithic_nmse;
    std::optional<double> speedup;
    bool blocks_converged = false;
    bool tuning_converged = false;
};

/// Solver specs actually used for a trial: configured parameters, seeds
/// drawn from the trial seed unless the config pins a nonzero seed.
inline SolverSpec trial_solver(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    SolverSpec s = cfg.solver;
    s.seed = derive_seed(seeds::solver(trial_seed), cfg.solver.seed);
    return s;
}

inline SolverSpec trial_tuner(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    SolverSpec s = cfg.tune_solver;
    s.seed = derive_seed(seeds::tuner(trial_seed), cfg.tune_solver.seed);
    return s;
}

/// Base solver on the densified problem. Uses the seed of block 0 so that a
/// single-block pipeline and this baseline perform the same computation.
inline SolveResult solve_monolithic(const ExperimentConfig& cfg, const BlockPRInstance& inst, const SolverSpec& spec) {
    DenseMatrix full = densify(inst.op);
    RealVec y = inst.measurements;
    if (cfg.baseline_include_tuning_rows && inst.num_blocks() > 1) {
        std::vector<cplx> entries(full.entries().begin(), full.entries().end());
        entries.insert(entries.end(), inst.tuning_matrix.entries().begin(), inst.tuning_matrix.entries().end());
        full = DenseMatrix(full.rows() + inst.tuning_matrix.rows(), full.cols(), std::move(entries));
        y.insert(y.end(), inst.tuning_measurements.begin(), inst.tuning_measurements.end());
    }
    SolverSpec s = spec;
    s.seed = block_seed(spec.seed, 0);
    return solve(full, y, inst.kind, s);
}

inline TrialRecord run_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed, bool compare_monolithic) {
    const GeneratedInstance g = gen_instance(cfg, trial_seed);
    const SolverSpec block_spec = trial_solver(cfg, trial_seed);
    const SolverSpec tune_spec = trial_tuner(cfg, trial_seed);

    TrialRecord rec;
    rec.N = cfg.N;
    rec.K = g.instance.num_blocks();
    rec.seed = trial_seed;

    const auto t0 = detail::Clock::now();
    auto [x_hat, out] = block_pr_solve(g.instance, block_spec, tune_spec, cfg.parallelism);
    rec.total_s = detail::seconds_since(t0);
    rec.blocking_s = out.stage_times.blocking_s;
    rec.tuning_s = out.stage_times.tuning_s;
    rec.merge_s = out.stage_times.merge_s;
    rec.nmse = nmse(g.truth, x_hat);
    rec.blocks_converged = std::all_of(out.per_block_reports.begin(), out.per_block_reports.end(),
                                       [](const SolverReport& r) { return r.converged; });
    rec.tuning_converged = out.tuning_report.converged;

    if (compare_monolithic) {
        const auto t1 = detail::Clock::now();
        SolveResult mono = solve_monolithic(cfg, g.instance, block_spec);
        rec.monolithic_s = detail::seconds_since(t1);
        rec.monolithic_nmse = nmse(g.truth, mono.z);
        rec.speedup = *rec.monolithic_s / rec.total_s;
    }
    return rec;
}

// Optimal block counts measured for N = 2^8 ... 2^14 (log2 N -> log2 K).
inline constexpr std::array<std::pair<int, int>, 7> kOptimalBlockTable{
    {{8, 2}, {9, 2}, {10, 3}, {11, 4}, {12, 5}, {13, 6}, {14, 6}}};
inline constexpr double kBlockScalingExponent = 0.4;

namespace detail {

// Divisor of n in [1, max(1, n/4)] closest to target on a log scale.
inline std::size_t nearest_admissible_divisor(std::size_t n, double target) {
    const std::size_t hi = std::max<std::size_t>(1, n / 4);
    std::size_t best = 1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t d = 1; d <= hi; ++d) {
        if (n % d != 0) continue;
        const double dist = std::abs(std::log2(static_cast<double>(d)) - std::log2(target));
        if (dist < best_d - 1e-12) {
            best_d = dist;
            best = d;
        }
    }
    return best;
}

inline double nearest_power_of_two(double v) {
    if (!(v > 0.0)) return 1.0;
    const double lo = std::exp2(std::floor(std::log2(v)));
    return (v - lo < 2.0 * lo - v) ? lo : 2.0 * lo;
}

}  // namespace detail

/// Number of blocks for a problem of size n.
///   empirical:   the measured optimal-K curve, interpolated in log2 space
///                and extended beyond its ends with slope 0.4;
///   power_law:   nearest power of two to c * n^0.4;
///   theoretical: nearest power of two to c * n^0.5.
/// The result is moved to the nearest divisor of n within [1, n/4].
inline std::size_t select_k(std::size_t n, KMode mode, double c) {
    if (n < 4) return 1;
    const double ln = std::log2(static_cast<double>(n));
    double target = 1.0;
    switch (mode) {
        case KMode::empirical: {
            const auto& t = kOptimalBlockTable;
            double lk;
            if (ln <= t.front().first) {
                lk = t.front().second + kBlockScalingExponent * (ln - t.front().first);
            } else if (ln >= t.back().first) {
                lk = t.back().second + kBlockScalingExponent * (ln - t.back().first);
            } else {
                std::size_t i = 0;
                while (t[i + 1].first < ln) ++i;
                const double f = (ln - t[i].first) / (t[i + 1].first - t[i].first);
                lk = t[i].second + f * (t[i + 1].second - t[i].second);
            }
            target = std::exp2(std::round(lk));
            break;
        }
        case KMode::power_law:
            target = detail::nearest_power_of_two(c * std::pow(static_cast<double>(n), kBlockScalingExponent));
            break;
        case KMode::theoretical:
            target = detail::nearest_power_of_two(c * std::sqrt(static_cast<double>(n)));
            break;
    }
    return detail::nearest_admissible_divisor(n, target);
}

struct SweepRow {
    std::size_t N = 0;
    std::size_t K = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double snr_db = 0.0;
    int trials = 0;
    double nmse_median = 0.0;
    double nmse_mean = 0.0;
    double blocking_s = 0.0;
    double tuning_s = 0.0;
    double total_s = 0.0;
    std::optional<double> monolithic_s;
    std::optional<double> speedup;
    bool failed = false;
    std::string error;

    friend bool operator==(const SweepRow& a, const SweepRow& b) {
        auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
        auto same_opt = [&](const std::optional<double>& x, const std::optional<double>& y) {
            return x.has_value() == y.has_value() && (!x || same(*x, *y));
        };
        return a.N == b.N && a.K == b.K && same(a.alpha, b.alpha) && same(a.beta, b.beta) &&
               same(a.snr_db, b.snr_db) && a.trials == b.trials && same(a.nmse_median, b.nmse_median) &&
               same(a.nmse_mean, b.nmse_mean) && same(a.blocking_s, b.blocking_s) &&
               same(a.tuning_s, b.tuning_s) && same(a.total_s, b.total_s) &&
               same_opt(a.monolithic_s, b.monolithic_s) && same_opt(a.speedup, b.speedup) &&
               a.failed == b.failed && a.error == b.error;
    }
};

using SweepTable = std::vector<SweepRow>;

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Aggregates `cfg.trials` timed trials at one sweep point, after one
/// discarded warm-up trial. Trial seeds are derived from cfg.seed.
inline SweepRow run_point(const ExperimentConfig& cfg, bool compare_monolithic, bool warmup = true,
                          std::vector<TrialRecord>* records = nullptr) {
    SweepRow row;
    row.N = cfg.N;
    row.alpha = cfg.alpha;
    row.beta = cfg.beta;
    row.snr_db = cfg.snr_db;
    row.trials = cfg.trials;
    row.K = 0;
    try {
        validate(cfg);
        row.K = resolve_k(cfg);
        if (warmup) run_trial(cfg, derive_seed(cfg.seed, 0xFFFF'FFFFULL), compare_monolithic);
        std::vector<double> nm, bl, tu, to, mo, sp;
        for (int t = 0; t < cfg.trials; ++t) {
            TrialRecord r = run_trial(cfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(t)), compare_monolithic);
            nm.push_back(r.nmse);
            bl.push_back(r.blocking_s);
            tu.push_back(r.tuning_s);
            to.push_back(r.total_s);
            if (r.monolithic_s) mo.push_back(*r.monolithic_s);
            if (r.speedup) sp.push_back(*r.speedup);
            if (records) records->push_back(r);
        }
        row.nmse_median = median(nm);
        row.nmse_mean = mean_of(nm);
        row.blocking_s = mean_of(bl);
        row.tuning_s = mean_of(tu);
        row.total_s = mean_of(to);
        if (!mo.empty()) row.monolithic_s = mean_of(mo);
        if (!sp.empty()) row.speedup = mean_of(sp);
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        row.nmse_median = row.nmse_mean = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

enum class SweepVariable { N, K };

inline SweepTable sweep(const ExperimentConfig& tmpl, SweepVariable variable, const std::vector<std::size_t>& values,
                        bool compare_monolithic = false,
                        const std::function<void(const SweepRow&)>& on_row = {}) {
    if (values.empty()) throw ConfigError("sweep: empty value list");
    SweepTable table;
    for (std::size_t v : values) {
        ExperimentConfig cfg = tmpl;
        if (variable == SweepVariable::N) cfg.N = v;
        else cfg.K = v;
        table.push_back(run_point(cfg, compare_monolithic));
        if (on_row) on_row(table.back());
    }
    return table;
}

inline constexpr const char* kCsvHeader =
    "N,K,alpha,beta,snr_db,trials,nmse_median,nmse_mean,blocking_s,tuning_s,total_s,monolithic_s,speedup";

namespace detail {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return fmt_double(v);
}

inline double json_to_double(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw IoError("report: expected a number");
}

}  // namespace detail

inline std::string to_csv(const SweepTable& table) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& r : table) {
        using detail::fmt_double;
        os << r.N << ',' << r.K << ',' << fmt_double(r.alpha) << ',' << fmt_double(r.beta) << ','
           << fmt_double(r.snr_db) << ',' << r.trials << ',' << fmt_double(r.nmse_median) << ','
           << fmt_double(r.nmse_mean) << ',' << fmt_double(r.blocking_s) << ',' << fmt_double(r.tuning_s) << ','
           << fmt_double(r.total_s) << ',' << (r.monolithic_s ? fmt_double(*r.monolithic_s) : "") << ','
           << (r.speedup ? fmt_double(*r.speedup) : "") << '\n';
    }
    return os.str();
}

inline nlohmann::ordered_json to_json(const SweepTable& table) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : table) {
        using detail::json_number;
        nlohmann::ordered_json j;
        j["N"] = r.N;
        j["K"] = r.K;
        j["alpha"] = json_number(r.alpha);
        j["beta"] = json_number(r.beta);
        j["snr_db"] = json_number(r.snr_db);
        j["trials"] = r.trials;
        j["nmse_median"] = json_number(r.nmse_median);
        j["nmse_mean"] = json_number(r.nmse_mean);
        j["blocking_s"] = json_number(r.blocking_s);
        j["tuning_s"] = json_number(r.tuning_s);
        j["total_s"] = json_number(r.total_s);
        j["monolithic_s"] = r.monolithic_s ? json_number(*r.monolithic_s) : nlohmann::ordered_json(nullptr);
        j["speedup"] = r.speedup ? json_number(*r.speedup) : nlohmann::ordered_json(nullptr);
        j["failed"] = r.failed;
        j["error"] = r.error;
        rows.push_back(std::move(j));
    }
    return rows;
}

inline SweepTable table_from_json(const nlohmann::json& rows) {
    if (!rows.is_array()) throw IoError("report: expected a JSON array");
    SweepTable t;
    try {
        for (const auto& j : rows) {
            SweepRow r;
            using detail::json_to_double;
            r.N = j.at("N").get<std::size_t>();
            r.K = j.at("K").get<std::size_t>();
            r.alpha = json_to_double(j.at("alpha"));
            r.beta = json_to_double(j.at("beta"));
            r.snr_db = json_to_double(j.at("snr_db"));
            r.trials = j.at("trials").get<int>();
            r.nmse_median = json_to_double(j.at("nmse_median"));
            r.nmse_mean = json_to_double(j.at("nmse_mean"));
            r.blocking_s = json_to_double(j.at("blocking_s"));
            r.tuning_s = json_to_double(j.at("tuning_s"));
            r.total_s = json_to_double(j.at("total_s"));
            if (!j.at("monolithic_s").is_null()) r.monolithic_s = json_to_double(j.at("monolithic_s"));
            if (!j.at("speedup").is_null()) r.speedup = json_to_double(j.at("speedup"));
            r.failed = j.value("failed", false);
            r.error = j.value("error", std::string{});
            t.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("report: ") + e.what());
    }
    return t;
}

enum class ReportFormat { csv, json };

inline void emit_report(const SweepTable& table, ReportFormat format, const std::string& path) {
    if (table.empty()) throw InvalidArgument("emit_report: empty table");
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    if (format == ReportFormat::csv) os << to_csv(table);
    else os << to_json(table).dump(2) << '\n';
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace bpr::bench
