// bpr: command line front end for the block-based phase retrieval harness.
//
//   bpr gen      write one synthetic instance as BPR1 files
//   bpr solve    solve one instance (generated or loaded), print a JSON report
//   bpr sweep-n  sweep the signal size N
//   bpr sweep-k  sweep the number of blocks K
//   bpr table1   auto-K speedup table against the monolithic solver
//
// Exit codes: 0 success, 1 solver failure, 2 invalid config, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpr/bpr.hpp"

namespace fs = std::filesystem;
using namespace bpr;
using namespace bpr::bench;

namespace {

enum ExitCode { kOk = 0, kSolverFailure = 1, kInvalidConfig = 2, kIoFailure = 3 };

struct CommonFlags {
    std::string config_path;
    std::string n, k, alpha, beta, snr, trials, seed, solver, restarts, tune_restarts, parallelism, matrix;
    std::string out;
    std::string format = "csv";
    bool clean_tuning = false;
    bool baseline_tuning_rows = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config_path, "JSON config file; flags override its values");
    app->add_option("--n", f.n, "signal size N");
    app->add_option("--k", f.k, "number of blocks, or 'auto'");
    app->add_option("--alpha", f.alpha, "measurements per unknown in each block (default 6)");
    app->add_option("--beta", f.beta, "tuning measurements per block (default 20)");
    app->add_option("--snr", f.snr, "intensity SNR in dB, or 'inf' (default 30)");
    app->add_option("--trials", f.trials, "trials per sweep point");
    app->add_option("--seed", f.seed, "master seed");
    app->add_option("--solver", f.solver, "block solver: wf_truncated | alt_proj");
    app->add_option("--restarts", f.restarts, "restarts of the block solver");
    app->add_option("--tune-restarts", f.tune_restarts, "restarts of the phase tuner");
    app->add_option("--parallelism", f.parallelism, "concurrent block solves");
    app->add_option("--matrix", f.matrix, "gaussian | binary01");
    app->add_option("--out", f.out, "output path (file or directory for gen)");
    app->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    app->add_flag("--clean-tuning", f.clean_tuning, "leave the tuning measurements noiseless");
    app->add_flag("--baseline-include-tuning-rows", f.baseline_tuning_rows,
                  "give the monolithic baseline the tuning rows as well");
}

template <typename T>
T parse_num(const std::string& s, const char* what) {
    std::istringstream is(s);
    T v{};
    if (!(is >> v) || !is.eof()) throw ConfigError(std::string("invalid value for ") + what + ": '" + s + "'");
    return v;
}

ExperimentConfig build_config(const CommonFlags& f) {
    ExperimentConfig cfg = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
    if (!f.n.empty()) cfg.N = parse_num<std::size_t>(f.n, "--n");
    if (!f.k.empty()) {
        if (f.k == "auto") cfg.K.reset();
        else cfg.K = parse_num<std::size_t>(f.k, "--k");
    }
    if (!f.alpha.empty()) cfg.alpha = parse_num<double>(f.alpha, "--alpha");
    if (!f.beta.empty()) cfg.beta = parse_num<double>(f.beta, "--beta");
    if (!f.snr.empty()) cfg.snr_db = parse_snr(f.snr);
    if (!f.trials.empty()) cfg.trials = parse_num<int>(f.trials, "--trials");
    if (!f.seed.empty()) cfg.seed = parse_num<std::uint64_t>(f.seed, "--seed");
    if (!f.solver.empty()) cfg.solver.kind = parse_solver_kind(f.solver);
    if (!f.restarts.empty()) cfg.solver.restarts = parse_num<int>(f.restarts, "--restarts");
    if (!f.tune_restarts.empty()) cfg.tune_solver.restarts = parse_num<int>(f.tune_restarts, "--tune-restarts");
    if (!f.parallelism.empty()) cfg.parallelism = parse_num<std::size_t>(f.parallelism, "--parallelism");
    if (!f.matrix.empty()) cfg.matrix_kind = parse_matrix_kind(f.matrix);
    if (!f.out.empty()) cfg.output_path = f.out;
    if (f.clean_tuning) cfg.noisy_tuning = false;
    if (f.baseline_tuning_rows) cfg.baseline_include_tuning_rows = true;
    if (cfg.solver.kind == SolverKind::unit_modulus_tuner)
        throw ConfigError("the unit-modulus tuner cannot be used as a block solver");
    validate(cfg);
    return cfg;
}

std::vector<std::size_t> parse_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(parse_num<std::size_t>(item, "list"));
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

nlohmann::ordered_json report_json(const SolverReport& r) {
    nlohmann::ordered_json j;
    j["iterations"] = r.iterations;
    j["final_residual"] = r.final_residual;
    j["restarts_used"] = r.restarts_used;
    j["wall_time_seconds"] = r.wall_time_seconds;
    j["converged"] = r.converged;
    return j;
}

void write_table(const SweepTable& table, const CommonFlags& f, const ExperimentConfig& cfg) {
    const auto fmt = f.format == "json" ? ReportFormat::json : ReportFormat::csv;
    if (cfg.output_path.empty()) {
        if (fmt == ReportFormat::csv) std::cout << to_csv(table);
        else std::cout << to_json(table).dump(2) << '\n';
    } else {
        emit_report(table, fmt, cfg.output_path);
        std::cerr << "wrote " << cfg.output_path << '\n';
    }
}

void print_row(const SweepRow& r) {
    if (r.failed) {
        std::fprintf(stderr, "N=%zu K=%zu failed: %s\n", r.N, r.K, r.error.c_str());
        return;
    }
    std::fprintf(stderr, "N=%zu K=%zu nmse_median=%.3e total_s=%.4f", r.N, r.K, r.nmse_median, r.total_s);
    if (r.speedup) std::fprintf(stderr, " monolithic_s=%.4f speedup=%.2f", *r.monolithic_s, *r.speedup);
    std::fprintf(stderr, "\n");
}

int cmd_gen(const CommonFlags& f) {
    ExperimentConfig cfg = build_config(f);
    if (cfg.output_path.empty()) throw ConfigError("gen requires --out <directory>");
    const fs::path dir(cfg.output_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    const GeneratedInstance g = gen_instance(cfg, cfg.seed);
    io::save_bpr1((dir / "H.bpr").string(), g.instance.op);
    io::save_bpr1((dir / "y.bpr").string(), g.instance.measurements);
    io::save_bpr1((dir / "x_true.bpr").string(), g.truth);
    if (g.instance.num_blocks() > 1) {
        io::save_bpr1((dir / "A.bpr").string(), g.instance.tuning_matrix);
        io::save_bpr1((dir / "y_tuning.bpr").string(), g.instance.tuning_measurements);
    }
    std::ofstream meta(dir / "config.json");
    if (!meta) throw IoError("cannot write config.json");
    meta << config_to_json(cfg).dump(2) << '\n';
    std::cerr << "wrote instance N=" << cfg.N << " K=" << g.instance.num_blocks() << " to " << dir.string() << '\n';
    return kOk;
}

BlockPRInstance load_instance(const fs::path& dir, double beta, std::optional<ComplexVec>& truth) {
    BlockPRInstance inst;
    inst.op = io::load_bpr1<KRBDMatrix>((dir / "H.bpr").string());
    inst.measurements = io::to_real(io::load_bpr1<ComplexVec>((dir / "y.bpr").string()));
    inst.kind = MeasurementKind::intensity;
    inst.beta = beta;
    if (fs::exists(dir / "A.bpr")) {
        inst.tuning_matrix = io::load_bpr1<DenseMatrix>((dir / "A.bpr").string());
        inst.tuning_measurements = io::to_real(io::load_bpr1<ComplexVec>((dir / "y_tuning.bpr").string()));
    }
    if (fs::exists(dir / "x_true.bpr")) truth = io::load_bpr1<ComplexVec>((dir / "x_true.bpr").string());
    return inst;
}

int cmd_solve(const CommonFlags& f, const std::string& in_dir, bool compare) {
    CommonFlags flags = f;
    if (!in_dir.empty() && flags.config_path.empty() && fs::exists(fs::path(in_dir) / "config.json"))
        flags.config_path = (fs::path(in_dir) / "config.json").string();
    ExperimentConfig cfg = build_config(flags);

    BlockPRInstance inst;
    std::optional<ComplexVec> truth;
    const std::uint64_t trial_seed = cfg.seed;
    if (in_dir.empty()) {
        GeneratedInstance g = gen_instance(cfg, trial_seed);
        inst = std::move(g.instance);
        truth = std::move(g.truth);
    } else {
        inst = load_instance(in_dir, cfg.beta, truth);
    }

    const SolverSpec block_spec = trial_solver(cfg, trial_seed);
    const SolverSpec tune_spec = trial_tuner(cfg, trial_seed);
    const auto t0 = std::chrono::steady_clock::now();
    auto [x_hat, out] = block_pr_solve(inst, block_spec, tune_spec, cfg.parallelism);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::ordered_json j;
    j["N"] = inst.op.cols();
    j["K"] = inst.num_blocks();
    if (truth) j["nmse"] = nmse(*truth, x_hat);
    j["blocking_s"] = out.stage_times.blocking_s;
    j["tuning_s"] = out.stage_times.tuning_s;
    j["merge_s"] = out.stage_times.merge_s;
    j["total_s"] = total;
    auto blocks = nlohmann::ordered_json::array();
    for (const auto& r : out.per_block_reports) blocks.push_back(report_json(r));
    j["block_reports"] = std::move(blocks);
    j["tuning_report"] = report_json(out.tuning_report);
    auto phases = nlohmann::ordered_json::array();
    for (const auto& d : out.d_hat) phases.push_back(std::arg(d));
    j["d_hat_phase"] = std::move(phases);
    if (compare) {
        const auto t1 = std::chrono::steady_clock::now();
        SolveResult mono = solve_monolithic(cfg, inst, block_spec);
        const double ms = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
        j["monolithic_s"] = ms;
        j["speedup"] = ms / total;
        if (truth) j["monolithic_nmse"] = nmse(*truth, mono.z);
    }
    std::cout << j.dump(2) << '\n';
    if (!cfg.output_path.empty()) io::save_bpr1(cfg.output_path, x_hat);
    return kOk;
}

int cmd_sweep(const CommonFlags& f, SweepVariable var, const std::string& list, bool compare) {
    ExperimentConfig cfg = build_config(f);
    const auto values = parse_list(list);
    const SweepTable table = sweep(cfg, var, values, compare, print_row);
    write_table(table, f, cfg);
    for (const auto& r : table)
        if (r.failed) return kSolverFailure;
    return kOk;
}

// Speedups measured on a 4-core 3.2 GHz machine for N = 2^8 ... 2^14.
constexpr double kReferenceSpeedup[] = {1.2, 27, 103, 343, 558, 3398, 9295};

int cmd_table1(CommonFlags f, std::string list, bool long_run) {
    if (f.k.empty()) f.k = "auto";
    if (f.trials.empty()) f.trials = "10";
    ExperimentConfig cfg = build_config(f);
    if (list.empty()) list = long_run ? "256,512,1024,2048,4096,8192,16384" : "256,512,1024,2048";
    const auto values = parse_list(list);
    const SweepTable table = sweep(cfg, SweepVariable::N, values, true, print_row);
    std::fprintf(stderr, "%8s %4s %12s %10s %10s\n", "N", "K", "nmse_median", "speedup", "reference");
    for (const auto& r : table) {
        const int l = static_cast<int>(std::lround(std::log2(static_cast<double>(r.N))));
        const bool has_ref = l >= 8 && l <= 14 && (std::size_t{1} << l) == r.N;
        std::fprintf(stderr, "%8zu %4zu %12.3e %10.2f ", r.N, r.K, r.nmse_median, r.speedup.value_or(0.0));
        if (has_ref) std::fprintf(stderr, "%10.1f\n", kReferenceSpeedup[l - 8]);
        else std::fprintf(stderr, "%10s\n", "-");
    }
    write_table(table, f, cfg);
    for (const auto& r : table)
        if (r.failed) return kSolverFailure;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-based phase retrieval: instance generation, solving and benchmarks"};
    app.require_subcommand(1);

    CommonFlags gen_f, solve_f, sn_f, sk_f, t1_f;
    std::string in_dir, n_list, k_list, t1_list;
    bool solve_compare = false, sn_compare = false, sk_compare = false, t1_long = false;

    auto* gen = app.add_subcommand("gen", "write one instance in BPR1 format");
    add_common(gen, gen_f);

    auto* solve_cmd = app.add_subcommand("solve", "solve one instance and print a JSON report");
    add_common(solve_cmd, solve_f);
    solve_cmd->add_option("--in", in_dir, "directory written by 'gen'");
    solve_cmd->add_flag("--compare-monolithic", solve_compare, "also time the monolithic solver");

    auto* sn = app.add_subcommand("sweep-n", "sweep the signal size");
    add_common(sn, sn_f);
    sn->add_option("--n-list", n_list, "comma separated N values")->required();
    sn->add_flag("--compare-monolithic", sn_compare, "also time the monolithic solver");

    auto* sk = app.add_subcommand("sweep-k", "sweep the number of blocks");
    add_common(sk, sk_f);
    sk->add_option("--k-list", k_list, "comma separated K values")->required();
    sk->add_flag("--compare-monolithic", sk_compare, "also time the monolithic solver");

    auto* t1 = app.add_subcommand("table1", "auto-K speedup table");
    add_common(t1, t1_f);
    t1->add_option("--n-list", t1_list, "comma separated N values (default 2^8..2^11)");
    t1->add_flag("--long", t1_long, "extend the default list to N = 2^14");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalidConfig;
    }

    try {
        if (*gen) return cmd_gen(gen_f);
        if (*solve_cmd) return cmd_solve(solve_f, in_dir, solve_compare);
        if (*sn) return cmd_sweep(sn_f, SweepVariable::N, n_list, sn_compare);
        if (*sk) return cmd_sweep(sk_f, SweepVariable::K, k_list, sk_compare);
        if (*t1) return cmd_table1(t1_f, t1_list, t1_long);
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }
    return kInvalidConfig;
}
