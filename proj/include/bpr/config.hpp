#pragma once
// JSON experiment configuration. Field names match ExperimentConfig;
// "K" accepts a number or "auto", "snr_db" a number or "inf".

#include <fstream>
#include <string>

#include <json.hpp>

#include "bpr/bench.hpp"
#include "bpr/errors.hpp"

namespace bpr::bench {

inline SolverKind parse_solver_kind(const std::string& s) {
    if (s == "wf" || s == "wf_truncated" || s == "twf") return SolverKind::wf_truncated;
    if (s == "alt_proj" || s == "ap") return SolverKind::alt_proj;
    if (s == "unit_modulus_tuner" || s == "tuner") return SolverKind::unit_modulus_tuner;
    throw ConfigError("unknown solver '" + s + "'");
}

inline std::string to_string(SolverKind k) {
    switch (k) {
        case SolverKind::wf_truncated: return "wf_truncated";
        case SolverKind::alt_proj: return "alt_proj";
        case SolverKind::unit_modulus_tuner: return "unit_modulus_tuner";
    }
    return "?";
}

inline MatrixKind parse_matrix_kind(const std::string& s) {
    if (s == "gaussian") return MatrixKind::gaussian;
    if (s == "binary01") return MatrixKind::binary01;
    throw ConfigError("unknown matrix_kind '" + s + "'");
}

inline KMode parse_k_mode(const std::string& s) {
    if (s == "empirical") return KMode::empirical;
    if (s == "theoretical") return KMode::theoretical;
    if (s == "power_law") return KMode::power_law;
    throw ConfigError("unknown k_mode '" + s + "'");
}

inline double parse_snr(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "noiseless") return kInf;
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("invalid snr '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("invalid snr '" + s + "'");
    }
}

namespace detail {

inline void read_wf(const nlohmann::json& j, WFParams& p) {
    p.max_iters = j.value("max_iters", p.max_iters);
    p.step_size = j.value("step_size", p.step_size);
    p.init_power_iters = j.value("init_power_iters", p.init_power_iters);
    p.trunc_y = j.value("trunc_y", p.trunc_y);
    p.trunc_lb = j.value("trunc_lb", p.trunc_lb);
    p.trunc_ub = j.value("trunc_ub", p.trunc_ub);
    p.trunc_h = j.value("trunc_h", p.trunc_h);
    p.tol = j.value("tol", p.tol);
    p.refine_iters = j.value("refine_iters", p.refine_iters);
    p.refine_step = j.value("refine_step", p.refine_step);
}

inline void read_ap(const nlohmann::json& j, APParams& p) {
    p.max_iters = j.value("max_iters", p.max_iters);
    p.tol = j.value("tol", p.tol);
    if (j.contains("init")) {
        const auto s = j.at("init").get<std::string>();
        if (s == "random") p.init = InitKind::random;
        else if (s == "spectral") p.init = InitKind::spectral;
        else throw ConfigError("unknown init '" + s + "'");
    }
}

}  // namespace detail

/// Overlays the fields present in `j` onto `cfg`.
inline void apply_json(const nlohmann::json& j, ExperimentConfig& cfg) {
    try {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        if (j.contains("N")) cfg.N = j.at("N").get<std::size_t>();
        if (j.contains("K")) {
            const auto& k = j.at("K");
            if (k.is_string()) {
                if (k.get<std::string>() != "auto") throw ConfigError("K must be a number or \"auto\"");
                cfg.K.reset();
            } else {
                cfg.K = k.get<std::size_t>();
            }
        }
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.beta = j.value("beta", cfg.beta);
        if (j.contains("snr_db")) {
            const auto& s = j.at("snr_db");
            cfg.snr_db = s.is_string() ? parse_snr(s.get<std::string>()) : s.get<double>();
        }
        cfg.trials = j.value("trials", cfg.trials);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("solver")) cfg.solver.kind = parse_solver_kind(j.at("solver").get<std::string>());
        cfg.solver.restarts = j.value("restarts", cfg.solver.restarts);
        if (j.contains("tune_solver")) cfg.tune_solver.kind = parse_solver_kind(j.at("tune_solver").get<std::string>());
        cfg.tune_solver.restarts = j.value("tune_restarts", cfg.tune_solver.restarts);
        if (j.contains("wf")) detail::read_wf(j.at("wf"), cfg.solver.wf);
        if (j.contains("ap")) detail::read_ap(j.at("ap"), cfg.solver.ap);
        if (j.contains("tune_ap")) detail::read_ap(j.at("tune_ap"), cfg.tune_solver.ap);
        if (j.contains("matrix_kind")) cfg.matrix_kind = parse_matrix_kind(j.at("matrix_kind").get<std::string>());
        cfg.noisy_tuning = j.value("noisy_tuning", cfg.noisy_tuning);
        cfg.parallelism = j.value("parallelism", cfg.parallelism);
        cfg.output_path = j.value("output_path", cfg.output_path);
        cfg.baseline_include_tuning_rows = j.value("baseline_include_tuning_rows", cfg.baseline_include_tuning_rows);
        if (j.contains("k_mode")) cfg.k_mode = parse_k_mode(j.at("k_mode").get<std::string>());
        cfg.k_constant = j.value("k_constant", cfg.k_constant);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    apply_json(j, cfg);
    return cfg;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["N"] = cfg.N;
    if (cfg.K) j["K"] = *cfg.K;
    else j["K"] = "auto";
    j["alpha"] = cfg.alpha;
    j["beta"] = cfg.beta;
    if (std::isfinite(cfg.snr_db)) j["snr_db"] = cfg.snr_db;
    else j["snr_db"] = "inf";
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["solver"] = to_string(cfg.solver.kind);
    j["restarts"] = cfg.solver.restarts;
    j["tune_solver"] = to_string(cfg.tune_solver.kind);
    j["tune_restarts"] = cfg.tune_solver.restarts;
    j["matrix_kind"] = cfg.matrix_kind == MatrixKind::gaussian ? "gaussian" : "binary01";
    j["noisy_tuning"] = cfg.noisy_tuning;
    j["parallelism"] = cfg.parallelism;
    j["baseline_include_tuning_rows"] = cfg.baseline_include_tuning_rows;
    return j;
}

}  // namespace bpr::bench
