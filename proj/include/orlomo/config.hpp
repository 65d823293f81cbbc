#pragma once

#include <cstdint>
#include <set>
#include <string>

#include <json.hpp>

#include "orlomo/errors.hpp"
#include "orlomo/optimizers.hpp"
#include "orlomo/problems.hpp"
#include "orlomo/timing.hpp"

namespace orlomo {

// Full description of one simulation run. Parsed strictly: unknown fields
// and missing algorithmic fields are rejected. Exactly one of iterations (T)
// or gradient_budget (C = S*T) must be given; the other is derived.
struct SimConfig {
    Algorithm algorithm = Algorithm::orlomo;
    HyperParams hp;
    std::uint64_t seed = 0;
    TimingModel timing;
    ProblemSpec problem;
    std::size_t diagnostics_cadence = 0;  // 0 = auto (max(1, T/500))
    bool budget_given = false;            // config specified C rather than T

    std::size_t gradient_budget() const { return hp.local_steps * hp.iterations; }

    std::size_t effective_cadence() const {
        if (diagnostics_cadence > 0) return diagnostics_cadence;
        return std::max<std::size_t>(1, hp.iterations / 500);
    }

    // Synchronous rounds consuming the same gradient budget: C / (K*S).
    std::size_t synchronous_rounds() const {
        return std::max<std::size_t>(1, gradient_budget() / (hp.workers * hp.local_steps));
    }

    void validate() const {
        hp.validate();
        timing.validate(hp.workers);
        problem.validate();
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("unknown field '" + where + it.key() + "'");
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing field '" + where + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("field '" + where + key + "' has the wrong type");
    }
}

template <typename T>
T optional(const nlohmann::json& j, const std::string& key, T fallback,
           const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("field '" + where + key + "' has the wrong type");
    }
}

}  // namespace detail

inline TimingModel timing_from_json(const nlohmann::json& j) {
    detail::reject_unknown(j,
                           {"kind", "base_block_time", "jitter", "slow_workers",
                            "slow_multiplier", "latency"},
                           "timing.");
    TimingModel tm;
    tm.kind = timing_kind_from_string(
        detail::optional<std::string>(j, "kind", "constant", "timing."));
    tm.base_block_time = detail::optional<double>(j, "base_block_time", 1.0, "timing.");
    tm.jitter = detail::optional<double>(j, "jitter", 0.0, "timing.");
    tm.slow_workers =
        detail::optional<std::vector<std::uint32_t>>(j, "slow_workers", {}, "timing.");
    tm.slow_multiplier = detail::optional<double>(j, "slow_multiplier", 1.0, "timing.");
    tm.latency = detail::optional<double>(j, "latency", 0.0, "timing.");
    return tm;
}

inline nlohmann::json timing_to_json(const TimingModel& tm) {
    nlohmann::json j;
    j["kind"] = to_string(tm.kind);
    j["base_block_time"] = tm.base_block_time;
    j["jitter"] = tm.jitter;
    j["slow_workers"] = tm.slow_workers;
    j["slow_multiplier"] = tm.slow_multiplier;
    j["latency"] = tm.latency;
    return j;
}

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
    detail::reject_unknown(j,
                           {"kind", "dimension", "sigma", "lambda_min", "lambda_max",
                            "n_points", "l2_reg"},
                           "problem.");
    ProblemSpec ps;
    ps.kind = problem_kind_from_string(
        detail::require<std::string>(j, "kind", "problem."));
    ps.dimension = detail::require<std::size_t>(j, "dimension", "problem.");
    ps.sigma = detail::require<double>(j, "sigma", "problem.");
    if (ps.kind == ProblemKind::noisy_quadratic) {
        ps.lambda_min = detail::require<double>(j, "lambda_min", "problem.");
        ps.lambda_max = detail::require<double>(j, "lambda_max", "problem.");
    }
    if (ps.kind == ProblemKind::logistic_regression) {
        ps.n_points = detail::optional<std::size_t>(j, "n_points", 512, "problem.");
        ps.l2_reg = detail::optional<double>(j, "l2_reg", 0.01, "problem.");
    }
    return ps;
}

inline nlohmann::json problem_to_json(const ProblemSpec& ps) {
    nlohmann::json j;
    j["kind"] = to_string(ps.kind);
    j["dimension"] = ps.dimension;
    j["sigma"] = ps.sigma;
    if (ps.kind == ProblemKind::noisy_quadratic) {
        j["lambda_min"] = ps.lambda_min;
        j["lambda_max"] = ps.lambda_max;
    }
    if (ps.kind == ProblemKind::logistic_regression) {
        j["n_points"] = ps.n_points;
        j["l2_reg"] = ps.l2_reg;
    }
    return j;
}

inline SimConfig config_from_json(const nlohmann::json& j) {
    detail::reject_unknown(j,
                           {"algorithm", "workers", "local_steps", "iterations",
                            "gradient_budget", "beta", "gamma", "schedule", "eta_bar",
                            "seed", "timing", "problem", "diagnostics_cadence"},
                           "");
    SimConfig cfg;
    cfg.algorithm = algorithm_from_string(detail::require<std::string>(j, "algorithm", ""));
    cfg.hp.workers = detail::require<std::size_t>(j, "workers", "");
    cfg.hp.local_steps = detail::require<std::size_t>(j, "local_steps", "");
    bool has_t = j.contains("iterations");
    bool has_c = j.contains("gradient_budget");
    if (has_t == has_c)
        throw ConfigError("exactly one of 'iterations' or 'gradient_budget' must be given");
    if (has_t) {
        cfg.hp.iterations = detail::require<std::size_t>(j, "iterations", "");
    } else {
        std::size_t budget = detail::require<std::size_t>(j, "gradient_budget", "");
        if (cfg.hp.local_steps == 0 || budget % cfg.hp.local_steps != 0)
            throw ConfigError("gradient_budget must be a multiple of local_steps");
        cfg.hp.iterations = budget / cfg.hp.local_steps;
        cfg.budget_given = true;
    }
    cfg.hp.beta = detail::require<double>(j, "beta", "");
    cfg.hp.gamma = detail::require<double>(j, "gamma", "");
    std::string sched = detail::require<std::string>(j, "schedule", "");
    if (sched == "delay-penalized") {
        cfg.hp.schedule = Schedule::delay_penalized;
        if (j.contains("eta_bar"))
            throw ConfigError("eta_bar is only valid with the constant schedule");
    } else if (sched == "constant") {
        cfg.hp.schedule = Schedule::constant;
        cfg.hp.eta_bar = detail::require<double>(j, "eta_bar", "");
    } else {
        throw ConfigError("unknown schedule: " + sched);
    }
    cfg.seed = detail::require<std::uint64_t>(j, "seed", "");
    cfg.timing = j.contains("timing") ? timing_from_json(j.at("timing")) : TimingModel{};
    if (!j.contains("problem")) throw ConfigError("missing field 'problem'");
    cfg.problem = problem_from_json(j.at("problem"));
    cfg.diagnostics_cadence =
        detail::optional<std::size_t>(j, "diagnostics_cadence", 0, "");
    cfg.validate();
    return cfg;
}

inline nlohmann::json config_to_json(const SimConfig& cfg) {
    nlohmann::json j;
    j["algorithm"] = to_string(cfg.algorithm);
    j["workers"] = cfg.hp.workers;
    j["local_steps"] = cfg.hp.local_steps;
    if (cfg.budget_given)
        j["gradient_budget"] = cfg.gradient_budget();
    else
        j["iterations"] = cfg.hp.iterations;
    j["beta"] = cfg.hp.beta;
    j["gamma"] = cfg.hp.gamma;
    if (cfg.hp.schedule == Schedule::delay_penalized) {
        j["schedule"] = "delay-penalized";
    } else {
        j["schedule"] = "constant";
        j["eta_bar"] = cfg.hp.eta_bar;
    }
    j["seed"] = cfg.seed;
    j["timing"] = timing_to_json(cfg.timing);
    j["problem"] = problem_to_json(cfg.problem);
    j["diagnostics_cadence"] = cfg.diagnostics_cadence;
    return j;
}

}  // namespace orlomo
