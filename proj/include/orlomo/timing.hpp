#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "orlomo/errors.hpp"
#include "orlomo/rng.hpp"

namespace orlomo {

enum class TimingKind { constant, uniform_jitter, heterogeneous };

inline std::string to_string(TimingKind k) {
    switch (k) {
        case TimingKind::constant: return "constant";
        case TimingKind::uniform_jitter: return "uniform-jitter";
        case TimingKind::heterogeneous: return "heterogeneous";
    }
    return "?";
}

inline TimingKind timing_kind_from_string(const std::string& s) {
    if (s == "constant") return TimingKind::constant;
    if (s == "uniform-jitter") return TimingKind::uniform_jitter;
    if (s == "heterogeneous") return TimingKind::heterogeneous;
    throw ConfigError("unknown timing kind: " + s);
}

// Simulated compute-time model. Each local run costs
// S * base * (1 + jitter * u) seconds (u uniform from the worker's timing
// stream), scaled by slow_multiplier for designated slow workers, plus a
// fixed communication latency.
struct TimingModel {
    TimingKind kind = TimingKind::constant;
    double base_block_time = 1.0;  // seconds per local-iteration block
    double jitter = 0.0;           // fraction in [0, 1)
    std::vector<std::uint32_t> slow_workers;
    double slow_multiplier = 1.0;
    double latency = 0.0;

    void validate(std::size_t workers) const {
        if (!(base_block_time > 0.0) || !std::isfinite(base_block_time))
            throw ConfigError("timing.base_block_time must be positive and finite");
        if (!(jitter >= 0.0) || !(jitter < 1.0))
            throw ConfigError("timing.jitter must lie in [0, 1)");
        if (!(slow_multiplier >= 1.0)) throw ConfigError("timing.slow_multiplier must be >= 1");
        if (!(latency >= 0.0)) throw ConfigError("timing.latency must be >= 0");
        if (kind == TimingKind::constant && jitter != 0.0)
            throw ConfigError("timing.jitter must be 0 for constant timing");
        for (std::uint32_t w : slow_workers)
            if (w >= workers) throw ConfigError("timing.slow_workers entry out of range");
    }

    bool is_slow(std::uint32_t worker) const {
        return kind == TimingKind::heterogeneous &&
               std::find(slow_workers.begin(), slow_workers.end(), worker) != slow_workers.end();
    }

    // Duration of one local run of S steps for the given worker.
    double draw_run_duration(std::uint32_t worker, std::size_t local_steps,
                             RngStream& timing_rng) const {
        double block = base_block_time;
        if (kind != TimingKind::constant && jitter > 0.0)
            block *= 1.0 + jitter * timing_rng.uniform();
        if (is_slow(worker)) block *= slow_multiplier;
        return static_cast<double>(local_steps) * block + latency;
    }
};

}  // namespace orlomo
