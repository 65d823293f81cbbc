#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "orlomo/config.hpp"
#include "orlomo/errors.hpp"
#include "orlomo/simulator.hpp"
#include "orlomo/trace_io.hpp"

namespace orlomo {

// One swept dimension: a config field and the values it takes. Supported
// fields are top-level config knobs plus the two timing knobs.
struct SweepAxis {
    std::string field;
    std::vector<nlohmann::json> values;
};

struct SweepConfig {
    std::uint64_t master_seed = 0;
    nlohmann::json base;  // run config without a seed; cells derive their own
    std::vector<SweepAxis> axes;
};

inline const std::set<std::string>& sweep_axis_fields() {
    static const std::set<std::string> fields = {
        "algorithm", "workers", "local_steps", "beta",
        "gamma",     "slow_multiplier", "timing_kind"};
    return fields;
}

inline SweepConfig sweep_from_json(const nlohmann::json& j) {
    detail::reject_unknown(j, {"master_seed", "base", "axes"}, "");
    SweepConfig sw;
    sw.master_seed = detail::require<std::uint64_t>(j, "master_seed", "");
    if (!j.contains("base") || !j.at("base").is_object())
        throw ConfigError("sweep needs a 'base' config object");
    sw.base = j.at("base");
    if (sw.base.contains("seed"))
        throw ConfigError("sweep base must not carry a seed; cells derive their own");
    if (!j.contains("axes") || !j.at("axes").is_array() || j.at("axes").empty())
        throw ConfigError("sweep needs a non-empty 'axes' array");
    for (const nlohmann::json& a : j.at("axes")) {
        detail::reject_unknown(a, {"field", "values"}, "axes.");
        SweepAxis axis;
        axis.field = detail::require<std::string>(a, "field", "axes.");
        if (!sweep_axis_fields().count(axis.field))
            throw ConfigError("unsupported sweep axis: " + axis.field);
        if (!a.contains("values") || !a.at("values").is_array() || a.at("values").empty())
            throw ConfigError("axis '" + axis.field + "' needs a non-empty values array");
        for (const nlohmann::json& v : a.at("values")) axis.values.push_back(v);
        sw.axes.push_back(std::move(axis));
    }
    return sw;
}

struct SweepCell {
    std::vector<std::size_t> coords;  // index along each axis, in axis order
    std::string label;
    SimConfig config;
};

namespace detail {

inline void apply_axis_value(nlohmann::json& cfg, const std::string& field,
                             const nlohmann::json& value) {
    if (field == "slow_multiplier" || field == "timing_kind") {
        if (!cfg.contains("timing")) cfg["timing"] = nlohmann::json::object();
        cfg["timing"][field == "timing_kind" ? "kind" : "slow_multiplier"] = value;
    } else {
        cfg[field] = value;
    }
}

inline std::string cell_label(const std::vector<std::size_t>& coords) {
    std::string s = "cell";
    for (std::size_t c : coords) s += "-" + std::to_string(c);
    return s;
}

}  // namespace detail

// Cartesian expansion. The cell seed is a pure function of the master seed
// and the coordinate tuple, so any cell rerun standalone with that seed
// reproduces its sweep output exactly.
inline std::vector<SweepCell> expand_sweep(const SweepConfig& sw) {
    std::vector<SweepCell> cells;
    std::vector<std::size_t> coords(sw.axes.size(), 0);
    while (true) {
        nlohmann::json cfg = sw.base;
        std::vector<std::uint64_t> c64;
        for (std::size_t a = 0; a < sw.axes.size(); ++a) {
            detail::apply_axis_value(cfg, sw.axes[a].field, sw.axes[a].values[coords[a]]);
            c64.push_back(coords[a]);
        }
        cfg["seed"] = derive_seed(sw.master_seed, c64);
        SweepCell cell;
        cell.coords = coords;
        cell.label = detail::cell_label(coords);
        cell.config = config_from_json(cfg);
        cells.push_back(std::move(cell));

        std::size_t a = sw.axes.size();
        while (a > 0) {
            --a;
            if (++coords[a] < sw.axes[a].values.size()) break;
            coords[a] = 0;
            if (a == 0) return cells;
        }
    }
}

struct CellResult {
    std::string label;
    std::vector<std::size_t> coords;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    double final_grad_norm_sq = 0.0;
    double end_time = 0.0;
    std::size_t max_delay = 0;
    bool failed = false;
    std::string error;
};

namespace detail {

inline void write_file_atomic(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw TraceError("cannot open for writing: " + tmp.string());
        f << body;
        if (!f) throw TraceError("failed writing: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline CellResult run_sweep_cell(const SweepCell& cell, const std::filesystem::path& out_dir) {
    CellResult res;
    res.label = cell.label;
    res.coords = cell.coords;
    res.seed = cell.config.seed;
    try {
        RunTrace trace = run(cell.config);
        detail::write_file_atomic(out_dir / (cell.label + ".csv"), metrics_csv_string(trace));
        Problem problem(cell.config.problem, cell.config.seed);
        res.final_loss = problem.full_objective(trace.w_snapshots.back());
        res.final_grad_norm_sq = norm_sq(problem.full_gradient(trace.w_snapshots.back()));
        res.end_time = trace.end_time;
        DelayStats st = delay_statistics(trace);
        res.max_delay = st.max_delay;
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
    }
    return res;
}

inline std::string sweep_summary_csv(const SweepConfig& sw,
                                     const std::vector<SweepCell>& cells,
                                     const std::vector<CellResult>& results) {
    std::ostringstream ss;
    ss << "cell";
    for (const SweepAxis& a : sw.axes) ss << ',' << a.field;
    ss << ",seed,final_loss,final_grad_norm_sq,sim_time,max_delay,status\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const CellResult& r = results[i];
        ss << r.label;
        for (std::size_t a = 0; a < sw.axes.size(); ++a) {
            const nlohmann::json& v = sw.axes[a].values[cells[i].coords[a]];
            ss << ',' << (v.is_string() ? v.get<std::string>() : v.dump());
        }
        ss << ',' << r.seed << ',' << detail::fmt_double(r.final_loss) << ','
           << detail::fmt_double(r.final_grad_norm_sq) << ','
           << detail::fmt_double(r.end_time) << ',' << r.max_delay << ','
           << (r.failed ? "failed" : "ok") << "\n";
    }
    return ss.str();
}

// Runs every cell, writes one metrics CSV per cell plus summary.csv.
// Failures are captured per cell and reported in the summary.
inline std::vector<CellResult> run_sweep(const SweepConfig& sw,
                                         const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<SweepCell> cells = expand_sweep(sw);
    std::vector<CellResult> results;
    for (const SweepCell& cell : cells) results.push_back(run_sweep_cell(cell, out_dir));
    detail::write_file_atomic(out_dir / "summary.csv", sweep_summary_csv(sw, cells, results));
    return results;
}

}  // namespace orlomo
