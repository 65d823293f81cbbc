#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "orlomo/config.hpp"
#include "orlomo/errors.hpp"
#include "orlomo/problems.hpp"
#include "orlomo/simulator.hpp"
#include "orlomo/sweep.hpp"
#include "orlomo/trace_io.hpp"
#include "orlomo/trace_oracle.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 1;
constexpr int exit_numeric_error = 2;
constexpr int exit_verification_failure = 3;

nlohmann::json load_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw orlomo::ConfigError("cannot open file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw orlomo::ConfigError(path + " is not valid JSON: " + e.what());
    }
    return j;
}

std::optional<std::uint64_t> seed_override() {
    const char* env = std::getenv("ORLOMO_SEED");
    if (env == nullptr || *env == '\0') return std::nullopt;
    try {
        return std::stoull(env);
    } catch (const std::exception&) {
        throw orlomo::ConfigError("ORLOMO_SEED is not a valid unsigned integer");
    }
}

orlomo::SimConfig load_config(const std::string& path) {
    orlomo::SimConfig cfg = orlomo::config_from_json(load_json(path));
    if (auto s = seed_override()) cfg.seed = *s;
    return cfg;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw orlomo::ConfigError("cannot open file for writing: " + path);
    f << body;
    if (!f) throw orlomo::ConfigError("failed writing file: " + path);
}

int cmd_run(const std::string& config_path, const std::string& trace_path,
            const std::string& metrics_path) {
    orlomo::SimConfig cfg = load_config(config_path);
    orlomo::RunTrace trace = orlomo::run(cfg);
    if (!trace_path.empty()) orlomo::save_trace(trace, trace_path);
    if (!metrics_path.empty()) write_text_file(metrics_path, orlomo::metrics_csv_string(trace));
    orlomo::Problem problem(cfg.problem, cfg.seed);
    const orlomo::ParamVector& w = trace.w_snapshots.back();
    std::cout << "iterations: " << trace.arrivals.size() << "\n"
              << "sim_time: " << trace.end_time << "\n"
              << "final_loss: " << problem.full_objective(w) << "\n"
              << "final_grad_norm_sq: " << orlomo::norm_sq(problem.full_gradient(w)) << "\n";
    return exit_ok;
}

int cmd_verify(const std::string& input_path, const std::string& report_path) {
    nlohmann::json j = load_json(input_path);
    orlomo::RunTrace trace;
    if (j.is_object() && j.value("format", "") == std::string("orlomo-trace-v1")) {
        trace = orlomo::trace_from_json(j);
    } else {
        orlomo::SimConfig cfg = orlomo::config_from_json(j);
        if (auto s = seed_override()) cfg.seed = *s;
        cfg.diagnostics_cadence = 1;  // verify mode records every iteration
        trace = orlomo::run(cfg);
    }
    if (trace.config.algorithm != orlomo::Algorithm::orlomo)
        throw orlomo::ConfigError("verification applies to orlomo traces only");

    std::vector<orlomo::VerificationReport> reports = orlomo::verify_trace(trace);
    orlomo::DelayStats st = orlomo::delay_statistics(trace);

    bool all_pass = st.tau_sum_bound_ok;
    if (trace.config.hp.schedule == orlomo::Schedule::delay_penalized)
        all_pass = all_pass && st.eta_sum_bound_ok;
    nlohmann::json out;
    out["checks"] = nlohmann::json::array();
    for (const orlomo::VerificationReport& r : reports) {
        out["checks"].push_back(orlomo::report_to_json(r));
        all_pass = all_pass && r.pass;
    }
    out["delay"] = {{"max_delay", st.max_delay},
                    {"sum_tau", st.sum_tau},
                    {"sum_eta", st.sum_eta},
                    {"tau_sum_bound_ok", st.tau_sum_bound_ok},
                    {"eta_sum_bound_ok", st.eta_sum_bound_ok}};
    out["pass"] = all_pass;
    std::string body = out.dump(2) + "\n";
    if (report_path.empty())
        std::cout << body;
    else
        write_text_file(report_path, body);
    return all_pass ? exit_ok : exit_verification_failure;
}

int cmd_sweep(const std::string& sweep_path, const std::string& out_dir) {
    orlomo::SweepConfig sw = orlomo::sweep_from_json(load_json(sweep_path));
    if (auto s = seed_override()) sw.master_seed = *s;
    std::vector<orlomo::CellResult> results = orlomo::run_sweep(sw, out_dir);
    bool any_failed = false;
    for (const orlomo::CellResult& r : results) {
        if (r.failed) {
            any_failed = true;
            std::cerr << r.label << ": " << r.error << "\n";
        }
    }
    std::cout << "cells: " << results.size() << "\n";
    return any_failed ? exit_numeric_error : exit_ok;
}

int cmd_dump_problem(const std::string& config_path) {
    orlomo::SimConfig cfg = load_config(config_path);
    orlomo::Problem problem(cfg.problem, cfg.seed);
    std::cout << problem.dump().dump(2) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic asynchronous local-update momentum SGD simulator"};
    app.require_subcommand(1);

    std::string config_path, trace_path, metrics_path;
    CLI::App* run = app.add_subcommand("run", "run one simulation from a config");
    run->add_option("config", config_path, "run config JSON")->required();
    run->add_option("--trace", trace_path, "write the full trace here");
    run->add_option("--metrics", metrics_path, "write the metrics CSV here");

    std::string verify_path, report_path;
    CLI::App* verify = app.add_subcommand("verify", "check trace identities");
    verify->add_option("input", verify_path, "trace file or run config JSON")->required();
    verify->add_option("--report", report_path, "write the verification report here");

    std::string sweep_path, sweep_out;
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid");
    sweep->add_option("sweep", sweep_path, "sweep config JSON")->required();
    sweep->add_option("--out", sweep_out, "output directory")->required();

    std::string dump_path;
    CLI::App* dump = app.add_subcommand("dump-problem", "print the generated problem instance");
    dump->add_option("config", dump_path, "run config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_config_error;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, trace_path, metrics_path);
        if (verify->parsed()) return cmd_verify(verify_path, report_path);
        if (sweep->parsed()) return cmd_sweep(sweep_path, sweep_out);
        if (dump->parsed()) return cmd_dump_problem(dump_path);
    } catch (const orlomo::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return exit_numeric_error;
    } catch (const orlomo::TraceError& e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const orlomo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    return exit_config_error;
}
