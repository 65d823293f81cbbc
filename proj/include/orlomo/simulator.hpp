#pragma once

#include <cstdint>
#include <map>
#include <queue>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "orlomo/config.hpp"
#include "orlomo/errors.hpp"
#include "orlomo/optimizers.hpp"
#include "orlomo/problems.hpp"
#include "orlomo/rng.hpp"
#include "orlomo/timing.hpp"

namespace orlomo {

struct ArrivalRecord {
    std::size_t t = 0;
    long long worker = -1;  // -1 for synchronous rounds
    std::size_t origin = 0;
    std::size_t tau = 0;
    double eta = 0.0;
    double sim_time = 0.0;
};

struct DiagnosticsRow {
    std::size_t t = 0;
    double loss = 0.0;
    double grad_norm_sq = 0.0;
};

struct CancelledPacket {
    LocalPacket packet;
    double would_arrive = 0.0;
};

// Complete record of one run: every arrival, every packet (applied and
// cancelled), full parameter/momentum snapshots and periodic diagnostics.
struct RunTrace {
    SimConfig config;
    std::vector<ArrivalRecord> arrivals;
    std::vector<LocalPacket> packets;  // applied, in arrival order
    std::vector<CancelledPacket> cancelled;
    std::vector<ParamVector> w_snapshots;  // w_0 .. w_T
    std::vector<ParamVector> u_snapshots;  // u_0 .. u_T
    std::vector<DiagnosticsRow> diagnostics;
    std::size_t dispatch_count = 0;
    double end_time = 0.0;
};

namespace detail {

struct Event {
    double time = 0.0;
    std::uint32_t worker = 0;
    LocalPacket packet;
};

// Pops in (timestamp, worker id) lexicographic order.
struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.worker > b.worker;
    }
};

inline void record_diagnostics(RunTrace& trace, const Problem& problem, std::size_t t,
                               const ParamVector& w, std::size_t cadence) {
    if (t % cadence != 0) return;
    DiagnosticsRow row;
    row.t = t;
    row.loss = problem.full_objective(w);
    row.grad_norm_sq = norm_sq(problem.full_gradient(w));
    trace.diagnostics.push_back(row);
}

}  // namespace detail

// Asynchronous event-driven run (orlomo, al-sgd, local-ormo-da). The server
// processes packet arrivals in event order, applies the algorithm's step and
// immediately re-dispatches to the arriving worker. Packets still in flight
// after T iterations are recorded as cancelled and never applied.
inline RunTrace run_simulation(const SimConfig& config) {
    config.validate();
    if (config.algorithm == Algorithm::prsgdm)
        throw ConfigError("prsgdm requires the synchronous driver");
    const HyperParams& hp = config.hp;
    Problem problem(config.problem, config.seed);
    std::size_t K = hp.workers, T = hp.iterations;
    LocalRule rule =
        config.algorithm == Algorithm::orlomo ? LocalRule::msgd : LocalRule::sgd;

    RunTrace trace;
    trace.config = config;
    std::size_t cadence = config.effective_cadence();

    std::vector<RngStream> grad_rng, timing_rng;
    grad_rng.reserve(K);
    timing_rng.reserve(K);
    for (std::uint32_t k = 0; k < K; ++k) {
        grad_rng.emplace_back(config.seed, k, StreamPurpose::gradient);
        timing_rng.emplace_back(config.seed, k, StreamPurpose::timing);
    }

    ServerState state = ServerState::initial(ParamVector(config.problem.dimension));
    std::vector<std::size_t> ite(K, 0);

    std::priority_queue<detail::Event, std::vector<detail::Event>, detail::EventLater> queue;
    auto dispatch = [&](std::uint32_t k, const ParamVector& w, std::size_t origin,
                        double now) {
        detail::Event ev;
        ev.worker = k;
        ev.packet = worker_local_run(hp, problem, k, w, origin, grad_rng[k], rule);
        ev.time = now + config.timing.draw_run_duration(k, hp.local_steps, timing_rng[k]);
        queue.push(std::move(ev));
        ++trace.dispatch_count;
    };

    for (std::uint32_t k = 0; k < K; ++k) dispatch(k, state.w, 0, 0.0);

    trace.w_snapshots.push_back(state.w);
    trace.u_snapshots.push_back(state.u);

    for (std::size_t t = 0; t < T; ++t) {
        if (queue.empty()) throw ConfigError("event queue exhausted before T iterations");
        detail::record_diagnostics(trace, problem, t, state.w, cadence);
        detail::Event ev = queue.top();
        queue.pop();
        std::uint32_t k = ev.worker;
        if (ev.packet.origin != ite[k])
            throw ProtocolError("packet origin disagrees with dispatch table");
        std::size_t tau = t - ite[k];
        double eta = lr_schedule(hp, tau);
        switch (config.algorithm) {
            case Algorithm::orlomo:
                state = server_step_orlomo(hp, state, ev.packet, eta);
                break;
            case Algorithm::al_sgd:
                state = server_step_alsgd(hp, state, ev.packet, eta);
                break;
            case Algorithm::local_ormo_da:
                state = server_step_local_ormo_da(hp, state, ev.packet, eta);
                break;
            default: break;
        }
        if (!state.w.all_finite() || !state.u.all_finite())
            throw NumericError("non-finite server state at iteration " + std::to_string(t));
        trace.arrivals.push_back({t, static_cast<long long>(k), ev.packet.origin, tau, eta,
                                  ev.time});
        trace.packets.push_back(std::move(ev.packet));
        trace.w_snapshots.push_back(state.w);
        trace.u_snapshots.push_back(state.u);
        trace.end_time = ev.time;
        ite[k] = t + 1;
        if (t + 1 < T) dispatch(k, state.w, t + 1, ev.time);
    }

    while (!queue.empty()) {
        trace.cancelled.push_back({queue.top().packet, queue.top().time});
        queue.pop();
    }
    return trace;
}

// Synchronous baseline driver (prsgdm): every round dispatches the same
// parameter to all K workers and waits for the slowest before updating.
inline RunTrace run_synchronous(const SimConfig& config) {
    config.validate();
    if (config.algorithm != Algorithm::prsgdm)
        throw ConfigError("synchronous driver only supports prsgdm");
    const HyperParams& hp = config.hp;
    Problem problem(config.problem, config.seed);
    std::size_t K = hp.workers;
    std::size_t rounds = config.synchronous_rounds();

    RunTrace trace;
    trace.config = config;
    std::size_t cadence = std::max<std::size_t>(
        1, config.diagnostics_cadence > 0 ? config.diagnostics_cadence
                                          : std::max<std::size_t>(1, rounds / 500));

    std::vector<RngStream> grad_rng, timing_rng;
    for (std::uint32_t k = 0; k < K; ++k) {
        grad_rng.emplace_back(config.seed, k, StreamPurpose::gradient);
        timing_rng.emplace_back(config.seed, k, StreamPurpose::timing);
    }

    ServerState state = ServerState::initial(ParamVector(config.problem.dimension));
    double eta = hp.schedule == Schedule::constant ? hp.eta_bar : 1.0;
    double now = 0.0;

    trace.w_snapshots.push_back(state.w);
    trace.u_snapshots.push_back(state.u);

    for (std::size_t r = 0; r < rounds; ++r) {
        detail::record_diagnostics(trace, problem, r, state.w, cadence);
        std::vector<LocalPacket> packets;
        double round_duration = 0.0;
        for (std::uint32_t k = 0; k < K; ++k) {
            packets.push_back(worker_local_run(hp, problem, k, state.w, r, grad_rng[k],
                                               LocalRule::msgd));
            double dur = config.timing.draw_run_duration(k, hp.local_steps, timing_rng[k]);
            round_duration = std::max(round_duration, dur);
            ++trace.dispatch_count;
        }
        now += round_duration;
        state = server_round_prsgdm(hp, state, packets, eta);
        if (!state.w.all_finite())
            throw NumericError("non-finite server state at round " + std::to_string(r));
        trace.arrivals.push_back({r, -1, r, 0, eta, now});
        for (LocalPacket& p : packets) trace.packets.push_back(std::move(p));
        trace.w_snapshots.push_back(state.w);
        trace.u_snapshots.push_back(state.u);
        trace.end_time = now;
    }
    return trace;
}

inline RunTrace run(const SimConfig& config) {
    return config.algorithm == Algorithm::prsgdm ? run_synchronous(config)
                                                 : run_simulation(config);
}

// Exact delay accounting over a completed trace.
struct DelayStats {
    std::size_t max_delay = 0;
    std::uint64_t sum_tau = 0;
    double sum_eta = 0.0;
    std::map<std::size_t, std::size_t> histogram;
    std::size_t count_below_2k = 0;  // tau < 2K
    bool tau_sum_bound_ok = false;   // sum tau <= (K-1) T, integer-exact
    bool eta_sum_bound_ok = false;   // sum eta >= T/(2K), rational-exact
};

inline DelayStats delay_statistics(const RunTrace& trace) {
    const std::size_t K = trace.config.hp.workers;
    const std::size_t T = trace.arrivals.size();
    DelayStats st;
    using boost::multiprecision::cpp_int;
    cpp_int num = 0, den = 1;  // exact running sum of eta as a fraction
    for (const ArrivalRecord& a : trace.arrivals) {
        st.max_delay = std::max(st.max_delay, a.tau);
        st.sum_tau += a.tau;
        st.sum_eta += a.eta;
        ++st.histogram[a.tau];
        if (a.tau < 2 * K) ++st.count_below_2k;
        std::size_t eta_den = (a.tau <= 2 * K) ? K : a.tau;
        num = num * eta_den + den;
        den = den * eta_den;
    }
    st.tau_sum_bound_ok =
        st.sum_tau <= static_cast<std::uint64_t>(K - 1) * static_cast<std::uint64_t>(T);
    // sum eta >= T/(2K)  <=>  2K num >= T den
    st.eta_sum_bound_ok = 2 * cpp_int(K) * num >= cpp_int(T) * den;
    return st;
}

}  // namespace orlomo
