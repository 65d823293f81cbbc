#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orlomo/errors.hpp"
#include "orlomo/problems.hpp"
#include "orlomo/rng.hpp"
#include "orlomo/vec.hpp"

namespace orlomo {

enum class Algorithm { orlomo, al_sgd, local_ormo_da, prsgdm };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::orlomo: return "orlomo";
        case Algorithm::al_sgd: return "al-sgd";
        case Algorithm::local_ormo_da: return "local-ormo-da";
        case Algorithm::prsgdm: return "prsgdm";
    }
    return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "orlomo") return Algorithm::orlomo;
    if (s == "al-sgd") return Algorithm::al_sgd;
    if (s == "local-ormo-da") return Algorithm::local_ormo_da;
    if (s == "prsgdm") return Algorithm::prsgdm;
    throw ConfigError("unknown algorithm: " + s);
}

enum class Schedule { delay_penalized, constant };

enum class LocalRule { msgd, sgd };

struct HyperParams {
    std::size_t workers = 1;      // K
    std::size_t local_steps = 1;  // S
    std::size_t iterations = 1;   // T (global)
    double beta = 0.0;
    double gamma = 0.01;
    Schedule schedule = Schedule::delay_penalized;
    double eta_bar = 1.0;  // constant schedule only

    void validate() const {
        if (workers == 0 || local_steps == 0 || iterations == 0)
            throw ConfigError("K, S, T must be positive");
        if (!(beta >= 0.0) || !(beta < 1.0))
            throw ConfigError("beta must lie in [0, 1)");
        if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
        if (schedule == Schedule::constant && !(eta_bar > 0.0))
            throw ConfigError("eta_bar must be > 0");
    }
};

// One worker -> server message. delta_h (the plain gradient sum scaled by
// gamma) is not part of the wire protocol proper; it is carried so traces
// can be verified after the fact.
struct LocalPacket {
    std::uint32_t worker = 0;
    std::size_t origin = 0;  // global index of the dispatched parameter
    ParamVector delta_u;
    ParamVector delta_w;
    ParamVector delta_h;
};

struct ServerState {
    std::size_t t = 0;
    ParamVector w;
    ParamVector u;

    static ServerState initial(const ParamVector& w0) {
        ServerState s;
        s.w = w0;
        s.u = ParamVector(w0.dim());
        return s;
    }
};

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// beta^p with integer p >= 0 and the convention beta^0 = 1, also at beta = 0.
inline double beta_pow(double beta, std::size_t p) {
    double r = 1.0;
    for (std::size_t i = 0; i < p; ++i) r *= beta;
    return r;
}

// beta + beta^2 + ... + beta^p, i.e. beta(1 - beta^p)/(1 - beta); zero when
// p = 0 or beta = 0. The explicit sum avoids 0/0 at beta -> 0 and
// cancellation when 1 - beta is tiny.
inline double geometric_tail(double beta, std::size_t p) {
    if (p == 0 || beta == 0.0) return 0.0;
    if (p <= 64) {
        double term = beta, acc = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            acc += term;
            term *= beta;
        }
        return acc;
    }
    return beta * (1.0 - beta_pow(beta, p)) / (1.0 - beta);
}

// Delay-penalized global learning rate of the convergence theorem:
// 1/K while tau <= 2K, 1/tau beyond.
inline double lr_schedule(const HyperParams& hp, std::size_t tau) {
    if (hp.schedule == Schedule::constant) return hp.eta_bar;
    if (tau <= 2 * hp.workers) return 1.0 / static_cast<double>(hp.workers);
    return 1.0 / static_cast<double>(tau);
}

// Runs S local iterations starting from a dispatched parameter and packs the
// result. msgd: u <- beta u + gamma g, w <- w - u. sgd: w <- w - gamma g.
// delta_w is accumulated as the sum of the applied steps (mathematically
// w_0 - w_S). Consumes exactly S gradient samples.
inline LocalPacket worker_local_run(const HyperParams& hp, const Problem& problem,
                                    std::uint32_t worker, const ParamVector& dispatched_w,
                                    std::size_t origin, RngStream& rng, LocalRule rule) {
    std::size_t d = dispatched_w.dim();
    ParamVector w_loc = dispatched_w;
    ParamVector u_loc(d);
    LocalPacket pkt;
    pkt.worker = worker;
    pkt.origin = origin;
    pkt.delta_u = ParamVector(d);
    pkt.delta_w = ParamVector(d);
    pkt.delta_h = ParamVector(d);
    for (std::size_t s = 0; s < hp.local_steps; ++s) {
        ParamVector g = problem.sample_gradient(w_loc, rng);
        if (!g.all_finite())
            throw NumericError("non-finite gradient in local step " + std::to_string(s) +
                               " of worker " + std::to_string(worker));
        if (rule == LocalRule::msgd) {
            for (std::size_t i = 0; i < d; ++i) {
                double step = hp.beta * u_loc[i] + hp.gamma * g[i];
                u_loc[i] = step;
                w_loc[i] -= step;
                pkt.delta_w[i] += step;
                pkt.delta_h[i] += hp.gamma * g[i];
            }
        } else {
            for (std::size_t i = 0; i < d; ++i) {
                double step = hp.gamma * g[i];
                w_loc[i] -= step;
                pkt.delta_w[i] += step;
                pkt.delta_h[i] += step;
            }
        }
    }
    // At beta = 0 the momentum side of the protocol is identically
    // zero-weighted downstream; emit a zero payload so the run matches the
    // momentum-free algorithms exactly.
    if (rule == LocalRule::msgd && hp.beta != 0.0) pkt.delta_u = u_loc;
    return pkt;
}

namespace detail {

inline void require_causal(const ServerState& state, const LocalPacket& pkt) {
    if (pkt.origin > state.t)
        throw ProtocolError("packet origin " + std::to_string(pkt.origin) +
                            " is ahead of server iteration " + std::to_string(state.t));
}

// Group boundary: fires when ceil(t/K) > ceil((t-1)/K); never at t = 0.
inline bool group_boundary(std::size_t t, std::size_t K) {
    return t > 0 && ceil_div(t, K) > ceil_div(t - 1, K);
}

inline void apply_boundary(ServerState& s, double beta, std::size_t K) {
    if (!group_boundary(s.t, K)) return;
    for (std::size_t i = 0; i < s.w.dim(); ++i) {
        double bu = beta * s.u[i];
        s.w[i] -= bu;
        s.u[i] = bu;
    }
}

}  // namespace detail

// Ordered merge of a local momentum packet. The packet's group weight is
// beta^p with p = ceil(t/K) - ceil(origin/K); the parameter additionally
// absorbs the compensation its group-mates already applied.
inline ServerState server_step_orlomo(const HyperParams& hp, const ServerState& state,
                                      const LocalPacket& pkt, double eta) {
    detail::require_causal(state, pkt);
    ServerState next = state;
    detail::apply_boundary(next, hp.beta, hp.workers);
    std::size_t p = ceil_div(state.t, hp.workers) - ceil_div(pkt.origin, hp.workers);
    if (hp.beta != 0.0) {
        double gain = beta_pow(hp.beta, p) * eta;
        for (std::size_t i = 0; i < next.u.dim(); ++i) next.u[i] += gain * pkt.delta_u[i];
    }
    for (std::size_t i = 0; i < next.w.dim(); ++i) next.w[i] -= eta * pkt.delta_w[i];
    double comp = geometric_tail(hp.beta, p) * eta;
    if (comp != 0.0)
        for (std::size_t i = 0; i < next.w.dim(); ++i) next.w[i] -= comp * pkt.delta_u[i];
    next.t = state.t + 1;
    return next;
}

inline ServerState server_step_alsgd(const HyperParams& hp, const ServerState& state,
                                     const LocalPacket& pkt, double eta) {
    (void)hp;
    detail::require_causal(state, pkt);
    ServerState next = state;
    for (std::size_t i = 0; i < next.w.dim(); ++i) next.w[i] -= eta * pkt.delta_w[i];
    next.t = state.t + 1;
    return next;
}

// Delay-adjusted merge of a plain local update: the momentum accumulates
// beta^p eta delta_w and the parameter moves by the full geometric factor
// (1 - beta^{p+1})/(1 - beta) = 1 + (beta + ... + beta^p).
inline ServerState server_step_local_ormo_da(const HyperParams& hp, const ServerState& state,
                                             const LocalPacket& pkt, double eta) {
    detail::require_causal(state, pkt);
    ServerState next = state;
    detail::apply_boundary(next, hp.beta, hp.workers);
    std::size_t p = ceil_div(state.t, hp.workers) - ceil_div(pkt.origin, hp.workers);
    if (hp.beta != 0.0) {
        double gain = beta_pow(hp.beta, p) * eta;
        for (std::size_t i = 0; i < next.u.dim(); ++i) next.u[i] += gain * pkt.delta_w[i];
    }
    double coeff = (1.0 + geometric_tail(hp.beta, p)) * eta;
    for (std::size_t i = 0; i < next.w.dim(); ++i) next.w[i] -= coeff * pkt.delta_w[i];
    next.t = state.t + 1;
    return next;
}

// Synchronous baseline round: average the K local displacements, restart
// local momenta (nothing is aggregated server-side).
inline ServerState server_round_prsgdm(const HyperParams& hp, const ServerState& state,
                                       const std::vector<LocalPacket>& packets, double eta) {
    if (packets.size() != hp.workers)
        throw ProtocolError("synchronous round expects exactly K packets");
    for (const LocalPacket& pkt : packets)
        if (pkt.origin != state.t)
            throw ProtocolError("synchronous round packet with mismatched origin");
    ServerState next = state;
    std::size_t d = state.w.dim();
    ParamVector acc(d);
    for (const LocalPacket& pkt : packets) acc += pkt.delta_w;
    double inv_k = 1.0 / static_cast<double>(hp.workers);
    for (std::size_t i = 0; i < d; ++i) next.w[i] -= eta * (acc[i] * inv_k);
    next.t = state.t + 1;
    return next;
}

struct MsgdTrajectory {
    std::vector<ParamVector> w;  // w_0 .. w_steps
    std::vector<ParamVector> u;  // u_0 .. u_steps
};

// Sequential momentum SGD, u_{t+1} = beta u_t + gamma g_t and
// w_{t+1} = w_t - u_{t+1}, with the parameter update written in the
// expanded form w_t - beta u_t - gamma g_t. Used as an equivalence oracle.
inline MsgdTrajectory msgd_reference(const HyperParams& hp, const Problem& problem,
                                     const ParamVector& w0, RngStream& rng,
                                     std::size_t steps) {
    MsgdTrajectory traj;
    ParamVector w = w0;
    ParamVector u(w0.dim());
    traj.w.push_back(w);
    traj.u.push_back(u);
    for (std::size_t t = 0; t < steps; ++t) {
        ParamVector g = problem.sample_gradient(w, rng);
        if (!g.all_finite())
            throw NumericError("non-finite gradient at reference step " + std::to_string(t));
        for (std::size_t i = 0; i < w.dim(); ++i) {
            double bu = hp.beta * u[i];
            double gg = hp.gamma * g[i];
            u[i] = bu + gg;
            w[i] = (w[i] - bu) - gg;
        }
        traj.w.push_back(w);
        traj.u.push_back(u);
    }
    return traj;
}

}  // namespace orlomo
