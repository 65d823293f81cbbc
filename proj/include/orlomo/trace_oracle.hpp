#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "orlomo/errors.hpp"
#include "orlomo/optimizers.hpp"
#include "orlomo/simulator.hpp"

namespace orlomo {

// Reconstructed analysis-side bookkeeping for an asynchronous momentum trace:
// the next-arrival table, its learning-rate assignments, the in-flight
// dispatch table, and the three auxiliary iterate sequences rebuilt from the
// recorded packets.
struct AuxSequences {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::vector<std::uint32_t> k;                // k_t, the arriving worker per iteration
    std::vector<double> eta;                     // eta_t as applied
    std::vector<std::vector<std::size_t>> next;  // next[t][k], npos when undefined
    std::vector<std::vector<std::size_t>> ite;   // ite[t][k], dispatch table during t
    std::vector<ParamVector> u_hat;              // index 1..defined_upto ([0] unused)
    std::vector<ParamVector> w_hat;
    std::vector<ParamVector> y_hat;
    std::size_t defined_upto = 0;  // sequences valid for 1 <= t <= defined_upto

    bool eta_hat_defined(std::size_t t, std::size_t worker) const {
        return next[t][worker] != npos;
    }
    double eta_hat(std::size_t t, std::size_t worker) const {
        return eta[next[t][worker]];
    }
};

struct VerificationReport {
    std::string name;
    double max_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    std::size_t checked_first = 0;
    std::size_t checked_last = 0;  // inclusive; checked_last < checked_first means empty
    std::size_t excluded = 0;      // iterations with undefined eta-hat terms
    bool pass = false;
};

inline nlohmann::json report_to_json(const VerificationReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    j["max_abs_dev"] = r.max_abs_dev;
    j["max_rel_dev"] = r.max_rel_dev;
    j["checked_range"] = nlohmann::json::array({r.checked_first, r.checked_last});
    j["excluded"] = r.excluded;
    j["pass"] = r.pass;
    return j;
}

inline constexpr double lemma_tolerance = 1e-10;
inline constexpr double packet_tolerance = 1e-12;

namespace detail {

// Every dispatched packet keyed by (origin, worker); cancelled ones included.
class PacketIndex {
  public:
    explicit PacketIndex(const RunTrace& trace) {
        for (const LocalPacket& p : trace.packets) table_[{p.origin, p.worker}] = &p;
        for (const CancelledPacket& c : trace.cancelled)
            table_[{c.packet.origin, c.packet.worker}] = &c.packet;
    }

    const LocalPacket& at(std::size_t origin, std::uint32_t worker) const {
        auto it = table_.find({origin, worker});
        if (it == table_.end())
            throw TraceError("missing packet for origin " + std::to_string(origin) +
                             ", worker " + std::to_string(worker));
        return *it->second;
    }

  private:
    std::map<std::pair<std::size_t, std::uint32_t>, const LocalPacket*> table_;
};

inline void require_orlomo(const RunTrace& trace, const char* what) {
    if (trace.config.algorithm != Algorithm::orlomo)
        throw TraceError(std::string(what) + " only applies to orlomo traces");
}

inline void track_deviation(VerificationReport& r, const ParamVector& lhs,
                            const ParamVector& rhs) {
    double abs_dev = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < lhs.dim(); ++i) {
        abs_dev = std::max(abs_dev, std::abs(lhs[i] - rhs[i]));
        scale = std::max(scale, std::abs(rhs[i]));
    }
    r.max_abs_dev = std::max(r.max_abs_dev, abs_dev);
    r.max_rel_dev = std::max(r.max_rel_dev, abs_dev / (1.0 + scale));
}

}  // namespace detail

inline AuxSequences build_aux_sequences(const RunTrace& trace) {
    detail::require_orlomo(trace, "auxiliary-sequence reconstruction");
    const std::size_t T = trace.arrivals.size();
    const std::size_t K = trace.config.hp.workers;
    const double beta = trace.config.hp.beta;
    if (trace.w_snapshots.size() != T + 1 || trace.u_snapshots.size() != T + 1)
        throw TraceError("trace is missing state snapshots");

    AuxSequences aux;
    aux.k.resize(T);
    aux.eta.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        if (trace.arrivals[t].worker < 0 ||
            static_cast<std::size_t>(trace.arrivals[t].worker) >= K)
            throw TraceError("arrival worker id out of range");
        aux.k[t] = static_cast<std::uint32_t>(trace.arrivals[t].worker);
        aux.eta[t] = trace.arrivals[t].eta;
    }

    aux.next.assign(T + 1, std::vector<std::size_t>(K, AuxSequences::npos));
    for (std::size_t t = T; t-- > 0;) {
        aux.next[t] = aux.next[t + 1];
        aux.next[t][aux.k[t]] = t;
    }

    aux.ite.assign(T, std::vector<std::size_t>(K, 0));
    std::vector<std::size_t> cur(K, 0);
    for (std::size_t t = 0; t < T; ++t) {
        aux.ite[t] = cur;
        if (trace.arrivals[t].origin != cur[aux.k[t]])
            throw TraceError("recorded origin disagrees with the dispatch table at t=" +
                             std::to_string(t));
        cur[aux.k[t]] = t + 1;
    }

    detail::PacketIndex packets(trace);
    const ParamVector& w0 = trace.w_snapshots[0];
    const std::size_t d = w0.dim();

    bool base_ok = true;
    for (std::size_t k = 0; k < K; ++k) base_ok = base_ok && aux.eta_hat_defined(0, k);
    aux.u_hat.assign(1, ParamVector());
    aux.w_hat.assign(1, ParamVector());
    aux.y_hat.assign(1, ParamVector());
    if (!base_ok || T == 0) return aux;

    ParamVector uh(d);
    ParamVector wh = w0;
    ParamVector yh = w0;
    for (std::size_t k = 0; k < K; ++k) {
        const LocalPacket& p = packets.at(0, static_cast<std::uint32_t>(k));
        double eh = aux.eta_hat(0, k);
        uh.axpy(eh, p.delta_u);
        wh.axpy(-eh, p.delta_w);
        yh.axpy(-eh / (1.0 - beta), p.delta_h);
    }
    aux.u_hat.push_back(uh);
    aux.w_hat.push_back(wh);
    aux.y_hat.push_back(yh);
    aux.defined_upto = 1;

    // u-hat/w-hat advance with the packet dispatched to worker k_{t-1} at
    // origin t; its eta-hat is the rate at that packet's eventual arrival.
    for (std::size_t t = 1; t + 1 <= T; ++t) {
        std::uint32_t kw = aux.k[t - 1];
        if (!aux.eta_hat_defined(t, kw)) break;
        double eh = aux.eta_hat(t, kw);
        const LocalPacket& p = packets.at(t, kw);
        bool boundary = (t - 1) % K == 0;
        if (boundary) {
            for (std::size_t i = 0; i < d; ++i) {
                wh[i] -= beta * uh[i];
                uh[i] = beta * uh[i];
            }
        }
        uh.axpy(eh, p.delta_u);
        wh.axpy(-eh, p.delta_w);
        yh.axpy(-eh / (1.0 - beta), p.delta_h);
        aux.u_hat.push_back(uh);
        aux.w_hat.push_back(wh);
        aux.y_hat.push_back(yh);
        aux.defined_upto = t + 1;
    }
    return aux;
}

// u_hat_{t+1} - u_{t+1} against the in-flight momentum sum over workers
// other than the one that just arrived.
inline VerificationReport check_lemma1(const RunTrace& trace, const AuxSequences& aux) {
    detail::require_orlomo(trace, "momentum difference check");
    const std::size_t T = trace.arrivals.size();
    const std::size_t K = trace.config.hp.workers;
    const double beta = trace.config.hp.beta;
    detail::PacketIndex packets(trace);

    VerificationReport r;
    r.name = "lemma1_momentum_difference";
    r.checked_first = 0;
    r.checked_last = aux.defined_upto == 0 ? std::size_t(-1) : aux.defined_upto - 1;
    std::size_t checked = 0;
    for (std::size_t t = 0; t + 1 <= aux.defined_upto; ++t) {
        bool ok = true;
        for (std::size_t k = 0; k < K && ok; ++k)
            if (k != aux.k[t]) ok = aux.eta_hat_defined(aux.ite[t][k], k);
        if (!ok) continue;
        ParamVector lhs = aux.u_hat[t + 1];
        lhs -= trace.u_snapshots[t + 1];
        ParamVector rhs(lhs.dim());
        for (std::size_t k = 0; k < K; ++k) {
            if (k == aux.k[t]) continue;
            std::size_t o = aux.ite[t][k];
            std::size_t p = ceil_div(t, K) - ceil_div(o, K);
            double coeff = beta_pow(beta, p) * aux.eta_hat(o, k);
            rhs.axpy(coeff, packets.at(o, static_cast<std::uint32_t>(k)).delta_u);
        }
        detail::track_deviation(r, lhs, rhs);
        ++checked;
    }
    r.excluded = T - checked;
    r.pass = checked > 0 && r.max_rel_dev <= lemma_tolerance;
    return r;
}

// w_hat_{t+1} - w_{t+1} against the in-flight displacement plus the
// geometric momentum compensation.
inline VerificationReport check_lemma2(const RunTrace& trace, const AuxSequences& aux) {
    detail::require_orlomo(trace, "parameter difference check");
    const std::size_t T = trace.arrivals.size();
    const std::size_t K = trace.config.hp.workers;
    const double beta = trace.config.hp.beta;
    detail::PacketIndex packets(trace);

    VerificationReport r;
    r.name = "lemma2_parameter_difference";
    r.checked_first = 0;
    r.checked_last = aux.defined_upto == 0 ? std::size_t(-1) : aux.defined_upto - 1;
    std::size_t checked = 0;
    for (std::size_t t = 0; t + 1 <= aux.defined_upto; ++t) {
        bool ok = true;
        for (std::size_t k = 0; k < K && ok; ++k)
            if (k != aux.k[t]) ok = aux.eta_hat_defined(aux.ite[t][k], k);
        if (!ok) continue;
        ParamVector lhs = aux.w_hat[t + 1];
        lhs -= trace.w_snapshots[t + 1];
        ParamVector rhs(lhs.dim());
        for (std::size_t k = 0; k < K; ++k) {
            if (k == aux.k[t]) continue;
            std::size_t o = aux.ite[t][k];
            std::size_t p = ceil_div(t, K) - ceil_div(o, K);
            double eh = aux.eta_hat(o, k);
            const LocalPacket& pkt = packets.at(o, static_cast<std::uint32_t>(k));
            rhs.axpy(-eh, pkt.delta_w);
            rhs.axpy(-geometric_tail(beta, p) * eh, pkt.delta_u);
        }
        detail::track_deviation(r, lhs, rhs);
        ++checked;
    }
    r.excluded = T - checked;
    r.pass = checked > 0 && r.max_rel_dev <= lemma_tolerance;
    return r;
}

// y_hat_t - w_hat_t = -(beta/(1-beta)) u_hat_t for every defined t.
inline VerificationReport check_lemma3(const RunTrace& trace, const AuxSequences& aux) {
    detail::require_orlomo(trace, "gradient-sum difference check");
    const std::size_t T = trace.arrivals.size();
    const double beta = trace.config.hp.beta;

    VerificationReport r;
    r.name = "lemma3_gradient_sum_difference";
    r.checked_first = 1;
    r.checked_last = aux.defined_upto;
    std::size_t checked = 0;
    for (std::size_t t = 1; t <= aux.defined_upto; ++t) {
        ParamVector lhs = aux.y_hat[t];
        lhs -= aux.w_hat[t];
        ParamVector rhs = aux.u_hat[t];
        rhs *= -beta / (1.0 - beta);
        detail::track_deviation(r, lhs, rhs);
        ++checked;
    }
    r.excluded = T - checked;
    r.pass = checked > 0 && r.max_rel_dev <= lemma_tolerance;
    return r;
}

// Reconstructs every u_{t+1} as the group-weighted sum of all received
// momentum payloads: weight beta^(ceil(t/K) - ceil(origin/K)) times the eta
// applied at that arrival. Checks every iteration up to max_checks, spreading
// them evenly when T is large.
inline VerificationReport check_momentum_decomposition(const RunTrace& trace,
                                                       std::size_t max_checks = 2000) {
    detail::require_orlomo(trace, "momentum decomposition check");
    const std::size_t T = trace.arrivals.size();
    const std::size_t K = trace.config.hp.workers;
    const double beta = trace.config.hp.beta;

    VerificationReport r;
    r.name = "momentum_decomposition";
    r.checked_first = 0;
    r.checked_last = T == 0 ? std::size_t(-1) : T - 1;
    std::size_t stride = std::max<std::size_t>(1, T / std::max<std::size_t>(1, max_checks));
    std::size_t checked = 0;
    for (std::size_t t = 0; t < T; ++t) {
        if (t % stride != 0 && t + 1 != T) continue;
        ParamVector rhs(trace.u_snapshots[t + 1].dim());
        std::size_t gt = ceil_div(t, K);
        for (std::size_t j = 0; j <= t; ++j) {
            std::size_t p = gt - ceil_div(trace.packets[j].origin, K);
            double coeff = beta_pow(beta, p) * trace.arrivals[j].eta;
            rhs.axpy(coeff, trace.packets[j].delta_u);
        }
        detail::track_deviation(r, trace.u_snapshots[t + 1], rhs);
        ++checked;
    }
    r.excluded = T - checked;
    r.pass = checked > 0 && r.max_rel_dev <= lemma_tolerance;
    return r;
}

// (1/(1-beta)) delta_h = (beta/(1-beta)) delta_u + delta_w, per packet.
// Holds for momentum local runs; plain-sgd packets with beta > 0 do not
// satisfy it, so this is an orlomo-trace check.
inline VerificationReport check_packet_identity(const RunTrace& trace) {
    detail::require_orlomo(trace, "packet identity check");
    const double beta = trace.config.hp.beta;

    VerificationReport r;
    r.name = "packet_identity";
    r.checked_first = 0;
    std::size_t n = trace.packets.size() + trace.cancelled.size();
    r.checked_last = n == 0 ? std::size_t(-1) : n - 1;
    auto check_one = [&](const LocalPacket& p) {
        ParamVector lhs = p.delta_h;
        lhs *= 1.0 / (1.0 - beta);
        ParamVector rhs = p.delta_w;
        rhs.axpy(beta / (1.0 - beta), p.delta_u);
        detail::track_deviation(r, lhs, rhs);
    };
    for (const LocalPacket& p : trace.packets) check_one(p);
    for (const CancelledPacket& c : trace.cancelled) check_one(c.packet);
    r.pass = n > 0 && r.max_rel_dev <= packet_tolerance;
    return r;
}

// Eta-hat-weighted average of the recorded gradient norms over iterations
// [0, upto): weight sum_k eta_hat_{0,k} at t = 0 and eta_hat_{t,k_{t-1}}
// for 1 <= t < upto. Requires per-iteration diagnostics. Terms whose
// eta-hat is undefined are dropped.
inline double weighted_gradient_metric(const RunTrace& trace, const AuxSequences& aux,
                                       std::size_t upto = 0) {
    const std::size_t T = trace.arrivals.size();
    if (upto == 0 || upto > T) upto = T;
    std::vector<double> gns(T, 0.0);
    std::vector<bool> have(T, false);
    for (const DiagnosticsRow& row : trace.diagnostics)
        if (row.t < T) {
            gns[row.t] = row.grad_norm_sq;
            have[row.t] = true;
        }
    for (std::size_t t = 0; t < upto; ++t)
        if (!have[t])
            throw TraceError("weighted gradient metric needs diagnostics at every iteration");

    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < trace.config.hp.workers; ++k) {
        if (!aux.eta_hat_defined(0, k)) continue;
        double w = aux.eta_hat(0, k);
        num += w * gns[0];
        den += w;
    }
    for (std::size_t t = 1; t < upto; ++t) {
        std::uint32_t kw = aux.k[t - 1];
        if (!aux.eta_hat_defined(t, kw)) continue;
        double w = aux.eta_hat(t, kw);
        num += w * gns[t];
        den += w;
    }
    if (den == 0.0) throw TraceError("weighted gradient metric has no defined weights");
    return num / den;
}

inline std::vector<VerificationReport> verify_trace(const RunTrace& trace) {
    AuxSequences aux = build_aux_sequences(trace);
    std::vector<VerificationReport> reports;
    reports.push_back(check_lemma1(trace, aux));
    reports.push_back(check_lemma2(trace, aux));
    reports.push_back(check_lemma3(trace, aux));
    reports.push_back(check_momentum_decomposition(trace));
    reports.push_back(check_packet_identity(trace));
    return reports;
}

}  // namespace orlomo
