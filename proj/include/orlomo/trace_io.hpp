#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orlomo/config.hpp"
#include "orlomo/errors.hpp"
#include "orlomo/simulator.hpp"

namespace orlomo {

namespace detail {

inline const char* b64_alphabet() {
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const std::uint8_t* data, std::size_t n) {
    const char* tbl = b64_alphabet();
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= n; i += 3) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += tbl[v & 63];
    }
    if (i + 1 == n) {
        std::uint32_t v = data[i] << 16;
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == n) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& s) {
    if (s.size() % 4 != 0) throw TraceError("base64 payload length not a multiple of 4");
    std::int8_t rev[256];
    std::memset(rev, -1, sizeof(rev));
    const char* tbl = b64_alphabet();
    for (int i = 0; i < 64; ++i) rev[static_cast<std::uint8_t>(tbl[i])] = static_cast<std::int8_t>(i);
    std::vector<std::uint8_t> out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        std::uint32_t v = 0;
        int pad = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            char c = s[i + j];
            if (c == '=') {
                if (i + 4 != s.size() || j < 2) throw TraceError("misplaced base64 padding");
                ++pad;
                v <<= 6;
                continue;
            }
            std::int8_t x = rev[static_cast<std::uint8_t>(c)];
            if (x < 0 || pad > 0) throw TraceError("invalid base64 character");
            v = (v << 6) | static_cast<std::uint32_t>(x);
        }
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

}  // namespace detail

// Vectors travel as base64 of their little-endian IEEE-754 bytes, so decoded
// traces are bit-identical to what the simulator produced.
inline std::string encode_vector(const ParamVector& v) {
    static_assert(std::endian::native == std::endian::little);
    std::vector<std::uint8_t> bytes(v.dim() * sizeof(double));
    if (v.dim() > 0) std::memcpy(bytes.data(), v.data().data(), bytes.size());
    return detail::base64_encode(bytes.data(), bytes.size());
}

inline ParamVector decode_vector(const std::string& s) {
    std::vector<std::uint8_t> bytes = detail::base64_decode(s);
    if (bytes.size() % sizeof(double) != 0)
        throw TraceError("vector payload is not a whole number of doubles");
    ParamVector v(bytes.size() / sizeof(double));
    for (std::size_t i = 0; i < v.dim(); ++i)
        std::memcpy(&v[i], bytes.data() + i * sizeof(double), sizeof(double));
    return v;
}

namespace detail {

inline nlohmann::json packet_to_json(const LocalPacket& p) {
    return nlohmann::json::array({p.worker, p.origin, encode_vector(p.delta_u),
                                  encode_vector(p.delta_w), encode_vector(p.delta_h)});
}

inline LocalPacket packet_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 5) throw TraceError("malformed packet record");
    LocalPacket p;
    p.worker = j.at(0).get<std::uint32_t>();
    p.origin = j.at(1).get<std::size_t>();
    p.delta_u = decode_vector(j.at(2).get<std::string>());
    p.delta_w = decode_vector(j.at(3).get<std::string>());
    p.delta_h = decode_vector(j.at(4).get<std::string>());
    return p;
}

}  // namespace detail

// Everything except the config block, as one JSON object. Split out so runs
// that differ only in the algorithm label can be compared payload-to-payload.
inline nlohmann::json trace_payload_json(const RunTrace& trace) {
    nlohmann::json j;
    j["arrivals"] = nlohmann::json::array();
    for (const ArrivalRecord& a : trace.arrivals)
        j["arrivals"].push_back(
            nlohmann::json::array({a.t, a.worker, a.origin, a.tau, a.eta, a.sim_time}));
    j["packets"] = nlohmann::json::array();
    for (const LocalPacket& p : trace.packets) j["packets"].push_back(detail::packet_to_json(p));
    j["cancelled"] = nlohmann::json::array();
    for (const CancelledPacket& c : trace.cancelled) {
        nlohmann::json rec = detail::packet_to_json(c.packet);
        rec.push_back(c.would_arrive);
        j["cancelled"].push_back(rec);
    }
    j["w"] = nlohmann::json::array();
    for (const ParamVector& v : trace.w_snapshots) j["w"].push_back(encode_vector(v));
    j["u"] = nlohmann::json::array();
    for (const ParamVector& v : trace.u_snapshots) j["u"].push_back(encode_vector(v));
    j["diagnostics"] = nlohmann::json::array();
    for (const DiagnosticsRow& r : trace.diagnostics)
        j["diagnostics"].push_back(nlohmann::json::array({r.t, r.loss, r.grad_norm_sq}));
    j["dispatches"] = trace.dispatch_count;
    j["end_time"] = trace.end_time;
    return j;
}

inline nlohmann::json trace_to_json(const RunTrace& trace) {
    nlohmann::json j = trace_payload_json(trace);
    j["format"] = "orlomo-trace-v1";
    j["config"] = config_to_json(trace.config);
    return j;
}

inline RunTrace trace_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != std::string("orlomo-trace-v1"))
            throw TraceError("unrecognized trace format");
        RunTrace trace;
        trace.config = config_from_json(j.at("config"));
        for (const nlohmann::json& a : j.at("arrivals")) {
            if (!a.is_array() || a.size() != 6) throw TraceError("malformed arrival record");
            trace.arrivals.push_back({a.at(0).get<std::size_t>(), a.at(1).get<long long>(),
                                      a.at(2).get<std::size_t>(), a.at(3).get<std::size_t>(),
                                      a.at(4).get<double>(), a.at(5).get<double>()});
        }
        for (const nlohmann::json& p : j.at("packets"))
            trace.packets.push_back(detail::packet_from_json(p));
        for (const nlohmann::json& c : j.at("cancelled")) {
            if (!c.is_array() || c.size() != 6) throw TraceError("malformed cancelled record");
            nlohmann::json pkt = nlohmann::json::array({c.at(0), c.at(1), c.at(2), c.at(3), c.at(4)});
            trace.cancelled.push_back({detail::packet_from_json(pkt), c.at(5).get<double>()});
        }
        for (const nlohmann::json& v : j.at("w"))
            trace.w_snapshots.push_back(decode_vector(v.get<std::string>()));
        for (const nlohmann::json& v : j.at("u"))
            trace.u_snapshots.push_back(decode_vector(v.get<std::string>()));
        for (const nlohmann::json& r : j.at("diagnostics")) {
            if (!r.is_array() || r.size() != 3) throw TraceError("malformed diagnostics row");
            trace.diagnostics.push_back({r.at(0).get<std::size_t>(), r.at(1).get<double>(),
                                         r.at(2).get<double>()});
        }
        trace.dispatch_count = j.at("dispatches").get<std::size_t>();
        trace.end_time = j.at("end_time").get<double>();
        return trace;
    } catch (const nlohmann::json::exception& e) {
        throw TraceError(std::string("malformed trace: ") + e.what());
    }
}

inline constexpr const char* metrics_csv_header = "t,sim_time,k_t,origin,tau,eta,loss,grad_norm_sq";

namespace detail {

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

// One CSV row per diagnostics tick, joined with that iteration's arrival.
inline void write_metrics_csv(const RunTrace& trace, std::ostream& os) {
    os << metrics_csv_header << "\n";
    for (const DiagnosticsRow& row : trace.diagnostics) {
        if (row.t >= trace.arrivals.size())
            throw TraceError("diagnostics tick beyond recorded arrivals");
        const ArrivalRecord& a = trace.arrivals[row.t];
        os << row.t << ',' << detail::fmt_double(a.sim_time) << ',' << a.worker << ','
           << a.origin << ',' << a.tau << ',' << detail::fmt_double(a.eta) << ','
           << detail::fmt_double(row.loss) << ',' << detail::fmt_double(row.grad_norm_sq)
           << "\n";
    }
}

inline std::string metrics_csv_string(const RunTrace& trace) {
    std::ostringstream ss;
    write_metrics_csv(trace, ss);
    return ss.str();
}

inline void save_trace(const RunTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw TraceError("cannot open trace file for writing: " + path);
    f << trace_to_json(trace).dump() << "\n";
    if (!f) throw TraceError("failed writing trace file: " + path);
}

inline RunTrace load_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TraceError("cannot open trace file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw TraceError(std::string("trace is not valid JSON: ") + e.what());
    }
    return trace_from_json(j);
}

}  // namespace orlomo
