#pragma once

#include <stdexcept>
#include <string>

namespace orlomo {

// Invalid or inconsistent configuration (bad field values, dimension
// mismatches, malformed config files).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values encountered mid-run.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Server/worker message contract violated (e.g. packet from the future,
// wrong packet count in a synchronous round).
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

// Recorded trace is incomplete or internally inconsistent.
struct TraceError : std::runtime_error {
    explicit TraceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace orlomo
