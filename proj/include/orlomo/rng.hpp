#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "orlomo/vec.hpp"

namespace orlomo {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combine a seed with a list of coordinates into a new 64-bit seed.
// Used for per-worker streams and for sweep-cell seed derivation.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t c : coords) h = splitmix64(h ^ c);
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed,
                                 const std::vector<std::uint64_t>& coords) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t c : coords) h = splitmix64(h ^ c);
    return h;
}

// Purpose tags keep streams for different uses disjoint even when they
// belong to the same worker.
enum class StreamPurpose : std::uint64_t {
    gradient = 1,
    timing = 2,
    instance = 3,
};

// Deterministic per-(seed, worker, purpose) random stream. mt19937_64 output
// is fully specified by the standard and the normal transform below is
// hand-rolled, so draws are identical across platforms.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t worker, StreamPurpose purpose)
        : engine_(derive_seed(seed, {worker, static_cast<std::uint64_t>(purpose)})),
          counter_(0) {}

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        ++counter_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. One normal per pair of uniforms; the
    // second branch value is discarded so state is exactly the draw counter.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        // u1 = 0 would hit log(0)
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    ParamVector normal_vector(std::size_t d) {
        ParamVector out(d);
        for (std::size_t i = 0; i < d; ++i) out[i] = normal();
        return out;
    }

    std::uint64_t draws() const { return counter_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t counter_;
};

}  // namespace orlomo
