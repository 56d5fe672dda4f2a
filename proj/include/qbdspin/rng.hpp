#pragma once

// Random streams.
//
// Every chain owns one std::mt19937_64 seeded through std::seed_seq with the
// four 32-bit words (master_lo, master_hi, stream_lo, stream_hi). Both the
// engine and seed_seq are fully specified by the standard, and the float
// conversions below avoid the implementation-defined <random> distributions,
// so a (master seed, stream id) pair yields the same numbers everywhere.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "qbdspin/error.hpp"
#include "qbdspin/vec3.hpp"

namespace qbdspin {

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(master_seed & 0xffffffffu),
        static_cast<std::uint32_t>(master_seed >> 32),
        static_cast<std::uint32_t>(stream_id & 0xffffffffu),
        static_cast<std::uint32_t>(stream_id >> 32),
    };
    return Engine(seq);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform point on the unit sphere (Archimedes: z uniform in [-1, 1]).
inline Vec3 uniform_sphere(Engine& rng) {
    const double z = 2.0 * uniform01(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

/// Uniform point on the spherical cap of half-angle `angle` around unit `axis`.
inline Vec3 uniform_cap(Engine& rng, const Vec3& axis, double angle) {
    const double cmin = std::cos(angle);
    const double c = 1.0 - uniform01(rng) * (1.0 - cmin);
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const Vec3 e1 = any_perpendicular(axis);
    const Vec3 e2 = cross(axis, e1);
    return normalized(axis * c + e1 * (s * std::cos(phi)) + e2 * (s * std::sin(phi)));
}

inline std::string engine_state(const Engine& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

inline Engine engine_from_state(const std::string& state) {
    Engine rng;
    std::istringstream is(state);
    is >> rng;
    if (is.fail()) throw Error(ErrorKind::validation, "rng state: cannot parse engine state");
    return rng;
}

} // namespace qbdspin
