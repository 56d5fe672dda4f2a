#pragma once

// Heisenberg energy in the ordered-pair convention
//
//     H = - sum_{i != j} sign J_ij S_i.S_j = -2 sum_{i<j} sign J_ij S_i.S_j
//
// with local exchange field h_i = -dH/dS_i = 2 sum_j sign J_ij S_j, so that
// H = -1/2 sum_i S_i.h_i and a single-spin move S_i -> S_i' costs
// -(S_i' - S_i).h_i exactly.

#include <cmath>
#include <cstddef>

#include "qbdspin/coupling.hpp"
#include "qbdspin/error.hpp"
#include "qbdspin/lattice.hpp"
#include "qbdspin/vec3.hpp"

namespace qbdspin {

struct EnergyReport {
    double total = 0.0;
    double per_site = 0.0;
};

namespace detail {
inline void check_sizes(const SpinConfig& config, const CouplingTable& table) {
    require(config.size() == table.site_count(), ErrorKind::domain,
            "spin config and coupling table refer to different lattices");
}
} // namespace detail

/// Sum over stored pairs in table order; bit-reproducible.
inline EnergyReport total_energy(const SpinConfig& config, const CouplingTable& table) {
    detail::check_sizes(config, table);
    double sum = 0.0;
    for (const Pair& p : table.pairs()) sum += p.J * dot(config[p.i], config[p.j]);
    const double total = -2.0 * table.sign() * sum;
    return {total, total / static_cast<double>(config.size())};
}

inline Vec3 local_field_unchecked(const std::vector<Vec3>& spins, const CouplingTable& table, std::size_t i) {
    const auto row = table.row(i);
    double hx = 0.0, hy = 0.0, hz = 0.0;
    for (std::size_t k = 0; k < row.count; ++k) {
        const Vec3& s = spins[row.sites[k]];
        const double c = row.couplings[k];
        hx += c * s.x;
        hy += c * s.y;
        hz += c * s.z;
    }
    return {2.0 * hx, 2.0 * hy, 2.0 * hz};
}

inline Vec3 local_field(const SpinConfig& config, const CouplingTable& table, std::size_t i) {
    detail::check_sizes(config, table);
    detail::require(i < config.size(), ErrorKind::domain, "local_field: site index out of range");
    return local_field_unchecked(config.spins(), table, i);
}

inline double energy_delta(const SpinConfig& config, const CouplingTable& table, std::size_t i,
                           const Vec3& new_spin) {
    detail::require(std::abs(norm(new_spin) - 1.0) <= 1e-12, ErrorKind::domain,
                    "energy_delta: new spin must have unit length");
    const Vec3 h = local_field(config, table, i);
    return -dot(new_spin - config[i], h);
}

/// All local fields at once.
inline void local_fields(const std::vector<Vec3>& spins, const CouplingTable& table, std::vector<Vec3>& out) {
    out.resize(spins.size());
    for (std::size_t i = 0; i < spins.size(); ++i) out[i] = local_field_unchecked(spins, table, i);
}

} // namespace qbdspin
