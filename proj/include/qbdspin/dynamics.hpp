#pragma once

// Memory storage as spontaneous symmetry breaking, recall as a local magnon
// excitation, and damped precessional relaxation
//
//     dS_i/dt = -S_i x h_i - alpha S_i x (S_i x h_i),   h_i = -dH/dS_i,
//
// integrated with the explicit midpoint rule and renormalized each step.
// With alpha > 0 the second term gives dE/dt = -alpha sum |S_i x h_i|^2 <= 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "qbdspin/coupling.hpp"
#include "qbdspin/error.hpp"
#include "qbdspin/lattice.hpp"
#include "qbdspin/model.hpp"
#include "qbdspin/montecarlo.hpp"
#include "qbdspin/vec3.hpp"

namespace qbdspin {

struct MemoryRecord {
    Vec3 order_direction{0.0, 0.0, 1.0};
    double order_magnitude = 0.0;
    double T_store = 0.0;
};

struct Frame {
    double t = 0.0;
    double energy = 0.0;
    double excess = 0.0; ///< energy above the reference (relaxed) state
    Vec3 m;
};

struct Trajectory {
    std::vector<Frame> frames;
    double dt = 0.0;
    double alpha = 0.0;
    double reference_energy = 0.0;
    SpinConfig final_config;
};

class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, Trajectory partial)
        : Error(ErrorKind::instability, what), partial_(std::move(partial)) {}
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

/// Quench by a Monte Carlo chain at T_store from a random start; the final
/// magnetization direction is the stored memory.
inline std::pair<SpinConfig, MemoryRecord> store_memory(const Lattice& lattice, const CouplingTable& table,
                                                        double T_store, ChainParams params) {
    detail::require(table.sign() == 1, ErrorKind::domain, "store_memory: needs a ferromagnetic table");
    detail::require(lattice.same_shape(table.lattice()), ErrorKind::domain,
                    "store_memory: lattice does not match the coupling table");
    params.T = T_store;
    ChainRunner runner(table, params);
    runner.advance(params.sweeps);
    SpinConfig config = runner.config();
    const Vec3 m = config.magnetization();
    const double mag = norm(m);
    MemoryRecord rec;
    rec.order_magnitude = std::min(mag, 1.0);
    rec.order_direction = mag > 0.0 ? normalized(m) : Vec3{0.0, 0.0, 1.0};
    rec.T_store = T_store;
    return {std::move(config), rec};
}

/// Rotate the listed spins by tilt_angle about one axis perpendicular to the
/// configuration's order direction.
inline SpinConfig recall_pulse(const SpinConfig& config, std::span<const std::size_t> sites, double tilt_angle) {
    detail::require(!sites.empty(), ErrorKind::domain, "recall_pulse: site set is empty");
    detail::require(tilt_angle > 0.0 && tilt_angle <= 0.5 * std::numbers::pi, ErrorKind::domain,
                    "recall_pulse: tilt angle must lie in (0, pi/2]");
    std::set<std::size_t> seen;
    for (std::size_t s : sites) {
        detail::require(s < config.size(), ErrorKind::domain, "recall_pulse: site index out of range");
        detail::require(seen.insert(s).second, ErrorKind::domain, "recall_pulse: duplicate site");
    }
    const Vec3 m = config.magnetization();
    const Vec3 order = norm(m) > 1e-12 ? normalized(m) : config[sites.front()];
    const Vec3 axis = any_perpendicular(order);
    SpinConfig out = config;
    for (std::size_t s : sites) out.set(s, normalized(rotate(config[s], axis, tilt_angle)));
    return out;
}

namespace detail {

inline void damped_rhs(const std::vector<Vec3>& spins, const CouplingTable& table, double alpha,
                       std::vector<Vec3>& fields, std::vector<Vec3>& out) {
    local_fields(spins, table, fields);
    out.resize(spins.size());
    for (std::size_t i = 0; i < spins.size(); ++i) {
        const Vec3 sxh = cross(spins[i], fields[i]);
        out[i] = -sxh - alpha * cross(spins[i], sxh);
    }
}

} // namespace detail

/// Integrates `steps` midpoint steps and records a frame at t = 0 and after
/// every step. `reference_energy` defaults to the initial energy.
inline Trajectory evolve_damped(const SpinConfig& config, const CouplingTable& table, double alpha, double dt,
                                std::size_t steps, std::optional<double> reference_energy = {}) {
    detail::check_sizes(config, table);
    detail::require(std::isfinite(dt) && dt > 0.0, ErrorKind::domain, "evolve_damped: dt must be > 0");
    detail::require(std::isfinite(alpha) && alpha >= 0.0, ErrorKind::domain, "evolve_damped: alpha must be >= 0");
    detail::require(steps >= 1, ErrorKind::domain, "evolve_damped: need at least one step");

    Trajectory tr;
    tr.dt = dt;
    tr.alpha = alpha;
    std::vector<Vec3> s = config.spins();
    const double e0 = total_energy(config, table).total;
    tr.reference_energy = reference_energy.value_or(e0);
    tr.frames.reserve(steps + 1);
    auto record = [&](double t, const std::vector<Vec3>& spins) {
        double sum = 0.0;
        for (const Pair& p : table.pairs()) sum += p.J * dot(spins[p.i], spins[p.j]);
        const double e = -2.0 * table.sign() * sum;
        Vec3 m;
        for (const Vec3& v : spins) m += v;
        m *= 1.0 / static_cast<double>(spins.size());
        tr.frames.push_back({t, e, e - tr.reference_energy, m});
        return e;
    };
    record(0.0, s);

    std::vector<Vec3> fields, k1, k2, mid(s.size());
    const double blowup = 0.1 * std::max(std::abs(e0), 1e-300);
    for (std::size_t n = 1; n <= steps; ++n) {
        detail::damped_rhs(s, table, alpha, fields, k1);
        for (std::size_t i = 0; i < s.size(); ++i) mid[i] = s[i] + (0.5 * dt) * k1[i];
        detail::damped_rhs(mid, table, alpha, fields, k2);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = normalized(s[i] + dt * k2[i]);
        const double e = record(static_cast<double>(n) * dt, s);
        if (!std::isfinite(e) || (alpha > 0.0 && e - e0 > blowup)) {
            tr.final_config = SpinConfig(s);
            throw InstabilityError("evolve_damped: energy grew by more than 10% with damping; reduce dt",
                                   std::move(tr));
        }
    }
    tr.final_config = SpinConfig(std::move(s));
    return tr;
}

/// Trailing moving average of the excess energy.
inline std::vector<double> smoothed_excess(const Trajectory& tr, std::size_t window = 10) {
    std::vector<double> out(tr.frames.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < tr.frames.size(); ++i) {
        acc += tr.frames[i].excess;
        if (i >= window) acc -= tr.frames[i - window].excess;
        out[i] = acc / static_cast<double>(std::min(i + 1, window));
    }
    return out;
}

/// Largest |E(t) - E(0)| / |E(0)| over the trajectory.
inline double relative_energy_drift(const Trajectory& tr) {
    const double e0 = tr.frames.front().energy;
    double worst = 0.0;
    for (const Frame& f : tr.frames) worst = std::max(worst, std::abs(f.energy - e0));
    return worst / std::abs(e0);
}

struct RecallResult {
    std::optional<double> decay_time; ///< empty: excess never fell below 1/e
    double direction_fidelity = 0.0;
};

inline RecallResult measure_recall(const Trajectory& tr, const MemoryRecord& record) {
    detail::require(tr.frames.size() >= 100, ErrorKind::insufficient, "measure_recall: need at least 100 frames");
    RecallResult out;
    const double threshold = tr.frames.front().excess / std::numbers::e;
    for (std::size_t i = 1; i < tr.frames.size(); ++i) {
        const Frame& a = tr.frames[i - 1];
        const Frame& b = tr.frames[i];
        if (b.excess < threshold) {
            out.decay_time = a.t + (b.t - a.t) * (a.excess - threshold) / (a.excess - b.excess);
            break;
        }
    }
    const Vec3 m = tr.frames.back().m;
    out.direction_fidelity = norm(m) > 0.0 ? dot(normalized(m), record.order_direction) : 0.0;
    return out;
}

} // namespace qbdspin
