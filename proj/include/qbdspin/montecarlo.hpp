#pragma once

// Single-site Metropolis sampling of the canonical ensemble.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qbdspin/coupling.hpp"
#include "qbdspin/error.hpp"
#include "qbdspin/lattice.hpp"
#include "qbdspin/model.hpp"
#include "qbdspin/rng.hpp"
#include "qbdspin/stats.hpp"
#include "qbdspin/vec3.hpp"

namespace qbdspin {

enum class Proposal { uniform_sphere, small_cone };

inline std::string_view to_string(Proposal p) {
    return p == Proposal::uniform_sphere ? "uniform-sphere" : "small-cone";
}

struct ChainParams {
    double T = 1.0;
    std::uint64_t sweeps = 10000;
    std::uint64_t burn_in = 2000;
    std::uint64_t thin = 1;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0; ///< chain index within a batch
    Proposal proposal = Proposal::uniform_sphere;
    double cone_angle = 0.5;  ///< initial half-angle for small-cone, tuned during burn-in

    /// Defaults: burn-in is 20% of the sweeps, no thinning.
    static ChainParams make(double T, std::uint64_t sweeps, std::uint64_t seed, std::uint64_t stream = 0) {
        ChainParams p;
        p.T = T;
        p.sweeps = sweeps;
        p.burn_in = sweeps / 5;
        p.seed = seed;
        p.stream = stream;
        return p;
    }

    void validate() const {
        detail::require(std::isfinite(T) && T > 0.0, ErrorKind::domain, "chain: T must be > 0");
        detail::require(burn_in < sweeps, ErrorKind::domain, "chain: burn_in must be < sweeps");
        detail::require(thin >= 1, ErrorKind::domain, "chain: thin must be >= 1");
        detail::require(cone_angle > 0.0 && cone_angle <= std::numbers::pi, ErrorKind::domain,
                        "chain: cone angle must lie in (0, pi]");
    }

    std::uint64_t record_count() const { return (sweeps - burn_in) / thin; }
};

struct Record {
    std::uint64_t sweep = 0;
    double energy = 0.0;
    Vec3 m;          ///< magnetization per site
    Vec3 staggered;  ///< staggered magnetization per site

    friend bool operator==(const Record&, const Record&) = default;
};

struct SeriesMeta {
    ChainParams params;
    std::string lattice_digest;
    std::size_t sites = 0;
    int sign = 1;
    double acceptance = 0.0;   ///< over the measurement sweeps
    double final_cone_angle = 0.0;
};

struct ObservableSeries {
    std::vector<Record> records;
    SeriesMeta meta;

    /// |m| per record; staggered for antiferromagnetic tables.
    std::vector<double> order_magnitudes() const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const Record& r : records) out.push_back(norm(meta.sign < 0 ? r.staggered : r.m));
        return out;
    }
    std::vector<double> energies() const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const Record& r : records) out.push_back(r.energy);
        return out;
    }
};

/// One Metropolis update of a spin in a fixed exchange field h; the move
/// S -> S' costs -(S' - S).h.
inline bool metropolis_step(Vec3& spin, const Vec3& h, double T, Engine& rng, Proposal proposal,
                            double cone_angle) {
    const Vec3 trial = proposal == Proposal::uniform_sphere ? uniform_sphere(rng)
                                                            : uniform_cap(rng, spin, cone_angle);
    const double dE = -dot(trial - spin, h);
    if (dE <= 0.0 || uniform01(rng) < std::exp(-dE / T)) {
        spin = trial;
        return true;
    }
    return false;
}

/// One proposal per site in index order. Returns the number of accepted moves.
inline std::size_t metropolis_sweep(SpinConfig& config, const CouplingTable& table, double T, Engine& rng,
                                    Proposal proposal = Proposal::uniform_sphere, double cone_angle = 0.5) {
    detail::check_sizes(config, table);
    detail::require(T > 0.0, ErrorKind::domain, "metropolis_sweep: T must be > 0");
    std::vector<Vec3>& spins = config.mutable_spins();
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < spins.size(); ++i) {
        const Vec3 h = local_field_unchecked(spins, table, i);
        accepted += metropolis_step(spins[i], h, T, rng, proposal, cone_angle) ? 1 : 0;
    }
    return accepted;
}

/// Resumable chain state. Records are held separately by the caller.
struct ChainCheckpoint {
    ChainParams params;
    std::uint64_t sweeps_done = 0;
    std::uint64_t accepted = 0;     ///< measurement phase only
    std::uint64_t proposed = 0;
    double cone_angle = 0.5;
    std::uint64_t tune_accepted = 0; ///< burn-in acceptance since the last cone update
    std::string rng_state;
    SpinConfig config;
};

inline Record measure(const SpinConfig& config, const CouplingTable& table, std::uint64_t sweep) {
    return {sweep, total_energy(config, table).total, config.magnetization(),
            staggered_magnetization(config, table.lattice())};
}

class ChainRunner {
public:
    ChainRunner(const CouplingTable& table, const ChainParams& params, std::optional<SpinConfig> initial = {})
        : table_(&table), params_(params), rng_(make_stream(params.seed, params.stream)) {
        params_.validate();
        cone_ = params_.cone_angle;
        if (initial) {
            detail::check_sizes(*initial, table);
            config_ = std::move(*initial);
        } else {
            // initial spins come from the chain's own stream
            std::vector<Vec3> spins(table.site_count());
            for (Vec3& s : spins) s = uniform_sphere(rng_);
            config_ = SpinConfig(std::move(spins));
        }
    }

    /// Continue from a checkpoint; `records` are the ones already measured.
    ChainRunner(const CouplingTable& table, const ChainCheckpoint& ck, std::vector<Record> records)
        : table_(&table), params_(ck.params), rng_(engine_from_state(ck.rng_state)), config_(ck.config),
          done_(ck.sweeps_done), accepted_(ck.accepted), proposed_(ck.proposed), cone_(ck.cone_angle),
          tune_acc_(ck.tune_accepted), records_(std::move(records)) {
        params_.validate();
        detail::check_sizes(config_, table);
        detail::require(done_ <= params_.sweeps, ErrorKind::validation, "checkpoint: sweeps beyond chain length");
        detail::require(records_.size() == expected_records(done_), ErrorKind::validation,
                        "checkpoint: record count does not match sweeps done");
    }

    bool finished() const { return done_ >= params_.sweeps; }
    std::uint64_t sweeps_done() const { return done_; }
    const SpinConfig& config() const { return config_; }
    const std::vector<Record>& records() const { return records_; }

    /// Run up to n further sweeps (stops at the chain length).
    void advance(std::uint64_t n) {
        for (std::uint64_t k = 0; k < n && !finished(); ++k) step();
    }

    ChainCheckpoint checkpoint() const {
        return {params_, done_, accepted_, proposed_, cone_, tune_acc_, engine_state(rng_), config_};
    }

    ObservableSeries series() const {
        ObservableSeries s;
        s.records = records_;
        s.meta.params = params_;
        s.meta.lattice_digest = table_->lattice().digest();
        s.meta.sites = table_->site_count();
        s.meta.sign = table_->sign();
        s.meta.acceptance = proposed_ ? static_cast<double>(accepted_) / static_cast<double>(proposed_) : 0.0;
        s.meta.final_cone_angle = cone_;
        return s;
    }

private:
    std::uint64_t expected_records(std::uint64_t done) const {
        return done <= params_.burn_in ? 0 : (done - params_.burn_in) / params_.thin;
    }

    void step() {
        const std::size_t acc = metropolis_sweep(config_, *table_, params_.T, rng_, params_.proposal, cone_);
        ++done_;
        if (done_ <= params_.burn_in) {
            tune_acc_ += acc;
            if (params_.proposal == Proposal::small_cone && done_ % tune_interval == 0) {
                // target acceptance 0.5, adjusted only while burning in
                const double rate = static_cast<double>(tune_acc_) /
                                    static_cast<double>(tune_interval * config_.size());
                cone_ *= std::clamp(rate / 0.5, 0.5, 2.0);
                cone_ = std::clamp(cone_, 1e-4, std::numbers::pi);
                tune_acc_ = 0;
            }
            return;
        }
        accepted_ += acc;
        proposed_ += config_.size();
        if ((done_ - params_.burn_in) % params_.thin == 0) records_.push_back(measure(config_, *table_, done_));
    }

    static constexpr std::uint64_t tune_interval = 50;

    const CouplingTable* table_;
    ChainParams params_;
    Engine rng_;
    SpinConfig config_;
    std::uint64_t done_ = 0;
    std::uint64_t accepted_ = 0;
    std::uint64_t proposed_ = 0;
    double cone_ = 0.5;
    std::uint64_t tune_acc_ = 0;
    std::vector<Record> records_;
};

inline ObservableSeries run_chain(const Lattice& lattice, const CouplingTable& table, const ChainParams& params,
                                  std::optional<SpinConfig> initial = {}) {
    detail::require(lattice.same_shape(table.lattice()), ErrorKind::domain,
                    "run_chain: lattice does not match the coupling table");
    ChainRunner runner(table, params, std::move(initial));
    runner.advance(params.sweeps);
    return runner.series();
}

// ---------------------------------------------------------------------------

inline double binder_from_magnitudes(std::span<const double> m) {
    detail::require(m.size() >= 100, ErrorKind::insufficient, "binder_cumulant: need at least 100 records");
    double m2 = 0.0, m4 = 0.0;
    for (double v : m) {
        const double s = v * v;
        m2 += s;
        m4 += s * s;
    }
    const double n = static_cast<double>(m.size());
    m2 /= n;
    m4 /= n;
    return 1.0 - m4 / (3.0 * m2 * m2);
}

/// U4 = 1 - <|m|^4> / (3 <|m|^2>^2); staggered m for sign = -1 tables.
inline double binder_cumulant(const ObservableSeries& series) {
    const auto m = series.order_magnitudes();
    return binder_from_magnitudes(m);
}

struct Thermodynamics {
    double chi = 0.0;
    double C = 0.0;
};

inline Thermodynamics susceptibility_and_heat(const ObservableSeries& series, double T, std::size_t N) {
    detail::require(series.records.size() >= 100, ErrorKind::insufficient,
                    "susceptibility_and_heat: need at least 100 records");
    detail::require(T > 0.0 && N > 0, ErrorKind::domain, "susceptibility_and_heat: T and N must be positive");
    const auto m = series.order_magnitudes();
    const auto e = series.energies();
    const double n = static_cast<double>(N);
    return {n * stats::variance(m) / T, stats::variance(e) / (n * T * T)};
}

} // namespace qbdspin
