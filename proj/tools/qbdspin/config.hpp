#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qbdspin/qbdspin.hpp"

namespace qbdspin::cli {

using Json = nlohmann::ordered_json;

enum class Experiment { kernel, tc, dispersion, memory, sweep };

std::string to_string(Experiment e);

struct KernelSection {
    KernelSpec spec;
    double tol = 1e-8;
    double r_min = 0.1;
    double r_max = 20.0;
    int samples = 200;
};

struct LatticeSection {
    int dim = 3;
    std::vector<int> lengths;   // empty for experiments that scan sizes
    double spacing = 1.0;
    std::vector<bool> periodic; // one flag per axis

    Lattice build(const std::vector<int>& lengths_override = {}) const;
};

struct CouplingSection {
    std::string model = "nearest"; // "nearest" | "yukawa"
    int sign = 1;
    double bond_J = 1.0;           // nearest only
    std::optional<double> cutoff;  // yukawa only; default 6 / sqrt(mu2)

    CouplingTable build(const Lattice& lattice, const KernelSpec& kernel, int sign_override = 0) const;
};

struct McSection {
    std::vector<double> temperatures;
    std::vector<int> sizes;
    std::uint64_t sweeps = 20000;
    std::optional<std::uint64_t> burn_in;
    std::uint64_t thin = 1;
    Proposal proposal = Proposal::uniform_sphere;
    double cone_angle = 0.5;
    std::uint64_t checkpoint_every = 0; // 0 disables checkpoints
    bool save_series = false;

    ChainParams params(double T, std::uint64_t seed, std::uint64_t stream) const;
};

struct DispersionSection {
    std::string path = "G-X-M-R-G";
    int points_per_segment = 50;
    std::vector<Order> orders{Order::FM};
    double S = 1.0;
    Vec3 smallk_direction{1.0, 0.0, 0.0};
    int smallk_points = 16;
};

struct DynamicsSection {
    double alpha = 0.1;
    double dt = 0.01;
    std::uint64_t steps = 10000;
    double tilt_angle = 0.7853981633974483; // pi/4
    double T_store = 0.1443;
    std::uint64_t store_sweeps = 2000;
    double relax_alpha = 1.0;
    std::uint64_t relax_steps = 20000;
    std::vector<std::size_t> pulse_sites{0};
    int repeats = 1;
};

struct RunConfig {
    Experiment experiment = Experiment::kernel;
    std::uint64_t seed = 1;
    std::optional<std::size_t> workers;
    std::string output_dir = "qbdspin-out";
    KernelSection kernel;
    LatticeSection lattice;
    CouplingSection coupling;
    McSection mc;
    DispersionSection dispersion;
    DynamicsSection dynamics;

    /// Resolved configuration with defaults filled in; omits workers and
    /// output_dir, which do not affect results.
    Json canonical() const;
    /// FNV-1a of canonical().dump().
    std::string digest() const;
};

/// Parses and validates a configuration document for `experiment`. Every
/// problem is reported as a validation error.
RunConfig parse_config(const Json& doc, Experiment experiment);

} // namespace qbdspin::cli
