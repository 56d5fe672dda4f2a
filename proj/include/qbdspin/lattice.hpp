#pragma once

// Hypercubic site geometries and classical O(3) spin configurations.
//
// Sites are indexed with the first axis fastest: i = x + Lx*(y + Ly*z).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "qbdspin/error.hpp"
#include "qbdspin/rng.hpp"
#include "qbdspin/vec3.hpp"

namespace qbdspin {

using Coord = std::array<int, 3>;

class Lattice {
public:
    Lattice() = default;

    Lattice(int dim, std::vector<int> lengths, double spacing, std::vector<bool> periodic)
        : dim_(dim), lengths_(std::move(lengths)), spacing_(spacing), periodic_(std::move(periodic)) {
        detail::require(dim_ >= 1 && dim_ <= 3, ErrorKind::domain, "lattice: dim must be 1, 2 or 3");
        detail::require(static_cast<int>(lengths_.size()) == dim_, ErrorKind::domain,
                        "lattice: need one length per axis");
        if (periodic_.size() == 1 && dim_ > 1) periodic_.assign(dim_, periodic_.front());
        detail::require(static_cast<int>(periodic_.size()) == dim_, ErrorKind::domain,
                        "lattice: need one periodic flag per axis");
        for (int L : lengths_) detail::require(L >= 2, ErrorKind::domain, "lattice: lengths must be >= 2");
        detail::require(std::isfinite(spacing_) && spacing_ > 0.0, ErrorKind::domain,
                        "lattice: spacing must be > 0");
        size_ = 1;
        for (int L : lengths_) size_ *= static_cast<std::size_t>(L);
        for (int a = 0; a < 3; ++a) extent_[a] = a < dim_ ? lengths_[a] : 1;
    }

    int dim() const { return dim_; }
    const std::vector<int>& lengths() const { return lengths_; }
    double spacing() const { return spacing_; }
    const std::vector<bool>& periodic() const { return periodic_; }
    bool periodic(int axis) const { return periodic_[axis]; }
    std::size_t size() const { return size_; }

    Coord coord(std::size_t i) const {
        Coord c{0, 0, 0};
        for (int a = 0; a < dim_; ++a) {
            c[a] = static_cast<int>(i % static_cast<std::size_t>(extent_[a]));
            i /= static_cast<std::size_t>(extent_[a]);
        }
        return c;
    }

    std::size_t index(const Coord& c) const {
        std::size_t i = 0;
        for (int a = dim_ - 1; a >= 0; --a) i = i * static_cast<std::size_t>(extent_[a]) + static_cast<std::size_t>(c[a]);
        return i;
    }

    Vec3 position(std::size_t i) const {
        const Coord c = coord(i);
        return {c[0] * spacing_, c[1] * spacing_, c[2] * spacing_};
    }

    /// Minimum-image displacement from i to j in lattice units.
    Coord displacement(std::size_t i, std::size_t j) const {
        const Coord ci = coord(i), cj = coord(j);
        Coord d{0, 0, 0};
        for (int a = 0; a < dim_; ++a) {
            int v = cj[a] - ci[a];
            if (periodic_[a]) {
                const int L = lengths_[a];
                v = ((v % L) + L) % L;
                if (2 * v > L) v -= L;
            }
            d[a] = v;
        }
        return d;
    }

    /// Squared minimum-image distance in units of the spacing.
    long distance2_units(std::size_t i, std::size_t j) const {
        const Coord d = displacement(i, j);
        return long{d[0]} * d[0] + long{d[1]} * d[1] + long{d[2]} * d[2];
    }

    double distance(std::size_t i, std::size_t j) const {
        return spacing_ * std::sqrt(static_cast<double>(distance2_units(i, j)));
    }

    /// Checkerboard parity of a site (0 or 1).
    int parity(std::size_t i) const {
        const Coord c = coord(i);
        return (c[0] + c[1] + c[2]) & 1;
    }

    /// True when the checkerboard coloring is consistent across periodic wraps.
    bool bipartite() const {
        for (int a = 0; a < dim_; ++a)
            if (periodic_[a] && lengths_[a] % 2 != 0) return false;
        return true;
    }

    /// Half the smallest box edge, L*a/2.
    double half_box() const {
        int m = lengths_.front();
        for (int L : lengths_) m = std::min(m, L);
        return 0.5 * m * spacing_;
    }

    bool same_shape(const Lattice& o) const {
        return dim_ == o.dim_ && lengths_ == o.lengths_ && spacing_ == o.spacing_ && periodic_ == o.periodic_;
    }

    /// FNV-1a digest of the geometry, hex encoded.
    std::string digest() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            for (int b = 0; b < 8; ++b) {
                h ^= (v >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        };
        mix(static_cast<std::uint64_t>(dim_));
        for (int L : lengths_) mix(static_cast<std::uint64_t>(L));
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(spacing_));
        std::memcpy(&bits, &spacing_, sizeof bits);
        mix(bits);
        for (bool p : periodic_) mix(p ? 1u : 0u);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

private:
    int dim_ = 1;
    std::vector<int> lengths_;
    double spacing_ = 1.0;
    std::vector<bool> periodic_;
    std::size_t size_ = 0;
    std::array<int, 3> extent_{1, 1, 1};
};

inline Lattice build_lattice(int dim, std::vector<int> lengths, double spacing, std::vector<bool> periodic) {
    return Lattice(dim, std::move(lengths), spacing, std::move(periodic));
}

inline Lattice build_lattice(int dim, std::vector<int> lengths, double spacing = 1.0, bool periodic = true) {
    return Lattice(dim, std::move(lengths), spacing, std::vector<bool>(static_cast<std::size_t>(dim), periodic));
}

/// Hypercube with L sites per axis, periodic, unit spacing.
inline Lattice hypercubic(int dim, int L) {
    return build_lattice(dim, std::vector<int>(static_cast<std::size_t>(dim), L));
}

// ---------------------------------------------------------------------------

class SpinConfig {
public:
    SpinConfig() = default;
    explicit SpinConfig(std::vector<Vec3> spins) : spins_(std::move(spins)) {
        for (const Vec3& s : spins_)
            detail::require(std::abs(norm(s) - 1.0) <= 1e-12, ErrorKind::domain,
                            "spin config: every spin must have unit length");
    }

    std::size_t size() const { return spins_.size(); }
    const Vec3& operator[](std::size_t i) const { return spins_[i]; }
    const std::vector<Vec3>& spins() const { return spins_; }

    /// Unchecked write; callers keep spins normalized.
    void set(std::size_t i, const Vec3& s) { spins_[i] = s; }
    std::vector<Vec3>& mutable_spins() { return spins_; }

    Vec3 magnetization() const {
        Vec3 m;
        for (const Vec3& s : spins_) m += s;
        return m * (1.0 / static_cast<double>(spins_.size()));
    }

    friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

private:
    std::vector<Vec3> spins_;
};

inline Vec3 staggered_magnetization(const SpinConfig& config, const Lattice& lattice) {
    Vec3 m;
    for (std::size_t i = 0; i < config.size(); ++i) m += lattice.parity(i) ? -config[i] : config[i];
    return m * (1.0 / static_cast<double>(config.size()));
}

inline SpinConfig random_config(const Lattice& lattice, std::uint64_t seed) {
    Engine rng = make_stream(seed, 0);
    std::vector<Vec3> spins(lattice.size());
    for (Vec3& s : spins) s = uniform_sphere(rng);
    return SpinConfig(std::move(spins));
}

enum class ReferenceKind { aligned, neel };

inline SpinConfig reference_config(const Lattice& lattice, ReferenceKind kind) {
    std::vector<Vec3> spins(lattice.size(), Vec3{0.0, 0.0, 1.0});
    if (kind == ReferenceKind::neel) {
        detail::require(lattice.bipartite(), ErrorKind::frustration,
                        "reference_config: Neel order needs even lengths on periodic axes");
        for (std::size_t i = 0; i < spins.size(); ++i)
            if (lattice.parity(i)) spins[i] = Vec3{0.0, 0.0, -1.0};
    }
    return SpinConfig(std::move(spins));
}

} // namespace qbdspin
