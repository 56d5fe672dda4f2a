#pragma once

// Truncated pair-coupling tables.
//
// Pairs are stored once (i < j) with a positive magnitude J_ij; the
// effective exchange is sign * J_ij. The Hamiltonian convention is the
// ordered-pair sum H = -sum_{i != j} sign J_ij S_i.S_j, so every stored pair
// contributes twice (see model.hpp).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "qbdspin/error.hpp"
#include "qbdspin/kernel.hpp"
#include "qbdspin/lattice.hpp"

namespace qbdspin {

struct Pair {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double J = 0.0;

    friend bool operator==(const Pair&, const Pair&) = default;
};

/// Kernel provenance: either a screened-propagator kernel or a constant
/// coupling for every pair inside the cutoff.
struct CouplingSource {
    enum class Kind { yukawa, uniform } kind = Kind::yukawa;
    KernelSpec spec{};      // yukawa only
    double pair_J = 0.0;    // uniform only

    friend bool operator==(const CouplingSource& a, const CouplingSource& b) {
        if (a.kind != b.kind) return false;
        if (a.kind == Kind::uniform) return a.pair_J == b.pair_J;
        return a.spec.mu2 == b.spec.mu2 && a.spec.dim == b.spec.dim && a.spec.g == b.spec.g;
    }
};

// Slack on the cutoff comparison so that cutoff = n*spacing keeps shell n.
inline constexpr double cutoff_slack = 1e-12;

class CouplingTable {
public:
    CouplingTable() = default;

    CouplingTable(Lattice lattice, CouplingSource source, int sign, double cutoff, double tail_bound,
                  std::vector<Pair> pairs)
        : lattice_(std::move(lattice)), source_(source), sign_(sign), cutoff_(cutoff),
          tail_bound_(tail_bound), pairs_(std::move(pairs)) {
        detail::require(sign_ == 1 || sign_ == -1, ErrorKind::validation, "coupling table: sign must be +1 or -1");
        detail::require(std::isfinite(cutoff_) && cutoff_ > 0.0, ErrorKind::validation,
                        "coupling table: cutoff must be > 0");
        detail::require(std::isfinite(tail_bound_) && tail_bound_ >= 0.0, ErrorKind::validation,
                        "coupling table: tail bound must be finite and >= 0");
        const std::size_t n = lattice_.size();
        const double limit = cutoff_ * (1.0 + cutoff_slack);
        for (std::size_t k = 0; k < pairs_.size(); ++k) {
            const Pair& p = pairs_[k];
            detail::require(p.i < p.j && p.j < n, ErrorKind::validation,
                            "coupling table: pairs need i < j < site count");
            detail::require(std::isfinite(p.J) && p.J > 0.0, ErrorKind::validation,
                            "coupling table: couplings must be positive");
            detail::require(lattice_.distance(p.i, p.j) <= limit, ErrorKind::validation,
                            "coupling table: pair beyond cutoff");
            if (k > 0)
                detail::require(std::tie(pairs_[k - 1].i, pairs_[k - 1].j) < std::tie(p.i, p.j),
                                ErrorKind::validation, "coupling table: pairs must be sorted and unique");
        }
        build_adjacency();
    }

    const Lattice& lattice() const { return lattice_; }
    const CouplingSource& source() const { return source_; }
    int sign() const { return sign_; }
    double cutoff() const { return cutoff_; }
    double tail_bound() const { return tail_bound_; }
    const std::vector<Pair>& pairs() const { return pairs_; }
    std::size_t site_count() const { return lattice_.size(); }

    /// Neighbors of site i; coupling() values already carry the sign.
    struct Row {
        const std::uint32_t* sites;
        const double* couplings;
        std::size_t count;
    };
    Row row(std::size_t i) const {
        const std::size_t b = offsets_[i], e = offsets_[i + 1];
        return {neighbors_.data() + b, signed_J_.data() + b, e - b};
    }

    friend bool operator==(const CouplingTable& a, const CouplingTable& b) {
        return a.lattice_.same_shape(b.lattice_) && a.source_ == b.source_ && a.sign_ == b.sign_ &&
               a.cutoff_ == b.cutoff_ && a.tail_bound_ == b.tail_bound_ && a.pairs_ == b.pairs_;
    }

private:
    void build_adjacency() {
        const std::size_t n = lattice_.size();
        std::vector<std::size_t> count(n + 1, 0);
        for (const Pair& p : pairs_) {
            ++count[p.i + 1];
            ++count[p.j + 1];
        }
        offsets_.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + count[i + 1];
        neighbors_.assign(offsets_[n], 0);
        signed_J_.assign(offsets_[n], 0.0);
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        // pairs are sorted, so each row comes out in increasing neighbor order
        for (const Pair& p : pairs_) {
            neighbors_[fill[p.j]] = p.i;
            signed_J_[fill[p.j]++] = sign_ * p.J;
        }
        for (const Pair& p : pairs_) {
            neighbors_[fill[p.i]] = p.j;
            signed_J_[fill[p.i]++] = sign_ * p.J;
        }
    }

    Lattice lattice_;
    CouplingSource source_;
    int sign_ = 1;
    double cutoff_ = 1.0;
    double tail_bound_ = 0.0;
    std::vector<Pair> pairs_;

    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> neighbors_;
    std::vector<double> signed_J_;
};

/// Truncation radius 6/sqrt(mu2): the omitted tail is below e^{-6} relative.
inline double default_cutoff(const KernelSpec& spec) {
    detail::require(spec.mu2 > 0.0, ErrorKind::domain, "default cutoff needs mu2 > 0");
    return 6.0 / std::sqrt(spec.mu2);
}

namespace detail {

// Int_{rc}^inf s^n e^{-k s} ds for n = 0, 1, 2
inline double exp_moment(int n, double rc, double k) {
    const double e = std::exp(-k * rc);
    switch (n) {
    case 0: return e / k;
    case 1: return e * (rc / k + 1.0 / (k * k));
    default: return e * (rc * rc / k + 2.0 * rc / (k * k) + 2.0 / (k * k * k));
    }
}

// Upper bound on Int_{rc}^inf s^n J(s) ds using the exponential envelope.
inline double kernel_moment_bound(int n, double rc, const KernelSpec& spec) {
    const double k = spec.screening_rate();
    const double g = std::abs(spec.g);
    switch (spec.dim) {
    case 1: return g / (2.0 * k) * exp_moment(n, rc, k);
    case 2: // K0(x) <= sqrt(pi/(2x)) e^{-x}
        return g / (2.0 * std::numbers::pi) * std::sqrt(std::numbers::pi / (2.0 * k * rc)) * exp_moment(n, rc, k);
    default: // J = g e^{-ks}/(4 pi s); the s^{-1} moment uses E1(x) < e^{-x}/x
        if (n == 0) return g / (4.0 * std::numbers::pi) * std::exp(-k * rc) / (k * rc);
        return g / (4.0 * std::numbers::pi) * exp_moment(n - 1, rc, k);
    }
}

} // namespace detail

/// Bound on sum_{x in aZ^d, |x| > cutoff} |J(|x|)|, valid for any lattice
/// (finite periodic images are a subset of the infinite lattice sum).
///
/// Each lattice point owns a cube of volume a^d. J is decreasing, so
/// J(|x|) <= J(max(|y| - delta, cutoff)) for y in that cube, delta = sqrt(d) a / 2,
/// and the sum is bounded by a radial integral of the envelope.
inline double envelope_tail_bound(const KernelSpec& spec, int lattice_dim, double spacing, double cutoff) {
    detail::require(spec.mu2 > 0.0, ErrorKind::domain, "tail bound needs mu2 > 0");
    const int d = lattice_dim;
    const double delta = 0.5 * std::sqrt(static_cast<double>(d)) * spacing;
    const double r0 = std::max(0.0, cutoff - delta);
    const double r1 = cutoff + delta;
    auto ball = [d](double r) {
        switch (d) {
        case 1: return 2.0 * r;
        case 2: return std::numbers::pi * r * r;
        default: return 4.0 / 3.0 * std::numbers::pi * r * r * r;
        }
    };
    const double shell = std::abs(kernel_closed_form(cutoff, spec)) * (ball(r1) - ball(r0));
    // Int_{rc}^inf S_d(s + delta) J(s) ds, S_d the sphere surface
    double outer = 0.0;
    const auto m = [&](int n) { return detail::kernel_moment_bound(n, cutoff, spec); };
    switch (d) {
    case 1: outer = 2.0 * m(0); break;
    case 2: outer = 2.0 * std::numbers::pi * (m(1) + delta * m(0)); break;
    default: outer = 4.0 * std::numbers::pi * (m(2) + 2.0 * delta * m(1) + delta * delta * m(0)); break;
    }
    return (shell + outer) / std::pow(spacing, d);
}

namespace detail {

inline void check_cutoff(const Lattice& lattice, double cutoff, bool decays) {
    require(std::isfinite(cutoff), ErrorKind::domain, "coupling table: cutoff must be finite");
    require(cutoff >= lattice.spacing(), ErrorKind::domain,
            "coupling table: cutoff below the lattice spacing leaves no pairs");
    if (cutoff > lattice.half_box()) {
        for (int a = 0; a < lattice.dim(); ++a)
            require(lattice.periodic(a), ErrorKind::geometry,
                    "coupling table: cutoff exceeds half the box on a non-periodic axis");
        require(decays, ErrorKind::domain, "coupling table: cutoff beyond half the box needs mu2 > 0");
    }
}

template <class Coupling>
std::vector<Pair> enumerate_pairs(const Lattice& lattice, double cutoff, Coupling&& coupling,
                                  std::vector<double>* omitted_per_site) {
    const std::size_t n = lattice.size();
    const double limit = cutoff * (1.0 + cutoff_slack);
    std::vector<Pair> pairs;
    if (omitted_per_site) omitted_per_site->assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = lattice.distance(i, j);
            if (r <= limit) {
                pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), coupling(r)});
            } else if (omitted_per_site) {
                const double J = std::abs(coupling(r));
                (*omitted_per_site)[i] += J;
                (*omitted_per_site)[j] += J;
            }
        }
    }
    return pairs;
}

} // namespace detail

/// Couplings from the propagator kernel at minimum-image separations.
inline CouplingTable build_coupling_table(const Lattice& lattice, const KernelSpec& spec, double cutoff,
                                          int sign = 1) {
    spec.validate();
    detail::require(spec.g > 0.0, ErrorKind::domain, "coupling table: g must be positive (sign carries order)");
    detail::require(sign == 1 || sign == -1, ErrorKind::domain, "coupling table: sign must be +1 or -1");
    detail::require(spec.dim == 3 || spec.mu2 > 0.0, ErrorKind::divergent,
                    "coupling table: mu2 = 0 diverges for kernel dimension " + std::to_string(spec.dim));
    detail::check_cutoff(lattice, cutoff, spec.mu2 > 0.0);

    const bool exact_tail = spec.mu2 == 0.0;
    std::vector<double> omitted;
    auto pairs = detail::enumerate_pairs(
        lattice, cutoff, [&](double r) { return kernel_closed_form(r, spec); }, exact_tail ? &omitted : nullptr);

    double tail = 0.0;
    if (exact_tail) {
        // no decay envelope: the finite-lattice omitted sum is the bound
        for (double v : omitted) tail = std::max(tail, v);
    } else {
        tail = envelope_tail_bound(spec, lattice.dim(), lattice.spacing(), cutoff);
    }
    CouplingSource source{CouplingSource::Kind::yukawa, spec, 0.0};
    return CouplingTable(lattice, source, sign, cutoff, tail, std::move(pairs));
}

inline CouplingTable build_coupling_table(const Lattice& lattice, const KernelSpec& spec, int sign = 1) {
    return build_coupling_table(lattice, spec, default_cutoff(spec), sign);
}

/// Constant coupling pair_J for every pair within cutoff (cutoff = spacing
/// gives the nearest-neighbor model). Nothing beyond the cutoff is omitted.
inline CouplingTable uniform_table(const Lattice& lattice, double pair_J, double cutoff, int sign = 1) {
    detail::require(std::isfinite(pair_J) && pair_J > 0.0, ErrorKind::domain,
                    "uniform table: coupling must be positive");
    detail::require(sign == 1 || sign == -1, ErrorKind::domain, "coupling table: sign must be +1 or -1");
    detail::check_cutoff(lattice, cutoff, true);
    auto pairs = detail::enumerate_pairs(lattice, cutoff, [&](double) { return pair_J; }, nullptr);
    CouplingSource source{CouplingSource::Kind::uniform, KernelSpec{}, pair_J};
    return CouplingTable(lattice, source, sign, cutoff, 0.0, std::move(pairs));
}

/// Nearest-neighbor table with per-bond energy -bond_J S_i.S_j, i.e. the
/// stored ordered-pair constant is bond_J / 2.
inline CouplingTable nearest_neighbor_table(const Lattice& lattice, double bond_J = 1.0, int sign = 1) {
    return uniform_table(lattice, 0.5 * bond_J, lattice.spacing(), sign);
}

} // namespace qbdspin
