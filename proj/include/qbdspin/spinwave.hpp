#pragma once

// Linear spin-wave (magnon) dispersions of collinear orders.
//
// Against H = -sum_{i != j} sign J_ij S_i.S_j and Jt(k) = sum_r J(r) e^{ik.r}
// over the stored displacements from one site:
//
//   ferromagnet      w(k) = 2S (Jt(0) - Jt(k))
//   antiferromagnet  w(k) = 2S sqrt(Jt(0)^2 - Jt(k)^2)   (inter-sublattice couplings only)

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qbdspin/coupling.hpp"
#include "qbdspin/error.hpp"
#include "qbdspin/lattice.hpp"
#include "qbdspin/vec3.hpp"

namespace qbdspin {

enum class Order { FM, AFM };

inline std::string_view to_string(Order o) { return o == Order::FM ? "FM" : "AFM"; }

struct DispersionCurve {
    std::vector<Vec3> k_points;
    std::vector<double> path;  ///< cumulative |dk| along the k points
    std::vector<double> omega;
    Order order = Order::FM;
    double S = 1.0;
    double zone_edge = std::numbers::pi; ///< pi / spacing
};

/// Couplings seen from site 0 of a translation-invariant periodic table.
class DisplacementSet {
public:
    explicit DisplacementSet(const CouplingTable& table) : lattice_(table.lattice()) {
        const Lattice& lat = lattice_;
        for (int a = 0; a < lat.dim(); ++a)
            detail::require(lat.periodic(a), ErrorKind::structure,
                            "spin waves need a periodic lattice (translation-invariant table)");
        const std::size_t n = lat.size();
        std::vector<double> row0(n, 0.0);
        std::size_t degree = 0;
        for (const Pair& p : table.pairs()) {
            if (p.i == 0) {
                row0[p.j] = p.J;
                ++degree;
            }
        }
        // every pair must reproduce the site-0 coupling at its wrapped offset
        detail::require(table.pairs().size() * 2 == n * degree, ErrorKind::structure,
                        "coupling table is not translation invariant (site degrees differ)");
        for (const Pair& p : table.pairs()) {
            const Coord ci = lat.coord(p.i), cj = lat.coord(p.j);
            Coord off{0, 0, 0};
            for (int a = 0; a < lat.dim(); ++a) {
                const int L = lat.lengths()[a];
                off[a] = ((cj[a] - ci[a]) % L + L) % L;
            }
            const double J0 = row0[lat.index(off)];
            detail::require(J0 > 0.0 && std::abs(J0 - p.J) <= 1e-12 * J0, ErrorKind::structure,
                            "coupling table is not translation invariant");
        }
        for (std::size_t j = 1; j < n; ++j) {
            if (row0[j] == 0.0) continue;
            Entry e;
            e.d = lat.displacement(0, j);
            e.J = row0[j];
            for (int a = 0; a < lat.dim(); ++a) {
                const int L = lat.lengths()[a];
                e.ambiguous[a] = (L % 2 == 0) && (2 * std::abs(e.d[a]) == L);
            }
            entries_.push_back(e);
        }
    }

    const Lattice& lattice() const { return lattice_; }

    /// Jt(k); the imaginary part vanishes by inversion symmetry and is checked.
    double fourier(const Vec3& k) const {
        const double a = lattice_.spacing();
        std::complex<double> sum = 0.0;
        double scale = 0.0;
        for (const Entry& e : entries_) {
            std::complex<double> phase = 1.0;
            for (int ax = 0; ax < lattice_.dim(); ++ax) {
                const double arg = k[ax] * e.d[ax] * a;
                // both periodic images are equally near: average them
                phase *= e.ambiguous[ax] ? std::complex<double>(std::cos(arg), 0.0) : std::polar(1.0, arg);
            }
            sum += e.J * phase;
            scale += e.J;
        }
        detail::require(std::abs(sum.imag()) <= 1e-12 * std::max(scale, 1.0), ErrorKind::structure,
                        "displacement set lacks inversion symmetry");
        return sum.real();
    }

    /// All stored displacements join opposite checkerboard sublattices.
    bool inter_sublattice() const {
        if (!lattice_.bipartite()) return false;
        for (const Entry& e : entries_)
            if (((e.d[0] + e.d[1] + e.d[2]) & 1) == 0) return false;
        return true;
    }

    std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        Coord d{0, 0, 0};
        double J = 0.0;
        bool ambiguous[3] = {false, false, false};
    };
    Lattice lattice_;
    std::vector<Entry> entries_;
};

inline double lattice_fourier_J(const CouplingTable& table, const Vec3& k) {
    return DisplacementSet(table).fourier(k);
}

namespace detail {

inline DispersionCurve make_curve(const std::vector<Vec3>& ks, Order order, double S, double spacing) {
    DispersionCurve c;
    c.k_points = ks;
    c.order = order;
    c.S = S;
    c.zone_edge = std::numbers::pi / spacing;
    double acc = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (i > 0) acc += norm(ks[i] - ks[i - 1]);
        c.path.push_back(acc);
    }
    return c;
}

} // namespace detail

inline DispersionCurve fm_dispersion(const CouplingTable& table, const std::vector<Vec3>& k_path, double S = 1.0) {
    detail::require(table.sign() == 1, ErrorKind::order, "fm_dispersion: table sign must be +1");
    detail::require(S > 0.0, ErrorKind::domain, "fm_dispersion: S must be > 0");
    const DisplacementSet set(table);
    const double J0 = set.fourier({});
    DispersionCurve c = detail::make_curve(k_path, Order::FM, S, table.lattice().spacing());
    for (const Vec3& k : k_path) c.omega.push_back(2.0 * S * (J0 - set.fourier(k)));
    return c;
}

inline DispersionCurve afm_dispersion(const CouplingTable& table, const std::vector<Vec3>& k_path, double S = 1.0) {
    detail::require(table.sign() == -1, ErrorKind::order, "afm_dispersion: table sign must be -1");
    detail::require(S > 0.0, ErrorKind::domain, "afm_dispersion: S must be > 0");
    const DisplacementSet set(table);
    detail::require(set.inter_sublattice(), ErrorKind::unsupported,
                    "afm_dispersion: needs a bipartite lattice with inter-sublattice couplings only");
    const double J0 = set.fourier({});
    DispersionCurve c = detail::make_curve(k_path, Order::AFM, S, table.lattice().spacing());
    for (const Vec3& k : k_path) {
        const double Jk = set.fourier(k);
        double arg = J0 * J0 - Jk * Jk;
        if (arg < 0.0) {
            detail::require(arg >= -1e-10, ErrorKind::instability,
                            "afm_dispersion: negative spin-wave argument, Neel state unstable for this table");
            arg = 0.0;
        }
        c.omega.push_back(2.0 * S * std::sqrt(arg));
    }
    return c;
}

inline DispersionCurve dispersion(const CouplingTable& table, const std::vector<Vec3>& k_path, Order order,
                                  double S = 1.0) {
    return order == Order::FM ? fm_dispersion(table, k_path, S) : afm_dispersion(table, k_path, S);
}

// --- k paths ----------------------------------------------------------------

/// Hypercubic zone point by label: G, X, M, R (in units of pi/spacing).
inline Vec3 zone_point(char label, int dim, double spacing) {
    const double e = std::numbers::pi / spacing;
    switch (label) {
    case 'G': return {};
    case 'X': return {e, 0.0, 0.0};
    case 'M':
        detail::require(dim >= 2, ErrorKind::validation, "k path: M needs dim >= 2");
        return {e, e, 0.0};
    case 'R':
        detail::require(dim >= 3, ErrorKind::validation, "k path: R needs dim = 3");
        return {e, e, e};
    default: throw Error(ErrorKind::validation, std::string("k path: unknown zone point '") + label + "'");
    }
}

/// Parses strings like "G-X-M-G" into k points, `per_segment` steps per leg,
/// endpoints included once.
inline std::vector<Vec3> parse_k_path(const std::string& spec, int dim, double spacing, int per_segment = 50) {
    detail::require(per_segment >= 1, ErrorKind::validation, "k path: need at least one step per segment");
    std::vector<Vec3> corners;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dash = spec.find('-', pos);
        const std::string tok = spec.substr(pos, dash == std::string::npos ? std::string::npos : dash - pos);
        detail::require(tok.size() == 1, ErrorKind::validation, "k path: malformed path '" + spec + "'");
        corners.push_back(zone_point(tok[0], dim, spacing));
        if (dash == std::string::npos) break;
        pos = dash + 1;
    }
    detail::require(corners.size() >= 2, ErrorKind::validation, "k path: need at least two zone points");
    std::vector<Vec3> ks{corners.front()};
    for (std::size_t s = 0; s + 1 < corners.size(); ++s) {
        detail::require(!(corners[s] == corners[s + 1]), ErrorKind::validation,
                        "k path: repeated zone point in '" + spec + "'");
        for (int q = 1; q <= per_segment; ++q) {
            const double f = static_cast<double>(q) / per_segment;
            ks.push_back(corners[s] * (1.0 - f) + corners[s + 1] * f);
        }
    }
    return ks;
}

/// Log-spaced |k| in [0.01, 0.1] of the zone edge along `direction`.
inline std::vector<Vec3> smallk_points(const Vec3& direction, double spacing, int count = 16) {
    detail::require(count >= 5, ErrorKind::domain, "small-k sampling: need at least 5 points");
    const Vec3 u = normalized(direction);
    const double edge = std::numbers::pi / spacing;
    std::vector<Vec3> ks;
    for (int q = 0; q < count; ++q) {
        const double f = std::pow(10.0, -2.0 + static_cast<double>(q) / (count - 1));
        ks.push_back(u * (f * edge));
    }
    return ks;
}

struct ExponentFit {
    double exponent = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of log w against log |k| for |k| in [0.01, 0.1] of
/// the zone edge.
inline ExponentFit smallk_exponent(const DispersionCurve& curve) {
    const double lo = 0.01 * curve.zone_edge * (1.0 - 1e-9);
    const double hi = 0.1 * curve.zone_edge * (1.0 + 1e-9);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < curve.k_points.size(); ++i) {
        const double k = norm(curve.k_points[i]);
        if (k < lo || k > hi) continue;
        detail::require(curve.omega[i] > 0.0, ErrorKind::fit, "smallk_exponent: non-positive frequency in window");
        x.push_back(std::log(k));
        y.push_back(std::log(curve.omega[i]));
    }
    detail::require(x.size() >= 5, ErrorKind::fit, "smallk_exponent: fewer than 5 points in the fit window");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return {(n * sxy - sx * sy) / (n * sxx - sx * sx), x.size()};
}

/// Largest |w| over k points equal to the zone center.
inline double goldstone_residual(const DispersionCurve& curve) {
    double worst = 0.0;
    for (std::size_t i = 0; i < curve.k_points.size(); ++i)
        if (curve.k_points[i] == Vec3{}) worst = std::max(worst, std::abs(curve.omega[i]));
    return worst;
}

} // namespace qbdspin
