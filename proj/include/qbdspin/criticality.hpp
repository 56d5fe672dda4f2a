#pragma once

// Critical temperature from Binder-cumulant crossings across lattice sizes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qbdspin/coupling.hpp"
#include "qbdspin/error.hpp"
#include "qbdspin/montecarlo.hpp"
#include "qbdspin/parallel.hpp"
#include "qbdspin/rng.hpp"
#include "qbdspin/stats.hpp"

namespace qbdspin {

using TableFactory = std::function<CouplingTable(int L)>;

struct BinderGrid {
    std::vector<int> sizes;
    std::vector<double> temperatures;         ///< ascending
    std::vector<std::vector<ObservableSeries>> series; ///< [size][temperature]

    double U4(std::size_t l, std::size_t t) const { return binder_cumulant(series[l][t]); }

    std::string table_text() const {
        std::ostringstream os;
        os << "T";
        for (int L : sizes) os << "  U4(L=" << L << ")";
        os << '\n';
        for (std::size_t t = 0; t < temperatures.size(); ++t) {
            os << temperatures[t];
            for (std::size_t l = 0; l < sizes.size(); ++l) os << "  " << U4(l, t);
            os << '\n';
        }
        return os.str();
    }
};

/// Chain (size index l, temperature index t) uses stream base.stream + l*nT + t.
inline std::uint64_t grid_stream(const ChainParams& base, std::size_t l, std::size_t t, std::size_t nT) {
    return base.stream + static_cast<std::uint64_t>(l * nT + t);
}

inline void check_grid_inputs(const std::vector<int>& sizes, const std::vector<double>& temperatures) {
    detail::require(sizes.size() >= 2, ErrorKind::domain, "Binder grid: need at least 2 lattice sizes");
    detail::require(temperatures.size() >= 4, ErrorKind::domain, "Binder grid: need at least 4 temperatures");
    detail::require(std::is_sorted(temperatures.begin(), temperatures.end()) &&
                        std::adjacent_find(temperatures.begin(), temperatures.end()) == temperatures.end(),
                    ErrorKind::domain, "Binder grid: temperatures must be strictly ascending");
}

inline BinderGrid run_binder_grid(const std::vector<int>& sizes, const TableFactory& factory,
                                  const std::vector<double>& temperatures, const ChainParams& base,
                                  std::size_t workers = 1) {
    check_grid_inputs(sizes, temperatures);
    const std::size_t nL = sizes.size(), nT = temperatures.size();
    std::vector<CouplingTable> tables;
    for (int L : sizes) tables.push_back(factory(L));

    BinderGrid grid{sizes, temperatures, std::vector<std::vector<ObservableSeries>>(nL, std::vector<ObservableSeries>(nT))};
    parallel_for(nL * nT, workers, [&](std::size_t k) {
        const std::size_t l = k / nT, t = k % nT;
        ChainParams p = base;
        p.T = temperatures[t];
        p.stream = grid_stream(base, l, t, nT);
        grid.series[l][t] = run_chain(tables[l].lattice(), tables[l], p);
    });
    return grid;
}

struct PairCrossing {
    int L_small = 0;
    int L_large = 0;
    double T = 0.0;
};

struct TcEstimate {
    double T_B = 0.0;
    double uncertainty = 0.0;
    std::vector<PairCrossing> crossings;
    std::size_t bootstrap_used = 0;
};

/// First sign change of U_a - U_b along the grid, linearly interpolated.
inline std::optional<double> crossing_temperature(const std::vector<double>& T, const std::vector<double>& Ua,
                                                  const std::vector<double>& Ub) {
    for (std::size_t t = 0; t + 1 < T.size(); ++t) {
        const double d0 = Ua[t] - Ub[t];
        const double d1 = Ua[t + 1] - Ub[t + 1];
        if (d0 == 0.0) return T[t];
        if ((d0 < 0.0) != (d1 < 0.0) || d1 == 0.0) return T[t] + (T[t + 1] - T[t]) * d0 / (d0 - d1);
    }
    return std::nullopt;
}

namespace detail {

inline std::optional<std::vector<PairCrossing>> all_crossings(const std::vector<int>& sizes,
                                                              const std::vector<double>& T,
                                                              const std::vector<std::vector<double>>& U) {
    std::vector<PairCrossing> out;
    for (std::size_t a = 0; a < sizes.size(); ++a)
        for (std::size_t b = a + 1; b < sizes.size(); ++b) {
            const auto x = crossing_temperature(T, U[a], U[b]);
            if (!x) return std::nullopt;
            out.push_back({sizes[a], sizes[b], *x});
        }
    return out;
}

inline double mean_crossing(const std::vector<PairCrossing>& c) {
    double s = 0.0;
    for (const auto& p : c) s += p.T;
    return s / static_cast<double>(c.size());
}

} // namespace detail

/// Pairwise crossings averaged over all size pairs; the uncertainty is the
/// spread over block-bootstrap resamples of every chain's records.
inline TcEstimate locate_crossing(const BinderGrid& grid, std::uint64_t seed, std::size_t resamples = 200) {
    const std::size_t nL = grid.sizes.size(), nT = grid.temperatures.size();
    std::vector<std::vector<double>> U(nL, std::vector<double>(nT));
    std::vector<std::vector<std::vector<double>>> mags(nL, std::vector<std::vector<double>>(nT));
    for (std::size_t l = 0; l < nL; ++l)
        for (std::size_t t = 0; t < nT; ++t) {
            mags[l][t] = grid.series[l][t].order_magnitudes();
            U[l][t] = binder_from_magnitudes(mags[l][t]);
        }

    const auto central = detail::all_crossings(grid.sizes, grid.temperatures, U);
    if (!central)
        throw Error(ErrorKind::no_crossing, "no Binder crossing inside the temperature grid:\n" + grid.table_text());

    TcEstimate est;
    est.crossings = *central;
    est.T_B = detail::mean_crossing(*central);

    Engine rng = make_stream(seed, 0xb0075ull);
    std::vector<double> boot;
    std::vector<std::vector<double>> Ub = U;
    std::vector<double> resampled;
    for (std::size_t r = 0; r < resamples; ++r) {
        for (std::size_t l = 0; l < nL; ++l)
            for (std::size_t t = 0; t < nT; ++t) {
                const auto& m = mags[l][t];
                const auto idx = stats::block_resample(m.size(), std::max<std::size_t>(1, m.size() / 64), rng);
                resampled.clear();
                for (std::size_t k : idx) resampled.push_back(m[k]);
                Ub[l][t] = binder_from_magnitudes(resampled);
            }
        if (auto c = detail::all_crossings(grid.sizes, grid.temperatures, Ub)) boot.push_back(detail::mean_crossing(*c));
    }
    est.bootstrap_used = boot.size();
    if (boot.size() >= 2) est.uncertainty = std::sqrt(stats::variance(boot) * boot.size() / (boot.size() - 1.0));
    return est;
}

inline TcEstimate estimate_Tc(const std::vector<int>& sizes, const TableFactory& factory,
                              const std::vector<double>& temperatures, const ChainParams& params,
                              std::size_t workers = 1) {
    return locate_crossing(run_binder_grid(sizes, factory, temperatures, params, workers), params.seed);
}

} // namespace qbdspin
