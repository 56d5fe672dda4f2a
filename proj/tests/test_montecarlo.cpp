#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qbdspin/montecarlo.hpp"

using namespace qbdspin;

namespace {

ObservableSeries synthetic(const std::vector<double>& magnitudes) {
    ObservableSeries s;
    for (std::size_t k = 0; k < magnitudes.size(); ++k) s.records.push_back({k, -1.0, {0, 0, magnitudes[k]}, {}});
    return s;
}

// Chi-square p-value of sampled cos(theta_12) against the exact two-spin law.
double two_spin_p_value(double c, double T, Proposal proposal, std::uint64_t seed) {
    const CouplingTable t = uniform_table(build_lattice(1, {2}, 1.0, false), std::abs(c), 1.0, c < 0 ? -1 : 1);
    ChainParams p = ChainParams::make(T, 1000000, seed);
    p.burn_in = 2000;
    p.thin = 20;
    p.proposal = proposal;
    const ObservableSeries s = run_chain(t.lattice(), t, p);
    constexpr int bins = 12;
    std::vector<double> counts(bins, 0.0);
    for (const Record& r : s.records) {
        // |2m|^2 = 2 + 2 cos(theta)
        const double cos_theta = std::clamp(2.0 * dot(r.m, r.m) - 1.0, -1.0, 1.0);
        counts[std::min(bins - 1, static_cast<int>((cos_theta + 1.0) / 2.0 * bins))] += 1.0;
    }
    const double n = static_cast<double>(s.records.size());
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double e = n * oracle::two_spin_bin(-1.0 + 2.0 * b / bins, -1.0 + 2.0 * (b + 1) / bins, c, T);
        chi2 += (counts[b] - e) * (counts[b] - e) / e;
    }
    return boost::math::gamma_q((bins - 1) / 2.0, chi2 / 2.0);
}

} // namespace

TEST(Metropolis, ZeroCostMovesAreAlwaysAccepted) {
    Engine rng = make_stream(1, 0);
    Vec3 s{0, 0, 1};
    for (int k = 0; k < 1000; ++k) ASSERT_TRUE(metropolis_step(s, Vec3{}, 0.1, rng, Proposal::uniform_sphere, 0.5));
}

TEST(Metropolis, InfiniteTemperatureAcceptsNearlyEverything) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(3, 4));
    ChainParams p = ChainParams::make(1e9, 200, 3);
    const ObservableSeries s = run_chain(t.lattice(), t, p);
    EXPECT_GT(s.meta.acceptance, 0.999);
}

TEST(Metropolis, SingleSpinInAFieldMatchesTheExactMean) {
    for (Proposal prop : {Proposal::uniform_sphere, Proposal::small_cone}) {
        for (double T : {0.5, 1.0, 2.0}) {
            const double h = 1.0;
            Engine rng = make_stream(21, static_cast<std::uint64_t>(T * 10));
            Vec3 s{1, 0, 0};
            std::vector<double> sz;
            for (int k = 0; k < 400000; ++k) {
                metropolis_step(s, {0, 0, h}, T, rng, prop, 0.8);
                if (k >= 1000) sz.push_back(s.z);
            }
            const auto est = stats::mean_with_error(sz, 64);
            EXPECT_NEAR(est.value, oracle::single_spin_mean(h, T), 4.0 * est.error)
                << to_string(prop) << " T " << T << " err " << est.error;
        }
    }
}

TEST(Metropolis, TwoSpinAngleDistribution) {
    EXPECT_GT(two_spin_p_value(1.0, 1.0, Proposal::uniform_sphere, 5), 1e-3);
    EXPECT_GT(two_spin_p_value(-0.5, 0.7, Proposal::small_cone, 6), 1e-3);
}

TEST(Metropolis, LowTemperatureStaysOrdered) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(3, 8));
    ChainParams p = ChainParams::make(0.01, 300, 4);
    const ObservableSeries s = run_chain(t.lattice(), t, p, reference_config(t.lattice(), ReferenceKind::aligned));
    for (double m : s.order_magnitudes()) ASSERT_GE(m, 0.95);
}

TEST(Metropolis, AntiferromagnetOrdersInTheStaggeredChannel) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(3, 6), 1.0, -1);
    ChainParams p = ChainParams::make(0.05, 300, 4);
    const ObservableSeries s = run_chain(t.lattice(), t, p, reference_config(t.lattice(), ReferenceKind::neel));
    for (const Record& r : s.records) {
        ASSERT_GE(norm(r.staggered), 0.9);
        ASSERT_LE(norm(r.m), 0.1);
    }
}

TEST(Metropolis, HighTemperatureIsDisordered) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(3, 8));
    const ObservableSeries s = run_chain(t.lattice(), t, ChainParams::make(100.0, 1000, 8));
    const auto m = s.order_magnitudes();
    EXPECT_LE(stats::mean(m), 3.0 / std::sqrt(512.0) + 0.05);
}

TEST(Metropolis, SameSeedSameChain) {
    const CouplingTable t = build_coupling_table(hypercubic(3, 4), KernelSpec{1.0, 3, 1.0}, 2.0);
    const ChainParams p = ChainParams::make(0.3, 300, 99, 2);
    const auto a = run_chain(t.lattice(), t, p);
    const auto b = run_chain(t.lattice(), t, p);
    EXPECT_EQ(a.records, b.records);
    ChainParams q = p;
    q.seed = 100;
    EXPECT_NE(a.records, run_chain(t.lattice(), t, q).records);
    q = p;
    q.stream = 3;
    EXPECT_NE(a.records, run_chain(t.lattice(), t, q).records);
}

TEST(Metropolis, RecordSchedule) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(2, 4));
    ChainParams p = ChainParams::make(1.0, 1000, 1);
    p.burn_in = 200;
    p.thin = 3;
    const auto s = run_chain(t.lattice(), t, p);
    ASSERT_EQ(s.records.size(), 266u);
    EXPECT_EQ(s.records.size(), p.record_count());
    EXPECT_EQ(s.records.front().sweep, 203u);
    for (std::size_t k = 1; k < s.records.size(); ++k) EXPECT_EQ(s.records[k].sweep - s.records[k - 1].sweep, 3u);
    for (const Record& r : s.records) EXPECT_LE(norm(r.m), 1.0 + 1e-12);
}

TEST(Metropolis, RecordedEnergyMatchesConfiguration) {
    const CouplingTable t = build_coupling_table(hypercubic(3, 4), KernelSpec{1.0, 3, 1.0}, 2.0);
    ChainRunner runner(t, ChainParams::make(0.5, 50, 2));
    runner.advance(50);
    EXPECT_DOUBLE_EQ(runner.records().back().energy, total_energy(runner.config(), t).total);
}

TEST(Metropolis, ParameterErrors) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(2, 4));
    auto kind = [&](ChainParams p) {
        try {
            run_chain(t.lattice(), t, p);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::validation;
    };
    ChainParams p = ChainParams::make(0.0, 100, 1);
    EXPECT_EQ(kind(p), ErrorKind::domain);
    p = ChainParams::make(1.0, 100, 1);
    p.burn_in = 100;
    EXPECT_EQ(kind(p), ErrorKind::domain);
    p = ChainParams::make(1.0, 100, 1);
    p.thin = 0;
    EXPECT_EQ(kind(p), ErrorKind::domain);
    EXPECT_THROW(run_chain(hypercubic(2, 6), t, ChainParams::make(1.0, 100, 1)), Error);
}

TEST(Metropolis, CheckpointResumeIsBitIdentical) {
    const CouplingTable t = build_coupling_table(hypercubic(3, 4), KernelSpec{1.0, 3, 1.0}, 2.0);
    ChainParams p = ChainParams::make(0.4, 600, 12, 1);
    p.proposal = Proposal::small_cone;
    ChainRunner whole(t, p);
    whole.advance(600);

    for (std::uint64_t cut : {1u, 60u, 119u, 120u, 121u, 377u, 599u}) {
        ChainRunner first(t, p);
        first.advance(cut);
        ChainRunner second(t, first.checkpoint(), first.records());
        second.advance(1000);
        EXPECT_TRUE(second.finished());
        EXPECT_EQ(second.records(), whole.records()) << "cut " << cut;
        EXPECT_EQ(second.config(), whole.config());
        EXPECT_EQ(second.series().meta.acceptance, whole.series().meta.acceptance);
        EXPECT_EQ(second.series().meta.final_cone_angle, whole.series().meta.final_cone_angle);
    }
}

TEST(Metropolis, CheckpointWithWrongRecordCountIsRejected) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(2, 4));
    ChainRunner r(t, ChainParams::make(1.0, 300, 1));
    r.advance(150);
    auto recs = r.records();
    recs.pop_back();
    EXPECT_THROW(ChainRunner(t, r.checkpoint(), recs), Error);
}

TEST(Binder, SyntheticDistributions) {
    EXPECT_NEAR(binder_cumulant(synthetic(std::vector<double>(500, 0.7))), 2.0 / 3.0, 1e-14);

    std::vector<double> two;
    for (int k = 0; k < 500; ++k) two.push_back(k % 2 ? std::sqrt(2.0) : 0.0);
    EXPECT_NEAR(binder_cumulant(synthetic(two)), 1.0 / 3.0, 1e-14);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> gauss;
    for (int k = 0; k < 400000; ++k) {
        const Vec3 v{g(rng), g(rng), g(rng)};
        gauss.push_back(norm(v));
    }
    EXPECT_NEAR(binder_cumulant(synthetic(gauss)), 4.0 / 9.0, 0.01);
}

TEST(Binder, UsesStaggeredMagnetizationForAntiferromagnets) {
    ObservableSeries s;
    for (std::uint64_t k = 0; k < 200; ++k) s.records.push_back({k, 0.0, {0, 0, 0.01 * (k % 7)}, {0, 0, 0.5}});
    s.meta.sign = -1;
    EXPECT_NEAR(binder_cumulant(s), 2.0 / 3.0, 1e-14);
}

TEST(Binder, NeedsOneHundredRecords) {
    try {
        binder_cumulant(synthetic(std::vector<double>(99, 0.5)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::insufficient);
    }
    EXPECT_NO_THROW(binder_cumulant(synthetic(std::vector<double>(100, 0.5))));
}

TEST(Thermo, ConstantSeriesHasNoFluctuations) {
    const auto th = susceptibility_and_heat(synthetic(std::vector<double>(200, 0.3)), 1.5, 64);
    EXPECT_EQ(th.chi, 0.0);
    EXPECT_EQ(th.C, 0.0);
    EXPECT_THROW(susceptibility_and_heat(synthetic(std::vector<double>(50, 0.3)), 1.5, 64), Error);
}

TEST(Thermo, FreeSpinsHaveNoHeatCapacity) {
    const Lattice lat = build_lattice(1, {2}, 1.0, false);
    const CouplingTable none(lat, {CouplingSource::Kind::uniform, {}, 1.0}, 1, 1.0, 0.0, {});
    const ObservableSeries s = run_chain(lat, none, ChainParams::make(1.0, 1000, 3));
    EXPECT_EQ(susceptibility_and_heat(s, 1.0, 2).C, 0.0);
}

TEST(Thermo, HeatCapacityOfSyntheticEnergies) {
    ObservableSeries s;
    for (std::uint64_t k = 0; k < 1000; ++k) s.records.push_back({k, k % 2 ? 2.0 : -2.0, {0, 0, k % 2 ? 0.5 : 0.3}, {}});
    const auto th = susceptibility_and_heat(s, 2.0, 10);
    EXPECT_NEAR(th.C, 4.0 / (10.0 * 4.0), 1e-14);
    EXPECT_NEAR(th.chi, 10.0 * 0.01 / 2.0, 1e-14);
}
