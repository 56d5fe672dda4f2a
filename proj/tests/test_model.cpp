#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qbdspin/model.hpp"

using namespace qbdspin;

namespace {

CouplingTable pair_table(double J, int sign = 1) {
    return uniform_table(build_lattice(1, {2}, 1.0, false), J, 1.0, sign);
}

SpinConfig random_spins(std::size_t n, std::uint64_t seed) {
    Engine rng = make_stream(seed, 7);
    std::vector<Vec3> s(n);
    for (Vec3& v : s) v = uniform_sphere(rng);
    return SpinConfig(std::move(s));
}

} // namespace

TEST(Energy, TwoSiteExamples) {
    const CouplingTable t = pair_table(0.3);
    const SpinConfig up({{0, 0, 1}, {0, 0, 1}});
    const SpinConfig anti({{0, 0, 1}, {0, 0, -1}});
    EXPECT_NEAR(total_energy(up, t).total, -0.6, 1e-15);
    EXPECT_NEAR(total_energy(up, t).per_site, -0.3, 1e-15);
    EXPECT_NEAR(total_energy(anti, t).total, 0.6, 1e-15);
    EXPECT_NEAR(energy_delta(up, t, 1, {0, 0, -1}), 1.2, 1e-15);
    EXPECT_EQ(energy_delta(up, t, 1, up[1]), 0.0);
    // the sign flips the picture
    EXPECT_NEAR(total_energy(up, pair_table(0.3, -1)).total, 0.6, 1e-15);
}

TEST(Energy, LocalFieldExample) {
    const CouplingTable t = uniform_table(build_lattice(1, {3}, 1.0, false), 0.5, 1.0);
    const SpinConfig up({{0, 0, 1}, {0, 0, 1}, {0, 0, 1}});
    const Vec3 h = local_field(up, t, 1);
    EXPECT_DOUBLE_EQ(h.x, 0.0);
    EXPECT_DOUBLE_EQ(h.y, 0.0);
    EXPECT_DOUBLE_EQ(h.z, 2.0);
}

TEST(Energy, IsolatedSiteHasNoField) {
    const CouplingTable t = uniform_table(build_lattice(1, {4}, 1.0, false), 1.0, 1.0);
    const CouplingTable empty(t.lattice(), t.source(), 1, 1.0, 0.0, {});
    const SpinConfig s = random_spins(4, 3);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(local_field(s, empty, i), Vec3{});
    EXPECT_EQ(total_energy(s, empty).total, 0.0);
}

TEST(Energy, FieldIdentity) {
    const CouplingTable t = build_coupling_table(hypercubic(3, 3), KernelSpec{1.0, 3, 1.0}, 1.5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SpinConfig s = random_spins(t.site_count(), seed);
        double sum = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) sum += dot(s[i], local_field(s, t, i));
        EXPECT_NEAR(sum, -2.0 * total_energy(s, t).total, 1e-12 * (1.0 + std::abs(sum)));
    }
}

TEST(Energy, MatchesBruteForceDoubleLoop) {
    for (int sign : {1, -1}) {
        const CouplingTable t = build_coupling_table(hypercubic(3, 4), KernelSpec{0.5, 3, 2.0}, 2.0, sign);
        const auto c = oracle::coupling_matrix(t);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const SpinConfig s = random_spins(t.site_count(), seed);
            const double brute = oracle::brute_energy(s.spins(), c);
            EXPECT_NEAR(total_energy(s, t).total, brute, 1e-12 * std::abs(brute));
        }
    }
}

TEST(Energy, DeltaMatchesEnergyDifference) {
    const CouplingTable t = build_coupling_table(hypercubic(3, 4), KernelSpec{1.0, 3, 1.0}, 2.0, -1);
    Engine rng = make_stream(5, 1);
    SpinConfig s = random_spins(t.site_count(), 11);
    for (int k = 0; k < 200; ++k) {
        const std::size_t i = static_cast<std::size_t>(uniform01(rng) * s.size());
        const Vec3 n = uniform_sphere(rng);
        const double before = total_energy(s, t).total;
        const double d = energy_delta(s, t, i, n);
        s.set(i, n);
        const double after = total_energy(s, t).total;
        ASSERT_NEAR(d, after - before, 1e-10 * (1.0 + std::abs(before)));
    }
}

TEST(Energy, Errors) {
    const CouplingTable t = pair_table(0.3);
    const SpinConfig up({{0, 0, 1}, {0, 0, 1}});
    try {
        energy_delta(up, t, 0, {0, 0, 1.1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
    try {
        total_energy(SpinConfig({{0, 0, 1}}), t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
    EXPECT_THROW(local_field(up, t, 2), Error);
}

TEST(Energy, GlobalRotationInvariance) {
    const CouplingTable t = build_coupling_table(hypercubic(3, 4), KernelSpec{1.0, 3, 1.0}, 2.0);
    Engine rng = make_stream(17, 0);
    for (int k = 0; k < 5; ++k) {
        SpinConfig s = random_spins(t.site_count(), 100 + k);
        const double e0 = total_energy(s, t).total;
        const Vec3 axis = uniform_sphere(rng);
        const double angle = 2.0 * std::numbers::pi * uniform01(rng);
        std::vector<Vec3> r;
        for (const Vec3& v : s.spins()) r.push_back(normalized(rotate(v, axis, angle)));
        EXPECT_NEAR(total_energy(SpinConfig(r), t).total, e0, 1e-12 * (1.0 + std::abs(e0)));
    }
}

TEST(Energy, AlignedStateIsTheFerromagneticMinimum) {
    const CouplingTable t = build_coupling_table(hypercubic(3, 4), KernelSpec{1.0, 3, 1.0}, 2.0);
    const double e_min = total_energy(reference_config(t.lattice(), ReferenceKind::aligned), t).total;
    for (std::uint64_t seed = 0; seed < 10000; ++seed)
        ASSERT_GE(total_energy(random_spins(t.site_count(), seed), t).total, e_min);
}

TEST(Energy, NeelStateIsTheNearestNeighborAntiferromagneticMinimum) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(3, 4), 1.0, -1);
    const double e_min = total_energy(reference_config(t.lattice(), ReferenceKind::neel), t).total;
    EXPECT_NEAR(e_min, -3.0 * 64, 1e-12);
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        ASSERT_GE(total_energy(random_spins(t.site_count(), seed), t).total, e_min);
}
