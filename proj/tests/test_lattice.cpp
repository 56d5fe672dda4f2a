#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "qbdspin/coupling.hpp"
#include "qbdspin/lattice.hpp"

using namespace qbdspin;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::validation;
}

} // namespace

TEST(Lattice, PeriodicChain) {
    const Lattice lat = build_lattice(1, {4}, 1.0, true);
    ASSERT_EQ(lat.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(lat.position(i).x, static_cast<double>(i));
    EXPECT_DOUBLE_EQ(lat.distance(0, 3), 1.0);
}

TEST(Lattice, SiteCountIsProduct) {
    EXPECT_EQ(build_lattice(3, {4, 4, 4}).size(), 64u);
    EXPECT_EQ(build_lattice(3, {2, 3, 5}).size(), 30u);
}

TEST(Lattice, RectangularMaxMinimumImage) {
    const Lattice lat = build_lattice(2, {3, 5}, 0.5, true);
    ASSERT_EQ(lat.size(), 15u);
    double worst = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i)
        for (std::size_t j = 0; j < lat.size(); ++j) worst = std::max(worst, oracle::image_distance(lat, i, j));
    EXPECT_NEAR(worst, std::sqrt(0.5 * 0.5 + 1.0 * 1.0), 1e-12);
    double ours = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i)
        for (std::size_t j = 0; j < lat.size(); ++j) ours = std::max(ours, lat.distance(i, j));
    EXPECT_NEAR(ours, worst, 1e-12);
}

TEST(Lattice, MinimumImageMatchesBruteForce) {
    for (const auto& lat : {build_lattice(3, {5, 5, 5}), build_lattice(3, {4, 3, 5}, 0.7, true),
                            build_lattice(2, {5, 4}, 1.0, std::vector<bool>{true, false}),
                            build_lattice(1, {5}, 2.0, false)}) {
        for (std::size_t i = 0; i < lat.size(); ++i)
            for (std::size_t j = 0; j < lat.size(); ++j) {
                ASSERT_NEAR(lat.distance(i, j), oracle::image_distance(lat, i, j), 1e-12);
                if (i != j) {
                    ASSERT_GT(lat.distance(i, j), 0.0);
                }
            }
    }
}

TEST(Lattice, IndexCoordRoundTrip) {
    const Lattice lat = build_lattice(3, {3, 4, 5});
    for (std::size_t i = 0; i < lat.size(); ++i) EXPECT_EQ(lat.index(lat.coord(i)), i);
}

TEST(Lattice, DomainErrors) {
    EXPECT_EQ(kind_of([] { build_lattice(3, {4, 0, 4}); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([] { build_lattice(2, {4, -2}); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([] { build_lattice(1, {1}); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([] { build_lattice(2, {4, 4}, 0.0); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([] { build_lattice(4, {2, 2, 2, 2}); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([] { build_lattice(2, {4}); }), ErrorKind::domain);
}

TEST(Lattice, DigestDependsOnGeometry) {
    EXPECT_EQ(hypercubic(3, 4).digest(), hypercubic(3, 4).digest());
    EXPECT_NE(hypercubic(3, 4).digest(), hypercubic(3, 6).digest());
    EXPECT_NE(build_lattice(2, {4, 4}, 1.0).digest(), build_lattice(2, {4, 4}, 0.5).digest());
}

TEST(SpinConfigs, RandomConfigDeterministicAndNormalized) {
    const Lattice lat = hypercubic(3, 4);
    const SpinConfig a = random_config(lat, 42), b = random_config(lat, 42), c = random_config(lat, 43);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a == c);
    double mean_norm = 0.0;
    for (const Vec3& s : a.spins()) {
        EXPECT_NEAR(norm(s), 1.0, 1e-12);
        mean_norm += norm(s);
    }
    EXPECT_NEAR(mean_norm / a.size(), 1.0, 1e-12);
}

TEST(SpinConfigs, RandomConfigIsIsotropic) {
    const Lattice lat = build_lattice(2, {100, 100});
    const double N = static_cast<double>(lat.size());
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Vec3 m = random_config(lat, seed).magnetization();
        EXPECT_LE(norm(m), 5.0 / std::sqrt(N));
    }
}

TEST(SpinConfigs, RejectsNonUnitSpins) {
    EXPECT_EQ(kind_of([] { SpinConfig({Vec3{0, 0, 1.001}}); }), ErrorKind::domain);
}

TEST(SpinConfigs, ReferenceConfigs) {
    const Lattice lat = build_lattice(2, {4, 4});
    const SpinConfig up = reference_config(lat, ReferenceKind::aligned);
    EXPECT_EQ(up.magnetization(), (Vec3{0, 0, 1}));
    const SpinConfig neel = reference_config(lat, ReferenceKind::neel);
    EXPECT_NEAR(norm(neel.magnetization()), 0.0, 1e-15);
    EXPECT_NEAR(norm(staggered_magnetization(neel, lat)), 1.0, 1e-15);
    EXPECT_EQ(kind_of([] { reference_config(build_lattice(1, {3}), ReferenceKind::neel); }), ErrorKind::frustration);
    // odd length on an open axis stays bipartite
    EXPECT_NO_THROW(reference_config(build_lattice(1, {3}, 1.0, false), ReferenceKind::neel));
}

TEST(CouplingTable, TwoSiteChain) {
    const Lattice lat = build_lattice(1, {2}, 1.0, false);
    const CouplingTable t = build_coupling_table(lat, KernelSpec{1.0, 3, 4.0 * std::numbers::pi}, 1.0);
    ASSERT_EQ(t.pairs().size(), 1u);
    EXPECT_EQ(t.pairs()[0].i, 0u);
    EXPECT_EQ(t.pairs()[0].j, 1u);
    EXPECT_NEAR(t.pairs()[0].J, std::exp(-1.0), 1e-15);
}

TEST(CouplingTable, FourSitePeriodicChainPairCount) {
    const CouplingTable t = build_coupling_table(build_lattice(1, {4}), KernelSpec{1.0, 3, 1.0}, 2.0);
    std::size_t nn = 0, nnn = 0;
    for (const Pair& p : t.pairs()) {
        const double d = t.lattice().distance(p.i, p.j);
        if (std::abs(d - 1.0) < 1e-12) ++nn;
        if (std::abs(d - 2.0) < 1e-12) ++nnn;
    }
    EXPECT_EQ(nn, 4u);
    EXPECT_EQ(nnn, 2u);
    EXPECT_EQ(t.pairs().size(), 6u);
}

TEST(CouplingTable, CutoffBelowSpacingIsAnError) {
    EXPECT_EQ(kind_of([] { build_coupling_table(hypercubic(3, 4), KernelSpec{}, 0.5); }), ErrorKind::domain);
}

TEST(CouplingTable, GeometryErrorBeyondHalfBoxOnOpenAxis) {
    const Lattice lat = build_lattice(2, {4, 4}, 1.0, std::vector<bool>{true, false});
    EXPECT_EQ(kind_of([&] { build_coupling_table(lat, KernelSpec{}, 3.0); }), ErrorKind::geometry);
    EXPECT_NO_THROW(build_coupling_table(lat, KernelSpec{}, 2.0));
}

TEST(CouplingTable, UnscreenedNeedsCutoffInsideBox) {
    EXPECT_EQ(kind_of([] { build_coupling_table(hypercubic(3, 4), KernelSpec{0.0, 3, 1.0}, 3.0); }),
              ErrorKind::domain);
    EXPECT_EQ(kind_of([] { build_coupling_table(hypercubic(2, 4), KernelSpec{0.0, 2, 1.0}, 1.5); }),
              ErrorKind::divergent);
}

TEST(CouplingTable, InvariantsOverRandomGeometries) {
    Engine rng = make_stream(9, 0);
    for (int trial = 0; trial < 25; ++trial) {
        const int dim = 1 + static_cast<int>(uniform01(rng) * 3);
        std::vector<int> lengths;
        std::vector<bool> periodic;
        for (int a = 0; a < dim; ++a) {
            lengths.push_back(2 + static_cast<int>(uniform01(rng) * (dim == 3 ? 4 : 7)));
            periodic.push_back(uniform01(rng) < 0.7);
        }
        const double spacing = 0.5 + uniform01(rng);
        const Lattice lat(dim, lengths, spacing, periodic);
        const KernelSpec spec{0.2 + 2.0 * uniform01(rng), 3, 1.0};
        double cutoff = spacing * (1.0 + 2.0 * uniform01(rng));
        bool open = false;
        for (bool p : periodic) open = open || !p;
        if (open) cutoff = std::max(spacing, std::min(cutoff, lat.half_box()));
        const int sign = uniform01(rng) < 0.5 ? 1 : -1;
        const CouplingTable t = build_coupling_table(lat, spec, cutoff, sign);

        std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
        for (const Pair& p : t.pairs()) {
            ASSERT_LT(p.i, p.j);
            ASSERT_GT(p.J, 0.0);
            ASSERT_LE(lat.distance(p.i, p.j), cutoff * (1.0 + 1e-12));
            ASSERT_NEAR(p.J, yukawa_closed_form(oracle::image_distance(lat, p.i, p.j), spec), 1e-13 * p.J);
            seen.insert({p.i, p.j});
        }
        // every in-range pair is present exactly once
        std::size_t expected = 0;
        for (std::size_t i = 0; i < lat.size(); ++i)
            for (std::size_t j = i + 1; j < lat.size(); ++j)
                if (oracle::image_distance(lat, i, j) <= cutoff * (1.0 + 1e-12)) ++expected;
        EXPECT_EQ(seen.size(), expected);
        EXPECT_EQ(t.pairs().size(), expected);
        // adjacency rows are symmetric and carry the sign
        for (std::size_t i = 0; i < lat.size(); ++i) {
            const auto row = t.row(i);
            for (std::size_t k = 0; k < row.count; ++k) {
                const auto j = row.sites[k];
                ASSERT_NE(j, i);
                const auto back = t.row(j);
                bool found = false;
                for (std::size_t q = 0; q < back.count; ++q)
                    if (back.sites[q] == i && back.couplings[q] == row.couplings[k]) found = true;
                ASSERT_TRUE(found);
                ASSERT_EQ(row.couplings[k] > 0, sign > 0);
            }
        }
    }
}

TEST(CouplingTable, TailBoundIsAnUpperBound) {
    for (int L : {4, 5, 6})
        for (double mu2 : {0.25, 1.0, 4.0})
            for (double cutoff : {1.0, 1.5, 2.0, 2.9}) {
                const Lattice lat = hypercubic(3, L);
                if (cutoff > lat.half_box()) continue;
                const KernelSpec spec{mu2, 3, 1.0};
                const CouplingTable t = build_coupling_table(lat, spec, cutoff);
                double worst = 0.0;
                for (std::size_t i = 0; i < lat.size(); ++i) {
                    double omitted = 0.0;
                    for (std::size_t j = 0; j < lat.size(); ++j) {
                        if (j == i) continue;
                        const double d = oracle::image_distance(lat, i, j);
                        if (d > cutoff * (1.0 + 1e-12)) omitted += yukawa_closed_form(d, spec);
                    }
                    worst = std::max(worst, omitted);
                }
                EXPECT_LE(worst, t.tail_bound()) << "L " << L << " mu2 " << mu2 << " cutoff " << cutoff;
                EXPECT_TRUE(std::isfinite(t.tail_bound()));
            }
}

TEST(CouplingTable, TailBoundInLowerKernelDimensions) {
    for (int kdim : {1, 2}) {
        const KernelSpec spec{1.0, kdim, 1.0};
        const Lattice lat = hypercubic(2, 6);
        const CouplingTable t = build_coupling_table(lat, spec, 1.5);
        double omitted = 0.0;
        for (std::size_t j = 1; j < lat.size(); ++j) {
            const double d = oracle::image_distance(lat, 0, j);
            if (d > 1.5 * (1.0 + 1e-12)) omitted += kernel_closed_form(d, spec);
        }
        EXPECT_LE(omitted, t.tail_bound());
    }
}

TEST(CouplingTable, DefaultCutoffTailBoundIsReasonablyTight) {
    const KernelSpec spec{1.0, 3, 1.0};
    const CouplingTable t = build_coupling_table(hypercubic(3, 16), spec);
    EXPECT_DOUBLE_EQ(t.cutoff(), 6.0);
    double omitted = 0.0, kept = 0.0;
    for (std::size_t j = 1; j < t.site_count(); ++j) {
        const double d = oracle::image_distance(t.lattice(), 0, j);
        (d > 6.0 * (1.0 + 1e-12) ? omitted : kept) += yukawa_closed_form(d, spec);
    }
    EXPECT_GE(t.tail_bound(), omitted);
    EXPECT_LE(t.tail_bound(), 5.0 * omitted);
    EXPECT_LT(t.tail_bound(), 0.1 * kept);
}

TEST(CouplingTable, NearestNeighborTable) {
    const CouplingTable t = nearest_neighbor_table(hypercubic(3, 4), 1.0);
    EXPECT_EQ(t.pairs().size(), 3u * 64u);
    for (const Pair& p : t.pairs()) EXPECT_DOUBLE_EQ(p.J, 0.5);
    EXPECT_EQ(t.tail_bound(), 0.0);
}

TEST(CouplingTable, ConstructorRejectsBadPairs) {
    const Lattice lat = build_lattice(1, {4});
    const CouplingSource src{CouplingSource::Kind::uniform, {}, 1.0};
    EXPECT_EQ(kind_of([&] { CouplingTable(lat, src, 1, 1.0, 0.0, {{1, 1, 1.0}}); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([&] { CouplingTable(lat, src, 1, 1.0, 0.0, {{1, 0, 1.0}}); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([&] { CouplingTable(lat, src, 1, 1.0, 0.0, {{0, 1, -1.0}}); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([&] { CouplingTable(lat, src, 1, 1.0, 0.0, {{0, 2, 1.0}}); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([&] { CouplingTable(lat, src, 1, 1.0, 0.0, {{1, 2, 1.0}, {0, 1, 1.0}}); }),
              ErrorKind::validation);
    EXPECT_EQ(kind_of([&] { CouplingTable(lat, src, 2, 1.0, 0.0, {}); }), ErrorKind::validation);
}
