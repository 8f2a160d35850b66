#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dydw/rng.hpp"
#include "dydw/stats.hpp"
#include "dydw/sticky_pair.hpp"

using namespace dydw;

TEST(Gap, ZeroRateNeverSeparates) {
    Engine eng(1);
    EXPECT_EQ(sample_gap(0.0, eng), std::numeric_limits<std::int64_t>::max());
    const StickyPairSample sp = sample_sticky_pair(0.0, 500, 7);
    EXPECT_EQ(sp.S_tau, sp.S_tau_prime);
}

TEST(Gap, GeometricLaw) {
    Engine eng(3);
    const double s = std::log(2.0);
    std::vector<double> g;
    std::vector<double> ge2;
    for (int i = 0; i < 100000; ++i) {
        const auto v = sample_gap(s, eng);
        g.push_back(static_cast<double>(v));
        ge2.push_back(v >= 2 ? 1.0 : 0.0);
    }
    const MeanSe m = mean_se(g);
    EXPECT_NEAR(m.mean, std::exp(-s) / (1 - std::exp(-s)), 3 * m.se);
    const MeanSe t = mean_se(ge2);
    EXPECT_NEAR(t.mean, std::exp(-2 * s), 3 * t.se);
}

TEST(StickyPair, ReconstructionIdentity) {
    for (double s : {0.05, std::log(2.0), 3.0})
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const StickyPairSample sp = sample_sticky_pair(s, 300, seed);
            const auto [a, b] = reconstruct(sp);
            EXPECT_EQ(a, sp.S_tau);
            EXPECT_EQ(b, sp.S_tau_prime);
            EXPECT_EQ(inverse_time_change(sp.time_change.l, sp.time_change.gaps, 300), sp.time_change.C);
            for (std::size_t t = 1; t < sp.S_tau.size(); ++t) {
                EXPECT_EQ(std::abs(sp.S_tau[t] - sp.S_tau[t - 1]), 1);
                EXPECT_EQ(std::abs(sp.S_tau_prime[t] - sp.S_tau_prime[t - 1]), 1);
            }
        }
}

TEST(StickyPair, TimeChangeStartsAtOneMeeting) {
    const StickyPairSample sp = sample_sticky_pair(0.5, 10, 1);
    EXPECT_EQ(sp.time_change.l.front(), 1);
    EXPECT_EQ(sp.time_change.C.front(), 0);
}

TEST(StickyPair, MarginalsAreSimpleWalks) {
    constexpr std::int64_t H = 100;
    std::vector<double> x;
    std::vector<double> x2;
    std::vector<double> y2;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        const StickyPairSample sp = sample_sticky_pair(0.3, H, derive_seed(1, 0, i));
        const auto a = static_cast<double>(sp.S_tau.back());
        const auto b = static_cast<double>(sp.S_tau_prime.back());
        x.push_back(a);
        x2.push_back(a * a);
        y2.push_back(b * b);
    }
    const MeanSe m = mean_se(x);
    const MeanSe v = mean_se(x2);
    const MeanSe w = mean_se(y2);
    EXPECT_NEAR(m.mean, 0.0, 3 * m.se);
    EXPECT_NEAR(v.mean, static_cast<double>(H), 3 * v.se);
    EXPECT_NEAR(w.mean, static_cast<double>(H), 3 * w.se);
}

TEST(DirectPair, EqualTimesGiveEqualPaths) {
    ArrowField f(5, 1.0);
    const auto [a, b] = direct_pair(f, 0.4, 0.4, 200);
    EXPECT_EQ(a.positions, b.positions);
    ArrowField frozen(5, 1.0, [](const Site& z) -> std::optional<RingSchedule> {
        return RingSchedule{(z.x / 2 + z.t) % 3 == 0 ? 1 : -1, {}};
    });
    const auto [c, d] = direct_pair(frozen, 0.0, 0.9, 200);
    EXPECT_EQ(c.positions, d.positions);
}

TEST(DirectPair, CoincidenceMatchesStickySampler) {
    const double s = std::log(2.0);
    const std::vector<std::int64_t> ts = {10, 50};
    constexpr int R = 20000;
    std::vector<std::vector<double>> direct(ts.size());
    std::vector<std::vector<double>> sticky(ts.size());
    for (std::uint64_t i = 0; i < R; ++i) {
        ArrowField f(derive_seed(2, 0, i), s);
        const auto [a, b] = direct_pair(f, 0.0, s, 50);
        const StickyPairSample sp = sample_sticky_pair(s, 50, derive_seed(2, 1, i));
        for (std::size_t c = 0; c < ts.size(); ++c) {
            const auto t = static_cast<std::size_t>(ts[c]);
            direct[c].push_back(a.positions[t] == b.positions[t] ? 1.0 : 0.0);
            sticky[c].push_back(sp.S_tau[t] == sp.S_tau_prime[t] ? 1.0 : 0.0);
        }
    }
    for (std::size_t c = 0; c < ts.size(); ++c) {
        const MeanSe d = mean_se(direct[c]);
        const MeanSe k = mean_se(sticky[c]);
        EXPECT_TRUE(within_se(d.mean, d.se, k.mean, k.se)) << ts[c] << ": " << d.mean << " vs " << k.mean;
    }
}

TEST(StickParameter, Conventions) {
    EXPECT_NEAR(stick_parameter(1.0, 0.1), 0.1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(stick_parameter(1.0, 0.1, StickConvention::two), 0.05, 1e-15);
    EXPECT_THROW((void)stick_parameter(0.0, 0.1), PreconditionError);
}

TEST(StickyBrownian, InfiniteStickinessIsOnePath) {
    const ScaledPair p = sticky_brownian_pair(std::numeric_limits<double>::infinity(), 0.05, 1.0, 3);
    EXPECT_EQ(p.s, 0.0);
    EXPECT_EQ(p.first, p.second);
    EXPECT_EQ(p.coincidence_fraction(), 1.0);
}

TEST(StickyBrownian, UnitVarianceAtUnitTime) {
    std::vector<double> v;
    for (std::uint64_t i = 0; i < 20000; ++i) {
        const ScaledPair p = sticky_brownian_pair(1.0, 0.1, 1.0, derive_seed(4, 0, i));
        v.push_back(p.first.back() * p.first.back());
    }
    const MeanSe m = mean_se(v);
    EXPECT_NEAR(m.mean, 1.0, 3 * m.se);
}

TEST(StickyBrownian, CoincidenceDecreasesWithKappa) {
    std::vector<double> means;
    for (double kappa : {10.0, 1.0, 0.1}) {
        std::vector<double> frac;
        for (std::uint64_t i = 0; i < 5000; ++i)
            frac.push_back(sticky_brownian_pair(kappa, 0.1, 1.0, derive_seed(5, 0, i)).coincidence_fraction());
        const MeanSe m = mean_se(frac);
        EXPECT_GT(m.mean, 0.0);
        means.push_back(m.mean);
    }
    EXPECT_GT(means[0], means[1]);
    EXPECT_GT(means[1], means[2]);
}
