#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "dydw/arrow_field.hpp"
#include "dydw/rng.hpp"
#include "dydw/stats.hpp"

using namespace dydw;

namespace {

ScheduleOverride fixed(Site at, RingSchedule s) {
    return [at, s](const Site& z) -> std::optional<RingSchedule> {
        if (z == at) return s;
        return std::nullopt;
    };
}

}  // namespace

TEST(ArrowField, LastRingRule) {
    const RingSchedule s{-1, {{0.3, +1}, {0.7, -1}}};
    ArrowField f(1, 1.0, fixed({0, 0}, s));
    EXPECT_EQ(f.arrow_at({0, 0}, 0.0), -1);
    EXPECT_EQ(f.arrow_at({0, 0}, 0.5), +1);
    EXPECT_EQ(f.arrow_at({0, 0}, 0.3), +1);
    EXPECT_EQ(f.arrow_at({0, 0}, 0.7), -1);
    EXPECT_EQ(f.arrow_at({0, 0}, 1.0), -1);
}

TEST(ArrowField, NoRingsMeansInitialSign) {
    ArrowField f(1, 1.0, fixed({2, 0}, RingSchedule{+1, {}}));
    for (double tau : {0.0, 0.25, 0.99, 1.0}) EXPECT_EQ(f.arrow_at({2, 0}, tau), 1);
    EXPECT_TRUE(f.ring_times({2, 0}, 0.0, 1.0).empty());
}

TEST(ArrowField, TauZeroIsInitialSign) {
    ArrowField f(99, 5.0);
    for (std::int64_t x = -20; x <= 20; x += 2)
        EXPECT_EQ(f.arrow_at({x, 0}, 0.0), f.schedule({x, 0}).initial_sign);
}

TEST(ArrowField, RingTimesHalfOpen) {
    ArrowField f(1, 1.0, fixed({0, 0}, RingSchedule{-1, {{0.3, +1}, {0.7, -1}}}));
    const auto r = f.ring_times({0, 0}, 0.3, 0.7);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r[0], 0.3);
}

TEST(ArrowField, StreamingMatchesCachedSchedule) {
    ArrowField f(2024, 3.0);
    for (std::int64_t t = 0; t < 30; ++t)
        for (std::int64_t x = -t; x <= t; x += 2) {
            const Site z{x, t};
            const RingSchedule g = f.generate(z);
            for (double tau = 0.0; tau <= 3.0; tau += 0.0625) EXPECT_EQ(f.arrow_at(z, tau), g.sign_at(tau));
            const RingSchedule& c = f.schedule(z);
            ASSERT_EQ(c.rings.size(), g.rings.size());
            for (std::size_t i = 0; i < c.rings.size(); ++i) {
                EXPECT_EQ(c.rings[i].time, g.rings[i].time);
                EXPECT_EQ(c.rings[i].sign, g.rings[i].sign);
            }
        }
}

TEST(ArrowField, SameSeedSameField) {
    ArrowField a(7, 2.0);
    ArrowField b(7, 2.0);
    ArrowField c(8, 2.0);
    int diff = 0;
    for (std::int64_t x = -50; x <= 50; x += 2) {
        EXPECT_EQ(a.generate({x, 4}).rings.size(), b.generate({x, 4}).rings.size());
        EXPECT_EQ(a.arrow_at({x, 4}, 1.3), b.arrow_at({x, 4}, 1.3));
        diff += a.arrow_at({x, 4}, 1.3) != c.arrow_at({x, 4}, 1.3);
    }
    EXPECT_GT(diff, 0);
}

TEST(ArrowField, SchedulePrefixIndependentOfTauMax) {
    ArrowField a(5, 1.0);
    ArrowField b(5, 4.0);
    for (std::int64_t x = -10; x <= 10; x += 2) {
        const auto ra = a.ring_times({x, 0}, 0.0, 1.0);
        const auto rb = b.ring_times({x, 0}, 0.0, 1.0);
        EXPECT_EQ(ra, rb);
    }
}

TEST(ArrowField, RejectsOddSitesAndOutOfRangeTau) {
    ArrowField f(1, 1.0);
    EXPECT_THROW((void)f.arrow_at({1, 0}, 0.5), PreconditionError);
    EXPECT_THROW((void)f.arrow_at({0, 0}, 1.5), PreconditionError);
    EXPECT_THROW((void)f.arrow_at({0, 0}, -0.1), PreconditionError);
    EXPECT_THROW(ArrowField(1, 0.0), PreconditionError);
}

TEST(ArrowField, RejectsMalformedOverride) {
    ArrowField f(1, 1.0, fixed({0, 0}, RingSchedule{1, {{0.7, 1}, {0.3, -1}}}));
    EXPECT_THROW((void)f.schedule({0, 0}), PreconditionError);
}

TEST(ArrowField, RingCountIsRateOne) {
    ArrowField f(31337, 1.0);
    std::vector<double> counts;
    for (std::int64_t i = 0; i < 100000; ++i)
        counts.push_back(static_cast<double>(f.ring_times({2 * i, 0}, 0.0, 1.0).size()));
    const MeanSe m = mean_se(counts);
    EXPECT_NEAR(m.mean, 1.0, 3 * m.se);
}

TEST(ArrowField, InitialSignIsFair) {
    ArrowField f(17, 1.0);
    std::vector<double> plus;
    for (std::int64_t i = 0; i < 100000; ++i) plus.push_back(f.arrow_at({0, 2 * i}, 0.5) > 0 ? 1.0 : 0.0);
    const MeanSe m = mean_se(plus);
    EXPECT_NEAR(m.mean, 0.5, 3 * m.se);
}

TEST(ArrowField, OrCouplingProbability) {
    EXPECT_NEAR(or_coupling_plus_probability(1.0), 1.0 - 0.5 * std::exp(-0.5), 1e-15);
    EXPECT_NEAR(or_coupling_plus_probability(1.0), 0.69673, 1e-5);
    EXPECT_DOUBLE_EQ(or_coupling_plus_probability(0.0), 0.5);

    ArrowField f(4, 2.0);
    std::vector<double> plus;
    for (std::int64_t i = 0; i < 100000; ++i) plus.push_back(f.arrow_or_coupling({2 * i, 2}, 0.5, 1.5) > 0 ? 1.0 : 0.0);
    const MeanSe m = mean_se(plus);
    EXPECT_NEAR(m.mean, or_coupling_plus_probability(1.0), 3 * m.se);
}

TEST(ArrowField, OrCouplingDegenerateInterval) {
    ArrowField f(4, 2.0);
    for (std::int64_t x = -20; x <= 20; x += 2)
        EXPECT_EQ(f.arrow_or_coupling({x, 0}, 0.8, 0.8), f.arrow_at({x, 0}, 0.8));
}

TEST(ArrowField, ConcurrentQueriesAgree) {
    ArrowField f(11, 1.0);
    std::vector<int> a(2000);
    std::vector<int> b(2000);
    std::thread t1([&] {
        for (int i = 0; i < 2000; ++i) a[i] = f.schedule({2 * i, 0}).sign_at(0.4);
    });
    std::thread t2([&] {
        for (int i = 1999; i >= 0; --i) b[i] = f.schedule({2 * i, 0}).sign_at(0.4);
    });
    t1.join();
    t2.join();
    EXPECT_EQ(a, b);
}

TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::apply(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}
