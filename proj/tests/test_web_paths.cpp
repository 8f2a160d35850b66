#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dydw/boxes_events.hpp"
#include "dydw/numerics.hpp"
#include "dydw/rng.hpp"
#include "dydw/stats.hpp"
#include "dydw/web_paths.hpp"

using namespace dydw;

namespace {

ScheduleOverride constant_sign(int sign) {
    return [sign](const Site&) -> std::optional<RingSchedule> { return RingSchedule{sign, {}}; };
}

WalkPath from_steps(std::initializer_list<int> steps) {
    WalkPath p;
    for (int s : steps) p.push(s);
    return p;
}

}  // namespace

TEST(Trace, ZeroSteps) {
    ArrowField f(1, 1.0);
    const WalkPath p = trace(f, 0.3, {4, 2}, 0);
    EXPECT_EQ(p.length(), 0);
    EXPECT_EQ(p.pos(0), 4);
}

TEST(Trace, BallisticWhenAllArrowsUp) {
    ArrowField f(1, 1.0, constant_sign(+1));
    const WalkPath p = trace(f, 0.5, {-2, 0}, 50);
    for (std::int64_t k = 0; k <= 50; ++k) EXPECT_EQ(p.pos(k), -2 + k);
}

TEST(Trace, FollowsArrowsAtVisitedSites) {
    ArrowField f(77, 1.0);
    const WalkPath p = trace(f, 0.42, {0, 0}, 200);
    for (std::int64_t k = 0; k < 200; ++k) {
        EXPECT_EQ(p.pos(k + 1) - p.pos(k), f.arrow_at(p.site(k), 0.42));
        EXPECT_TRUE(p.site(k).is_even());
    }
}

TEST(Trace, EndpointIsSimpleRandomWalk) {
    constexpr std::int64_t n = 64;
    std::vector<double> end;
    std::vector<double> sq;
    for (std::uint64_t r = 0; r < 100000; ++r) {
        ArrowField f(r + 1000, 1.0);
        const double x = static_cast<double>(trace(f, 0.5, {0, 0}, n).pos(n));
        end.push_back(x);
        sq.push_back(x * x);
    }
    const MeanSe m = mean_se(end);
    const MeanSe v = mean_se(sq);
    EXPECT_NEAR(m.mean, 0.0, 3 * m.se);
    EXPECT_NEAR(v.mean, static_cast<double>(n), 3 * v.se);
}

TEST(Coalescence, IdenticalStarts) {
    ArrowField f(3, 1.0);
    EXPECT_EQ(coalescence_time(trace(f, 0.1, {0, 0}, 10), trace(f, 0.1, {0, 0}, 10)), 0);
}

TEST(Coalescence, ForcedMeeting) {
    ArrowField f(3, 1.0, [](const Site& z) -> std::optional<RingSchedule> {
        if (z == Site{0, 0}) return RingSchedule{+1, {}};
        if (z == Site{2, 0}) return RingSchedule{-1, {}};
        return std::nullopt;
    });
    EXPECT_EQ(coalescence_time(trace(f, 0.5, {0, 0}, 5), trace(f, 0.5, {2, 0}, 5)), 1);
}

TEST(Coalescence, PathsMergeForever) {
    ArrowField f(12, 1.0);
    for (std::int64_t x = 2; x <= 20; x += 2) {
        const WalkPath a = trace(f, 0.7, {0, 0}, 400);
        const WalkPath b = trace(f, 0.7, {x, 0}, 400);
        const auto c = coalescence_time(a, b);
        if (!c) continue;
        for (std::int64_t k = *c; k <= 400; ++k) EXPECT_EQ(a.pos(k), b.pos(k));
    }
}

TEST(Coalescence, Mismatch) {
    ArrowField f(3, 1.0);
    EXPECT_THROW((void)coalescence_time(trace(f, 0.1, {0, 0}, 10), trace(f, 0.1, {0, 2}, 10)), PreconditionError);
    EXPECT_THROW((void)coalescence_time(trace(f, 0.1, {0, 0}, 10), trace(f, 0.1, {0, 0}, 11)), PreconditionError);
}

TEST(Coalescence, NonMeetingDecaysLikeInverseSqrt) {
    // Starts 2 apart: the gap is a lazy walk absorbed at 0, P(T > n) ~ c n^{-1/2}.
    constexpr std::int64_t n_max = 4096;
    constexpr int R = 20000;
    std::vector<std::int64_t> meet(R);
    for (int r = 0; r < R; ++r) {
        ArrowField f(derive_seed(5, 0, static_cast<std::uint64_t>(r)), 1.0);
        const auto c = coalescence_time(trace(f, 0.5, {0, 0}, n_max), trace(f, 0.5, {2, 0}, n_max));
        meet[static_cast<std::size_t>(r)] = c ? *c : n_max + 1;
    }
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::int64_t n = 16; n <= n_max; n *= 2) {
        const auto alive = std::count_if(meet.begin(), meet.end(), [n](std::int64_t c) { return c > n; });
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(static_cast<double>(alive) / R));
    }
    const LineFit fit = fit_line(lx, ly);
    EXPECT_NEAR(-fit.slope, 0.5, 0.05);
}

TEST(StaysAbove, SmallPaths) {
    EXPECT_TRUE(stays_above(from_steps({-1, +1}), {1.0, 0.0}));
    EXPECT_FALSE(stays_above(from_steps({-1, -1}), {1.0, 0.0}));
    for (int a : {-1, 1})
        for (int b : {-1, 1}) EXPECT_TRUE(stays_above(from_steps({a, b}), {1.0, 1.0}));
}

TEST(StaysAbove, ThresholdAtExactIntegers) {
    // -1 - 1 * sqrt(4) = -3 exactly; position -3 is allowed.
    const Boundary b{1.0, 1.0};
    EXPECT_EQ(b.threshold(4), -3);
    EXPECT_EQ(b.threshold(0), -1);
    EXPECT_EQ(b.threshold(2), -2);
}

TEST(BoundaryGamma, HandValues) {
    for (double t : {0.0, 1.0, 3.99}) EXPECT_EQ(boundary_gamma(3.0, t), -2.0);
    for (double t : {4.0, 19.0}) EXPECT_EQ(boundary_gamma(3.0, t), -2.0);
    for (double t : {20.0, 50.0, 119.0}) EXPECT_EQ(boundary_gamma(3.0, t), -4.0);
}

TEST(BoundaryGamma, DominatesBoundaryOnGrid) {
    const double g = gamma_of_K(std::sqrt(2.0)).value;
    EXPECT_NEAR(g, 3.0, 1e-10);
    for (double t = 0; t <= 1e6; t += 1.0) ASSERT_GE(boundary_gamma(3.0, t), -3.0 - std::sqrt(2.0) * std::sqrt(t)) << t;
}

TEST(TraceDrifted, EqualsTraceOnDegenerateInterval) {
    ArrowField f(9, 1.0);
    const WalkPath a = trace(f, 0.25, {0, 0}, 300);
    const WalkPath b = trace_drifted(f, 0.25, 0.25, {0, 0}, 300);
    EXPECT_EQ(a.positions, b.positions);
}

TEST(TraceDrifted, DominatesFrozenPaths) {
    for (std::uint64_t r = 0; r < 1000; ++r) {
        ArrowField f(r, 1.0);
        const WalkPath hi = trace_drifted(f, 0.2, 0.6, {0, 0}, 100);
        for (int i = 0; i < 10; ++i) {
            const double tau = 0.2 + 0.4 * i / 9.0;
            const WalkPath p = trace(f, tau, {0, 0}, 100);
            for (std::int64_t k = 0; k <= 100; ++k) ASSERT_LE(p.pos(k), hi.pos(k));
        }
    }
}

TEST(TraceDrifted, StepMean) {
    std::vector<double> steps;
    steps.reserve(1000000);
    for (std::uint64_t r = 0; r < 1000; ++r) {
        ArrowField f(r + 77, 1.0);
        const WalkPath p = trace_drifted(f, 0.4, 0.6, {0, 0}, 1000);
        for (auto s : p.steps) steps.push_back(s);
    }
    const MeanSe m = mean_se(steps);
    const double expect = 2.0 * (0.5 + (1.0 - std::exp(-0.1)) / 2.0) - 1.0;
    EXPECT_NEAR(expect, 0.09516, 1e-5);
    EXPECT_NEAR(m.mean, expect, 3 * m.se);
}
