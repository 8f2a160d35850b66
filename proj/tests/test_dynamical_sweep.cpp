#include <gtest/gtest.h>

#include <cmath>

#include "dydw/boxes_events.hpp"
#include "dydw/dynamical_sweep.hpp"
#include "dydw/numerics.hpp"
#include "dydw/rng.hpp"
#include "dydw/stats.hpp"

using namespace dydw;

namespace {

PathSpec always(Verdict v, std::int64_t n) {
    PathSpec p;
    p.start = {0, 0};
    p.n_steps = n;
    p.classify = [v](std::int64_t, std::int64_t) { return v; };
    return p;
}

ScheduleOverride no_rings(std::uint64_t seed) {
    return [seed](const Site& z) -> std::optional<RingSchedule> {
        const std::uint64_t h = splitmix64(seed ^ SiteHash{}(z));
        return RingSchedule{(h >> 63) ? 1 : -1, {}};
    };
}

// E_n at tau by tracing every box independently of the sweep machinery.
bool frozen_En(const ArrowField& f, double tau, double K, int n) {
    const double g = gamma_of_K(K).value;
    for (int k = 0; k <= n; ++k)
        if (!event_Ak(f, tau, g, k)) return false;
    return true;
}

}  // namespace

TEST(Sweep, AlwaysTrue) {
    ArrowField f(1, 1.0);
    EXPECT_EQ(sweep_predicate(f, PredicateSpec{}, 1.0), TauIntervalSet::full(0.0, 1.0));
    EXPECT_EQ(sweep_predicate(f, PredicateSpec{{always(Verdict::accept, 10)}}, 1.0), TauIntervalSet::full(0.0, 1.0));
    EXPECT_EQ(sweep_predicate(f, PredicateSpec{{always(Verdict::proceed, 10)}}, 1.0), TauIntervalSet::full(0.0, 1.0));
    EXPECT_TRUE(sweep_predicate(f, PredicateSpec{{always(Verdict::reject, 10)}}, 1.0).empty());
}

TEST(Sweep, FrozenFieldIsAllOrNothing) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        ArrowField f(s, 1.0, no_rings(s));
        const PredicateSpec spec = lower_barrier_spec(3, 40);
        const TauIntervalSet r = sweep_predicate(f, spec, 1.0);
        if (evaluate_predicate(f, spec, 0.0))
            EXPECT_EQ(r, TauIntervalSet::full(0.0, 1.0));
        else
            EXPECT_TRUE(r.empty());
    }
}

TEST(Sweep, MatchesFrozenTauProbes) {
    int mismatches = 0;
    for (std::uint64_t s = 0; s < 300; ++s) {
        ArrowField f(derive_seed(3, 0, s), 1.0);
        const TauIntervalSet r = exceptional_set_En(f, 6.0, 2, 1.0);
        Engine eng(derive_seed(3, 1, s));
        for (int i = 0; i < 20; ++i) {
            const double tau = uniform01(eng) * (1.0 - 1e-12);
            mismatches += r.contains(tau) != frozen_En(f, tau, 6.0, 2);
        }
        for (const auto& iv : r.intervals()) {
            mismatches += !frozen_En(f, iv.a, 6.0, 2);
            if (iv.b < 1.0) mismatches += frozen_En(f, iv.b, 6.0, 2);
        }
    }
    EXPECT_EQ(mismatches, 0);
}

TEST(Sweep, GenericPredicatesMatchOracle) {
    int mismatches = 0;
    const std::vector<PredicateSpec> specs = {lower_barrier_spec(4, 200), exceedance_spec(5, 300),
                                              confinement_spec(2.0, 0.5, 0.5, 300)};
    for (std::uint64_t s = 0; s < 200; ++s) {
        ArrowField f(derive_seed(4, 0, s), 2.0);
        for (const auto& spec : specs) {
            const TauIntervalSet r = sweep_predicate(f, spec, 2.0);
            for (int i = 0; i < 20; ++i) {
                const double tau = 0.1 * i + 0.0123;
                mismatches += r.contains(tau) != evaluate_predicate(f, spec, tau);
            }
        }
    }
    EXPECT_EQ(mismatches, 0);
}

TEST(Sweep, WindowsRestrictResult) {
    ArrowField f(77, 1.0);
    const PredicateSpec spec = lower_barrier_spec(3, 100);
    const TauIntervalSet full = sweep_predicate(f, spec, 1.0);
    const TauIntervalSet w({{0.1, 0.3}, {0.6, 0.95}});
    EXPECT_EQ(sweep_predicate(f, spec, w), full.intersect(w));
}

TEST(Sweep, EventCountMatchesExposure) {
    // Each on-path site rings at rate one, so E[events] = E[exposure].
    std::vector<double> diff;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        ArrowField f(derive_seed(6, 0, s), 1.0);
        SweepStats st;
        (void)sweep_predicate(f, confinement_spec(3.0, 1.0, 1.0, 200), 1.0, &st);
        diff.push_back(static_cast<double>(st.events) - st.exposure);
    }
    const MeanSe m = mean_se(diff);
    EXPECT_NEAR(m.mean, 0.0, 3 * m.se);
}

TEST(Sweep, BudgetExceeded) {
    ArrowField f(1, 1.0);
    SweepOptions o;
    o.max_path_steps = 100;
    EXPECT_THROW((void)sweep_predicate(f, lower_barrier_spec(1000, 10000), 1.0, nullptr, o), BudgetError);
}

TEST(En, AllEventsForcedTrue) {
    ArrowField f(1, 1.0, [](const Site&) -> std::optional<RingSchedule> { return RingSchedule{+1, {}}; });
    EXPECT_EQ(exceptional_set_En(f, 6.0, 3, 1.0), TauIntervalSet::full(0.0, 1.0));
}

TEST(En, Nested) {
    for (std::uint64_t s = 0; s < 1000; ++s) {
        ArrowField f(derive_seed(8, 0, s), 1.0);
        const auto sets = exceptional_sets_upto(f, 6.0, 2, 1.0);
        for (std::size_t k = 1; k < sets.size(); ++k) ASSERT_EQ(sets[k].intersect(sets[k - 1]), sets[k]);
    }
}

TEST(En, SweptOverPartialRange) {
    ArrowField f(5, 2.0);
    const TauIntervalSet a = exceptional_set_En(f, 6.0, 1, 1.0);
    const TauIntervalSet b = exceptional_set_En(f, 6.0, 1, 2.0);
    EXPECT_EQ(a, b.intersect(TauIntervalSet::full(0.0, 1.0)));
}

TEST(Confinement, TrivialHorizons) {
    ArrowField f(2, 1.0);
    EXPECT_EQ(confinement_sweep(f, 1.0, 1.0, 1.0, 0, 1.0), TauIntervalSet::full(0.0, 1.0));
    for (std::uint64_t s = 0; s < 20; ++s) {
        ArrowField g(s, 1.0);
        EXPECT_EQ(confinement_sweep(g, 1.0, 1.0, 1.0, 2, 1.0), TauIntervalSet::full(0.0, 1.0));
    }
}

TEST(Confinement, ShrinksWithHorizon) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        ArrowField f(derive_seed(9, 0, s), 1.0);
        double prev = 2.0;
        TauIntervalSet last = TauIntervalSet::full(0.0, 1.0);
        for (std::int64_t h : {10, 50, 200, 800}) {
            const TauIntervalSet r = confinement_sweep(f, 2.0, 0.5, 0.5, h, 1.0);
            EXPECT_LE(measure(r), prev);
            EXPECT_EQ(r.intersect(last), r);
            prev = measure(r);
            last = r;
        }
    }
}

TEST(Exceedance, UnreachableLevel) {
    ArrowField f(4, 1.0);
    EXPECT_TRUE(sweep_predicate(f, exceedance_spec(31, 30), 1.0).empty());
}
