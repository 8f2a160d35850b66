#include <gtest/gtest.h>

#include <cmath>

#include "dydw/experiments.hpp"

using namespace dydw;

namespace {

std::string failed_gates(const ExperimentReport& r) {
    std::string s;
    for (const auto& g : r.gates)
        if (g.status == GateStatus::fail) s += g.name + " (" + g.detail + "); ";
    return s;
}

}  // namespace

TEST(Report, JsonShape) {
    ExperimentReport r;
    r.name = "demo";
    r.seed = 9;
    r.replicates = 10;
    r.gate("a", true, "ok");
    r.skip("b", "not applicable");
    EXPECT_TRUE(r.passed());
    const ojson j = r.to_json();
    EXPECT_EQ(j["experiment"], "demo");
    EXPECT_EQ(j["seed"], 9);
    EXPECT_EQ(j["gates"].size(), 2u);
    r.gate("c", false, "bad");
    EXPECT_FALSE(r.passed());
}

TEST(Boxcount, FullIntervalHasSlopeOne) {
    const std::vector<TauIntervalSet> sets(3, TauIntervalSet::full(0.0, 1.0));
    const BoxcountFit f = boxcount_slope(sets, {1e-1, 1e-2, 1e-3});
    EXPECT_FALSE(f.degenerate);
    EXPECT_NEAR(f.slope, 1.0, 0.05);
}

TEST(Boxcount, FewPointsHaveSlopeZero) {
    const std::vector<TauIntervalSet> sets(
        2, TauIntervalSet({{0.1, 0.1 + 1e-9}, {0.5, 0.5 + 1e-9}, {0.77, 0.77 + 1e-9}}));
    const BoxcountFit f = boxcount_slope(sets, {1e-1, 1e-2, 1e-3, 1e-4});
    EXPECT_NEAR(f.slope, 0.0, 0.05);
}

TEST(Boxcount, TooFewPointsAreFlagged) {
    const std::vector<TauIntervalSet> sets(2);
    EXPECT_TRUE(boxcount_slope(sets, {1e-1, 1e-2}).degenerate);
}

TEST(Experiments, CorrelationDecay) {
    CorrelationDecayConfig c;
    c.replicates = 4000;
    const ExperimentReport r = correlation_decay(c, 1);
    EXPECT_TRUE(r.passed()) << failed_gates(r);
    EXPECT_EQ(r.cells.size(), c.delta_grid.size() * c.s_grid.size());
}

TEST(Experiments, StickyEquivalence) {
    StickyEquivalenceConfig c;
    c.replicates = 10000;
    const ExperimentReport r = sticky_equivalence(c, 2);
    EXPECT_TRUE(r.passed()) << failed_gates(r);
    c.s = 30.0;
    const ExperimentReport d = sticky_equivalence(c, 2);
    EXPECT_TRUE(d.passed()) << failed_gates(d);
    c.s = 0.0;
    const ExperimentReport z = sticky_equivalence(c, 2);
    EXPECT_TRUE(z.passed()) << failed_gates(z);
}

TEST(Experiments, EnStatistics) {
    EnStatisticsConfig c;
    c.n_boxes = 2;
    c.replicates = 1000;
    const ExperimentReport r = En_statistics(c, 3);
    EXPECT_TRUE(r.passed()) << failed_gates(r);
}

TEST(Experiments, EnCensoringIsReported) {
    EnStatisticsConfig c;
    c.n_boxes = 2;
    c.replicates = 50;
    c.max_path_steps = 500;
    const ExperimentReport r = En_statistics(c, 3);
    bool skipped = false;
    for (const auto& g : r.gates) skipped |= g.status == GateStatus::skipped;
    EXPECT_TRUE(skipped);
}

TEST(Experiments, DimensionBoxcount) {
    DimensionBoxcountConfig c;
    c.replicates = 40;
    const ExperimentReport r = dimension_boxcount(c, 4);
    EXPECT_TRUE(r.passed()) << failed_gates(r);
}

TEST(Experiments, ProductRatio) {
    ProductRatioConfig c;
    c.replicates = 5000;
    const ExperimentReport r = product_ratio_check(c, 5);
    EXPECT_TRUE(r.passed()) << failed_gates(r);
}

TEST(Experiments, Tameness) {
    TamenessConfig c;
    c.replicates = 100;
    c.horizon_grid = {100, 400};
    const ExperimentReport r = tameness_probe(c, 6);
    EXPECT_TRUE(r.passed()) << failed_gates(r);
}

TEST(Experiments, WorkerCountDoesNotChangeReports) {
    CorrelationDecayConfig c;
    c.replicates = 500;
    EXPECT_EQ(correlation_decay(c, 7, 1).to_json().dump(), correlation_decay(c, 7, 3).to_json().dump());
    EnStatisticsConfig e;
    e.n_boxes = 1;
    e.replicates = 200;
    EXPECT_EQ(En_statistics(e, 7, 1).to_json().dump(), En_statistics(e, 7, 4).to_json().dump());
}
