#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dydw/tau_interval_set.hpp"

namespace dydw {

using ojson = nlohmann::ordered_json;

enum class GateStatus { pass, fail, skipped };

struct Gate {
    std::string name;
    GateStatus status = GateStatus::fail;
    std::string detail;
};

struct ExperimentReport {
    std::string name;
    ojson config = ojson::object();
    std::uint64_t seed = 0;
    std::int64_t replicates = 0;
    ojson cells = ojson::array();
    ojson fits = ojson::array();
    ojson summary = ojson::object();
    std::vector<Gate> gates;

    void gate(std::string gate_name, bool ok, std::string detail);
    void skip(std::string gate_name, std::string detail);
    [[nodiscard]] bool passed() const;
    [[nodiscard]] ojson to_json() const;
};

struct CorrelationDecayConfig {
    std::vector<double> delta_grid{1.0 / 16, 1.0 / 32};
    std::vector<double> s_grid{0.0, 0.01, 0.05, 0.2, 1.0, 5.0};
    std::int64_t replicates = 20000;
};
[[nodiscard]] ExperimentReport correlation_decay(const CorrelationDecayConfig& cfg, std::uint64_t seed,
                                                 int workers = 1);

struct StickyEquivalenceConfig {
    double s = 0.6931471805599453;
    std::int64_t horizon = 200;
    std::int64_t replicates = 100000;
    std::vector<std::int64_t> checkpoints{10, 50, 200};
    double decorrelated_s = 20.0;  // s at or above which independence is also checked
};
[[nodiscard]] ExperimentReport sticky_equivalence(const StickyEquivalenceConfig& cfg, std::uint64_t seed,
                                                  int workers = 1);

struct EnStatisticsConfig {
    double K = 6.0;
    int n_boxes = 3;
    double tau_max = 1.0;
    std::int64_t replicates = 10000;
    std::int64_t max_path_steps = 50000000;  // per replicate; exceeding it censors the remaining boxes
    int floor_n = -1;                        // >= 0 enables the nonemptiness-floor gate against E_floor_n
};
[[nodiscard]] ExperimentReport En_statistics(const EnStatisticsConfig& cfg, std::uint64_t seed, int workers = 1);

struct BoxcountFit {
    double slope = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
    bool degenerate = true;
    std::vector<double> mean_counts;
};
/// Least-squares slope of log mean n(eps) against log(1/eps).
[[nodiscard]] BoxcountFit boxcount_slope(const std::vector<TauIntervalSet>& sets, const std::vector<double>& eps_grid,
                                         std::int64_t min_total = 1);

struct DimensionBoxcountConfig {
    double K = 8.0;
    std::vector<int> n_list{1, 2};
    double tau_max = 1.0;
    std::int64_t replicates = 200;
    std::vector<double> eps_grid{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    double gamma0 = 16.0;
    std::int64_t max_path_steps = 50000000;
};
[[nodiscard]] ExperimentReport dimension_boxcount(const DimensionBoxcountConfig& cfg, std::uint64_t seed,
                                                  int workers = 1);

struct ProductRatioConfig {
    double K = 6.0;
    std::vector<double> s_grid{0.05, 0.2, 1.0, 5.0};
    int n = 2;
    std::int64_t replicates = 20000;
    double large_s = 3.0;
};
[[nodiscard]] ExperimentReport product_ratio_check(const ProductRatioConfig& cfg, std::uint64_t seed,
                                                   int workers = 1);

struct TamenessConfig {
    std::vector<std::int64_t> horizon_grid{100, 400, 1600};
    std::int64_t level = 4;           // A = {S(t) > -level for t <= H}
    std::int64_t exceed_level = 8;    // reach +exceed_level before returning to 0
    double tau_max = 1.0;
    std::int64_t cells = 10;          // tau grid of mesh tau_max / cells
    std::int64_t replicates = 400;
    double conf_j = 20.0;
    double K1 = 0.2;
    double K2 = 0.2;
    std::vector<std::int64_t> conf_horizons{1000, 10000};
};
[[nodiscard]] ExperimentReport tameness_probe(const TamenessConfig& cfg, std::uint64_t seed, int workers = 1);

}  // namespace dydw
