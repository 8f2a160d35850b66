#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace dydw {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t n = 0;
};

/// Sample mean with the standard error of the mean.
inline MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    r.n = static_cast<std::int64_t>(v.size());
    if (v.empty()) return r;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    r.mean = m;
    if (v.size() > 1) r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return r;
}

/// |a - b| <= k * sqrt(se_a^2 + se_b^2).
inline bool within_se(double a, double se_a, double b, double se_b, double k = 3.0) {
    return std::abs(a - b) <= k * std::sqrt(se_a * se_a + se_b * se_b);
}

}  // namespace dydw
