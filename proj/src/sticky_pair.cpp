#include "dydw/sticky_pair.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace dydw {

std::int64_t sample_gap(double s, Engine& eng) {
    require(s >= 0.0, "sample_gap: s must be nonnegative");
    if (s == 0.0) return std::numeric_limits<std::int64_t>::max();
    const double v = std::ceil(std::log(uniform01(eng)) / -s) - 1.0;
    if (v <= 0.0) return 0;
    if (v >= 9e18) return std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(v);
}

StickyPairSample sample_sticky_pair(double s, std::int64_t horizon, Engine& eng) {
    require(s >= 0.0, "sample_sticky_pair: s must be nonnegative");
    require(horizon >= 0, "sample_sticky_pair: horizon must be nonnegative");
    StickyPairSample out;
    out.s = s;
    out.horizon = horizon;
    const auto H = static_cast<std::size_t>(horizon);
    out.S_tau.reserve(H + 1);
    out.S_tau_prime.reserve(H + 1);
    out.time_change.C.reserve(H + 1);
    out.S_shared.push_back(0);
    out.S_d_tau.push_back(0);
    out.S_d_tau_prime.push_back(0);
    out.time_change.l.push_back(1);

    std::int64_t budget = sample_gap(s, eng);
    out.time_change.gaps.push_back(budget);
    std::int64_t c = 0;
    out.S_tau.push_back(0);
    out.S_tau_prime.push_back(0);
    out.time_change.C.push_back(0);
    std::uint64_t bits = 0;
    int left = 0;
    const auto coin = [&]() -> int {
        if (left == 0) {
            bits = eng();
            left = 64;
        }
        --left;
        const int b = static_cast<int>(bits & 1U);
        bits >>= 1;
        return b ? 1 : -1;
    };
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const bool together = out.S_d_tau.back() == out.S_d_tau_prime.back();
        if (together && budget > 0) {
            --budget;
            out.S_shared.push_back(out.S_shared.back() + coin());
        } else {
            ++c;
            out.S_d_tau.push_back(out.S_d_tau.back() + coin());
            out.S_d_tau_prime.push_back(out.S_d_tau_prime.back() + coin());
            const bool meet = out.S_d_tau.back() == out.S_d_tau_prime.back();
            out.time_change.l.push_back(out.time_change.l.back() + (meet ? 1 : 0));
            if (meet) {
                budget = sample_gap(s, eng);
                out.time_change.gaps.push_back(budget);
            }
        }
        out.time_change.C.push_back(c);
        out.S_tau.push_back(out.S_d_tau.back() + out.S_shared.back());
        out.S_tau_prime.push_back(out.S_d_tau_prime.back() + out.S_shared.back());
    }
    return out;
}

StickyPairSample sample_sticky_pair(double s, std::int64_t horizon, std::uint64_t seed) {
    Engine eng(seed);
    return sample_sticky_pair(s, horizon, eng);
}

std::pair<WalkPath, WalkPath> direct_pair(const ArrowField& field, double tau, double tau_prime,
                                          std::int64_t horizon) {
    return {trace(field, tau, {0, 0}, horizon), trace(field, tau_prime, {0, 0}, horizon)};
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> reconstruct(const StickyPairSample& sample) {
    std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> out;
    const auto& C = sample.time_change.C;
    for (std::size_t t = 0; t < C.size(); ++t) {
        const auto c = static_cast<std::size_t>(C[t]);
        const std::int64_t shared = sample.S_shared.at(t - c);
        out.first.push_back(sample.S_d_tau.at(c) + shared);
        out.second.push_back(sample.S_d_tau_prime.at(c) + shared);
    }
    return out;
}

std::vector<std::int64_t> inverse_time_change(const std::vector<std::int64_t>& l,
                                              const std::vector<std::int64_t>& gaps, std::int64_t horizon) {
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
    // F(u) = u + sum_{k < l(u)} gaps[k], saturating.
    std::vector<std::int64_t> F(l.size());
    std::int64_t acc = 0;
    std::int64_t used = 0;
    for (std::size_t u = 0; u < l.size(); ++u) {
        while (used < l[u]) {
            const std::int64_t g = gaps.at(static_cast<std::size_t>(used));
            acc = (g >= kInf - acc) ? kInf : acc + g;
            ++used;
        }
        F[u] = acc >= kInf - static_cast<std::int64_t>(u) ? kInf : acc + static_cast<std::int64_t>(u);
    }
    std::vector<std::int64_t> C;
    std::size_t u = 0;
    for (std::int64_t t = 0; t <= horizon; ++t) {
        while (u < F.size() && F[u] < t) ++u;
        C.push_back(static_cast<std::int64_t>(u));
    }
    return C;
}

double stick_parameter(double kappa, double delta, StickConvention c) {
    require(kappa > 0.0, "stick_parameter: kappa must be positive");
    require(delta > 0.0 && delta <= 1.0, "stick_parameter: delta must lie in (0, 1]");
    return c == StickConvention::sqrt2 ? delta / (std::numbers::sqrt2 * kappa) : delta / (2.0 * kappa);
}

double ScaledPair::coincidence_fraction() const {
    if (first.empty()) return 0.0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < first.size(); ++i) same += first[i] == second[i] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(first.size());
}

ScaledPair sticky_brownian_pair(double kappa, double delta, double horizon_units, std::uint64_t seed,
                                StickConvention c) {
    require(horizon_units > 0.0, "sticky_brownian_pair: horizon must be positive");
    ScaledPair out;
    out.s = std::isinf(kappa) ? 0.0 : stick_parameter(kappa, delta, c);
    out.delta = delta;
    const auto n = static_cast<std::int64_t>(std::llround(std::ceil(horizon_units / (delta * delta) - 1e-9)));
    const StickyPairSample sp = sample_sticky_pair(out.s, n, seed);
    for (std::int64_t t = 0; t <= n; ++t) {
        const auto i = static_cast<std::size_t>(t);
        out.times.push_back(static_cast<double>(t) * delta * delta);
        out.first.push_back(static_cast<double>(sp.S_tau[i]) * delta);
        out.second.push_back(static_cast<double>(sp.S_tau_prime[i]) * delta);
    }
    return out;
}

}  // namespace dydw
