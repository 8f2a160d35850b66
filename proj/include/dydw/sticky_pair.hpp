#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dydw/arrow_field.hpp"
#include "dydw/rng.hpp"
#include "dydw/web_paths.hpp"

namespace dydw {

/// Time change of the decomposition: C[t] independent steps have been taken
/// by time t; l[u] counts meetings of the two independent walks up to u.
struct TimeChange {
    std::vector<std::int64_t> C;
    std::vector<std::int64_t> l;
    std::vector<std::int64_t> gaps;  // Delta T_0, Delta T_1, ...
};

struct StickyPairSample {
    double s = 0.0;
    std::int64_t horizon = 0;
    std::vector<std::int64_t> S_tau;
    std::vector<std::int64_t> S_tau_prime;
    std::vector<std::int64_t> S_shared;   // S_s, indexed by shared steps taken
    std::vector<std::int64_t> S_d_tau;    // S_d^tau, indexed by independent steps taken
    std::vector<std::int64_t> S_d_tau_prime;
    TimeChange time_change;
};

/// Gap with P(Delta T >= j) = e^{-s j}; s = 0 returns the largest int64.
[[nodiscard]] std::int64_t sample_gap(double s, Engine& eng);

[[nodiscard]] StickyPairSample sample_sticky_pair(double s, std::int64_t horizon, std::uint64_t seed);
[[nodiscard]] StickyPairSample sample_sticky_pair(double s, std::int64_t horizon, Engine& eng);

[[nodiscard]] std::pair<WalkPath, WalkPath> direct_pair(const ArrowField& field, double tau, double tau_prime,
                                                        std::int64_t horizon);

/// Rebuilds S^tau(t) = S_d^tau(C(t)) + S_s(t - C(t)) and its primed twin.
[[nodiscard]] std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> reconstruct(
    const StickyPairSample& sample);

/// C(t) = min{u : u + sum_{k < l(u)} Delta T_k >= t}.
[[nodiscard]] std::vector<std::int64_t> inverse_time_change(const std::vector<std::int64_t>& l,
                                                            const std::vector<std::int64_t>& gaps,
                                                            std::int64_t horizon);

enum class StickConvention { sqrt2, two };

/// Stick parameter s for stickiness kappa at lattice scale delta:
/// delta / (sqrt2 kappa) by default, delta / (2 kappa) for the alternative.
[[nodiscard]] double stick_parameter(double kappa, double delta, StickConvention c = StickConvention::sqrt2);

struct ScaledPair {
    double s = 0.0;
    double delta = 0.0;
    std::vector<double> times;
    std::vector<double> first;
    std::vector<double> second;

    [[nodiscard]] double coincidence_fraction() const;
};

/// Diffusively rescaled sticky pair: t -> t delta^2, x -> x delta.
[[nodiscard]] ScaledPair sticky_brownian_pair(double kappa, double delta, double horizon_units, std::uint64_t seed,
                                              StickConvention c = StickConvention::sqrt2);

}  // namespace dydw
