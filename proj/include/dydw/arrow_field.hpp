#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dydw/core.hpp"

namespace dydw {

struct Ring {
    double time = 0.0;
    int sign = 1;
};

struct RingSchedule {
    int initial_sign = 1;
    std::vector<Ring> rings;  // strictly increasing times in (0, tau_max]

    /// Sign in force at tau (right-continuous).
    [[nodiscard]] int sign_at(double tau) const noexcept;
    /// Index of the first ring with time > tau, or rings.size().
    [[nodiscard]] std::size_t next_ring_after(double tau) const noexcept;
};

/// Hand-built schedules replace generated ones at selected sites.
using ScheduleOverride = std::function<std::optional<RingSchedule>(const Site&)>;

/// Lazy, seed-deterministic dynamical arrow field on the even lattice.
///
/// Each site draws an initial sign and a rate-one Poisson clock whose rings
/// reset the arrow to a fresh uniform sign. All draws come from a Philox
/// stream keyed by (seed, x, t), so any site can be queried in any order.
class ArrowField {
public:
    ArrowField(std::uint64_t seed, double tau_max, ScheduleOverride override_fn = {});

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] double tau_max() const noexcept { return tau_max_; }

    /// Memoized full schedule on [0, tau_max].
    [[nodiscard]] const RingSchedule& schedule(const Site& z) const;
    /// Schedule generated without touching the cache.
    [[nodiscard]] RingSchedule generate(const Site& z) const;

    [[nodiscard]] int arrow_at(const Site& z, double tau) const;
    [[nodiscard]] std::vector<double> ring_times(const Site& z, double lo, double hi) const;
    /// +1 iff the arrow is +1 somewhere on [lo, hi].
    [[nodiscard]] int arrow_or_coupling(const Site& z, double lo, double hi) const;

    [[nodiscard]] std::size_t cached_sites() const;

private:
    struct SiteStream {
        std::uint32_t key0, key1, hi0, hi1;
    };
    [[nodiscard]] SiteStream stream_for(const Site& z) const noexcept;
    [[nodiscard]] static std::array<std::uint32_t, 4> block(const SiteStream& s, std::uint64_t r) noexcept;
    void check_site(const Site& z) const;
    void check_tau(double tau) const;

    std::uint64_t seed_;
    double tau_max_;
    ScheduleOverride override_;
    mutable std::mutex mu_;
    mutable std::unordered_map<Site, RingSchedule, SiteHash> cache_;
};

/// Marginal P(+1) of the sup-arrow over an interval of length len.
[[nodiscard]] double or_coupling_plus_probability(double len);

}  // namespace dydw
