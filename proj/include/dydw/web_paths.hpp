#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dydw/arrow_field.hpp"
#include "dydw/core.hpp"

namespace dydw {

/// A walk trajectory on the even lattice. positions[k] is the spatial
/// coordinate at time start.t + k, so positions.size() == steps.size() + 1.
struct WalkPath {
    Site start;
    std::vector<std::int8_t> steps;
    std::vector<std::int64_t> positions;

    WalkPath() { positions.push_back(0); }
    explicit WalkPath(Site s) : start(s) { positions.push_back(s.x); }

    [[nodiscard]] std::int64_t length() const noexcept { return static_cast<std::int64_t>(steps.size()); }
    [[nodiscard]] std::int64_t pos(std::int64_t k) const { return positions.at(static_cast<std::size_t>(k)); }
    [[nodiscard]] Site site(std::int64_t k) const { return {pos(k), start.t + k}; }
    void push(int sign) {
        steps.push_back(static_cast<std::int8_t>(sign));
        positions.push_back(positions.back() + sign);
    }
};

/// Lower boundary t -> -j - K sqrt(t).
struct Boundary {
    double j = 0.0;
    double K = 0.0;

    [[nodiscard]] double value(double t) const;
    /// Smallest integer position that counts as >= value(t).
    [[nodiscard]] std::int64_t threshold(std::int64_t t) const;
};

/// Comparison slack for sqrt-boundaries evaluated at integer times.
inline constexpr double kBoundarySlack = 0x1.0p-40;

/// ceil(v) with ties and near-ties resolved upward-inclusive.
[[nodiscard]] std::int64_t ceil_with_slack(double v);
/// floor(v) with ties and near-ties resolved downward-inclusive.
[[nodiscard]] std::int64_t floor_with_slack(double v);

[[nodiscard]] WalkPath trace(const ArrowField& field, double tau, Site start, std::int64_t n_steps);
[[nodiscard]] WalkPath trace_drifted(const ArrowField& field, double lo, double hi, Site start,
                                     std::int64_t n_steps);

[[nodiscard]] std::optional<std::int64_t> coalescence_time(const WalkPath& p, const WalkPath& q);

[[nodiscard]] bool stays_above(const WalkPath& path, const Boundary& b);

/// Concatenated left boundaries of the box hierarchy for parameter gamma.
[[nodiscard]] double boundary_gamma(double gamma, double t);

}  // namespace dydw
