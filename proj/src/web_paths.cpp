#include "dydw/web_paths.hpp"

#include <cmath>

#include "dydw/boxes_events.hpp"

namespace dydw {

double Boundary::value(double t) const { return -j - K * std::sqrt(t); }

std::int64_t Boundary::threshold(std::int64_t t) const {
    return ceil_with_slack(value(static_cast<double>(t)));
}

std::int64_t ceil_with_slack(double v) { return static_cast<std::int64_t>(std::ceil(v - kBoundarySlack)); }

std::int64_t floor_with_slack(double v) { return static_cast<std::int64_t>(std::floor(v + kBoundarySlack)); }

WalkPath trace(const ArrowField& field, double tau, Site start, std::int64_t n_steps) {
    require(n_steps >= 0, "trace: n_steps must be nonnegative");
    require(start.is_even(), "trace: start site must be in the even lattice");
    WalkPath p(start);
    p.steps.reserve(static_cast<std::size_t>(n_steps));
    p.positions.reserve(static_cast<std::size_t>(n_steps) + 1);
    for (std::int64_t k = 0; k < n_steps; ++k)
        p.push(field.arrow_at({p.positions.back(), start.t + k}, tau));
    return p;
}

WalkPath trace_drifted(const ArrowField& field, double lo, double hi, Site start, std::int64_t n_steps) {
    require(n_steps >= 0, "trace_drifted: n_steps must be nonnegative");
    require(start.is_even(), "trace_drifted: start site must be in the even lattice");
    WalkPath p(start);
    for (std::int64_t k = 0; k < n_steps; ++k)
        p.push(field.arrow_or_coupling({p.positions.back(), start.t + k}, lo, hi));
    return p;
}

std::optional<std::int64_t> coalescence_time(const WalkPath& p, const WalkPath& q) {
    require(p.start.t == q.start.t, "coalescence_time: paths start at different time levels");
    require(p.length() == q.length(), "coalescence_time: paths have different lengths");
    for (std::int64_t k = 0; k <= p.length(); ++k)
        if (p.pos(k) == q.pos(k)) return k;
    return std::nullopt;
}

bool stays_above(const WalkPath& path, const Boundary& b) {
    for (std::int64_t k = 0; k <= path.length(); ++k)
        if (path.pos(k) < b.threshold(k)) return false;
    return true;
}

double boundary_gamma(double gamma, double t) {
    require(gamma > 2.0, "boundary_gamma: gamma must exceed 2");
    require(t >= 0.0, "boundary_gamma: t must be nonnegative");
    BoxSpec box = first_box();
    for (int k = 0;; ++k) {
        BoxSpec next = next_box(gamma, box);
        if (static_cast<long double>(next.t) > t) return static_cast<double>(box.x - box.d);
        box = next;
    }
}

}  // namespace dydw
