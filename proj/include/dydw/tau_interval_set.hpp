#pragma once

#include <cstdint>
#include <vector>

namespace dydw {

struct Interval {
    double a = 0.0;
    double b = 0.0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of disjoint, non-adjacent half-open intervals [a, b), sorted.
class TauIntervalSet {
public:
    TauIntervalSet() = default;
    explicit TauIntervalSet(std::vector<Interval> intervals);

    static TauIntervalSet full(double lo, double hi);

    [[nodiscard]] const std::vector<Interval>& intervals() const noexcept { return iv_; }
    [[nodiscard]] bool empty() const noexcept { return iv_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return iv_.size(); }
    [[nodiscard]] bool contains(double tau) const;
    [[nodiscard]] TauIntervalSet intersect(const TauIntervalSet& other) const;

    /// Appends [a, b) with a at or after the current right end; merges adjacency.
    void append(double a, double b);

    friend bool operator==(const TauIntervalSet&, const TauIntervalSet&) = default;

private:
    std::vector<Interval> iv_;
};

[[nodiscard]] double measure(const TauIntervalSet& s);
/// Number of grid cells [2 eps i, 2 eps (i + 1)) meeting s.
[[nodiscard]] std::int64_t cover_count(const TauIntervalSet& s, double eps);

}  // namespace dydw
