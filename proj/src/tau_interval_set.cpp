#include "dydw/tau_interval_set.hpp"

#include <algorithm>
#include <cmath>

#include "dydw/core.hpp"

namespace dydw {

TauIntervalSet::TauIntervalSet(std::vector<Interval> intervals) {
    std::sort(intervals.begin(), intervals.end(), [](const Interval& l, const Interval& r) { return l.a < r.a; });
    for (const auto& iv : intervals) {
        require(iv.a <= iv.b, "TauIntervalSet: interval with a > b");
        if (iv.a == iv.b) continue;
        if (!iv_.empty() && iv.a <= iv_.back().b)
            iv_.back().b = std::max(iv_.back().b, iv.b);
        else
            iv_.push_back(iv);
    }
}

TauIntervalSet TauIntervalSet::full(double lo, double hi) {
    require(lo <= hi, "TauIntervalSet::full: reversed bounds");
    TauIntervalSet s;
    s.append(lo, hi);
    return s;
}

bool TauIntervalSet::contains(double tau) const {
    auto it = std::upper_bound(iv_.begin(), iv_.end(), tau, [](double t, const Interval& iv) { return t < iv.a; });
    if (it == iv_.begin()) return false;
    --it;
    return tau >= it->a && tau < it->b;
}

TauIntervalSet TauIntervalSet::intersect(const TauIntervalSet& other) const {
    TauIntervalSet out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < iv_.size() && j < other.iv_.size()) {
        const double a = std::max(iv_[i].a, other.iv_[j].a);
        const double b = std::min(iv_[i].b, other.iv_[j].b);
        if (a < b) out.append(a, b);
        if (iv_[i].b < other.iv_[j].b)
            ++i;
        else
            ++j;
    }
    return out;
}

void TauIntervalSet::append(double a, double b) {
    require(a <= b, "TauIntervalSet::append: reversed interval");
    if (a == b) return;
    if (!iv_.empty()) {
        require(a >= iv_.back().b, "TauIntervalSet::append: intervals out of order");
        if (a == iv_.back().b) {
            iv_.back().b = b;
            return;
        }
    }
    iv_.push_back({a, b});
}

double measure(const TauIntervalSet& s) {
    double m = 0.0;
    for (const auto& iv : s.intervals()) m += iv.b - iv.a;
    return m;
}

std::int64_t cover_count(const TauIntervalSet& s, double eps) {
    require(eps > 0.0, "cover_count: eps must be positive");
    const double w = 2.0 * eps;
    std::int64_t count = 0;
    std::int64_t last = -1;
    bool any = false;
    for (const auto& iv : s.intervals()) {
        auto first = static_cast<std::int64_t>(std::floor(iv.a / w));
        const auto past = static_cast<std::int64_t>(std::ceil(iv.b / w));
        if (any && first <= last) first = last + 1;
        if (past > first) {
            count += past - first;
            last = past - 1;
            any = true;
        }
    }
    return count;
}

}  // namespace dydw
