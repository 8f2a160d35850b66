#include "dydw/arrow_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dydw/rng.hpp"

namespace dydw {

int RingSchedule::sign_at(double tau) const noexcept {
    const std::size_t i = next_ring_after(tau);
    return i == 0 ? initial_sign : rings[i - 1].sign;
}

std::size_t RingSchedule::next_ring_after(double tau) const noexcept {
    auto it = std::upper_bound(rings.begin(), rings.end(), tau,
                               [](double t, const Ring& r) { return t < r.time; });
    return static_cast<std::size_t>(it - rings.begin());
}

ArrowField::ArrowField(std::uint64_t seed, double tau_max, ScheduleOverride override_fn)
    : seed_(seed), tau_max_(tau_max), override_(std::move(override_fn)) {
    require(std::isfinite(tau_max) && tau_max > 0.0, "ArrowField: tau_max must be positive and finite");
}

void ArrowField::check_site(const Site& z) const {
    if (!z.is_even())
        throw PreconditionError("site (" + std::to_string(z.x) + "," + std::to_string(z.t) +
                                ") is not in the even lattice");
}

void ArrowField::check_tau(double tau) const {
    if (!(tau >= 0.0 && tau <= tau_max_))
        throw PreconditionError("tau " + std::to_string(tau) + " outside [0, tau_max]");
}

ArrowField::SiteStream ArrowField::stream_for(const Site& z) const noexcept {
    const auto ux = static_cast<std::uint64_t>(z.x);
    const auto ut = static_cast<std::uint64_t>(z.t);
    const Philox4x32::Counter c{static_cast<std::uint32_t>(ux), static_cast<std::uint32_t>(ux >> 32),
                                static_cast<std::uint32_t>(ut), static_cast<std::uint32_t>(ut >> 32)};
    const Philox4x32::Key k{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = Philox4x32::apply(c, k);
    return {out[0], out[1], out[2], out[3]};
}

std::array<std::uint32_t, 4> ArrowField::block(const SiteStream& s, std::uint64_t r) noexcept {
    const Philox4x32::Counter c{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32), s.hi0, s.hi1};
    return Philox4x32::apply(c, {s.key0, s.key1});
}

namespace {

struct RingDraw {
    double gap;
    int sign;
};

inline RingDraw ring_draw(const std::array<std::uint32_t, 4>& w) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
    return {-std::log(uniform_open_closed(bits)), (w[2] >> 31) ? 1 : -1};
}

inline int initial_sign(const std::array<std::uint32_t, 4>& w) noexcept { return (w[0] >> 31) ? 1 : -1; }

void validate_override(const RingSchedule& s, double tau_max) {
    require(s.initial_sign == 1 || s.initial_sign == -1, "override schedule: initial sign must be +-1");
    double prev = -1.0;
    for (const auto& r : s.rings) {
        require(r.sign == 1 || r.sign == -1, "override schedule: reset sign must be +-1");
        require(r.time > prev && r.time >= 0.0 && r.time <= tau_max,
                "override schedule: ring times must be strictly increasing within [0, tau_max]");
        prev = r.time;
    }
}

}  // namespace

RingSchedule ArrowField::generate(const Site& z) const {
    check_site(z);
    if (override_) {
        if (auto s = override_(z)) {
            validate_override(*s, tau_max_);
            return *s;
        }
    }
    const SiteStream st = stream_for(z);
    RingSchedule out;
    out.initial_sign = initial_sign(block(st, 0));
    double t = 0.0;
    for (std::uint64_t r = 1;; ++r) {
        const RingDraw d = ring_draw(block(st, r));
        t += d.gap;
        if (t > tau_max_) break;
        out.rings.push_back({t, d.sign});
    }
    return out;
}

const RingSchedule& ArrowField::schedule(const Site& z) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(z);
        if (it != cache_.end()) return it->second;
    }
    RingSchedule s = generate(z);
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.try_emplace(z, std::move(s)).first->second;
}

int ArrowField::arrow_at(const Site& z, double tau) const {
    check_site(z);
    check_tau(tau);
    if (override_) {
        if (auto s = override_(z)) {
            validate_override(*s, tau_max_);
            return s->sign_at(tau);
        }
    }
    // Streams the clock up to tau without materializing the schedule.
    const SiteStream st = stream_for(z);
    int sign = initial_sign(block(st, 0));
    double t = 0.0;
    for (std::uint64_t r = 1;; ++r) {
        const RingDraw d = ring_draw(block(st, r));
        t += d.gap;
        if (t > tau || t > tau_max_) break;
        sign = d.sign;
    }
    return sign;
}

std::vector<double> ArrowField::ring_times(const Site& z, double lo, double hi) const {
    require(lo <= hi, "ring_times: reversed interval");
    check_tau(lo);
    check_tau(hi);
    const RingSchedule& s = schedule(z);
    std::vector<double> out;
    for (const auto& r : s.rings)
        if (r.time >= lo && r.time < hi) out.push_back(r.time);
    return out;
}

int ArrowField::arrow_or_coupling(const Site& z, double lo, double hi) const {
    require(lo <= hi, "arrow_or_coupling: reversed interval");
    check_tau(lo);
    check_tau(hi);
    const RingSchedule s = generate(z);
    std::size_t i = s.next_ring_after(lo);
    int sign = i == 0 ? s.initial_sign : s.rings[i - 1].sign;
    if (sign == 1) return 1;
    for (; i < s.rings.size() && s.rings[i].time <= hi; ++i)
        if (s.rings[i].sign == 1) return 1;
    return -1;
}

std::size_t ArrowField::cached_sites() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
}

double or_coupling_plus_probability(double len) {
    require(len >= 0.0, "interval length must be nonnegative");
    return 1.0 - 0.5 * std::exp(-0.5 * len);
}

}  // namespace dydw
