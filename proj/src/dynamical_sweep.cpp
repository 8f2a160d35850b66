#include "dydw/dynamical_sweep.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "dydw/numerics.hpp"
#include "dydw/web_paths.hpp"

namespace dydw {

SweepStats& SweepStats::operator+=(const SweepStats& o) {
    events += o.events;
    flips += o.flips;
    steps_traced += o.steps_traced;
    exposure += o.exposure;
    windows += o.windows;
    return *this;
}

namespace {

struct Event {
    double time;
    std::uint32_t path;
    std::uint32_t gen;
    std::int64_t step;
    std::uint32_t ring;
};

struct EventLater {
    bool operator()(const Event& l, const Event& r) const noexcept {
        if (l.time != r.time) return l.time > r.time;
        if (l.path != r.path) return l.path > r.path;
        return l.step > r.step;
    }
};

struct PathState {
    const PathSpec* spec = nullptr;
    std::vector<std::int64_t> pos;
    std::vector<std::uint32_t> gen;
    std::vector<double> since;
    std::int64_t end = 0;
    Verdict outcome = Verdict::reject;
};

/// One window [lo, hi) of an event-driven sweep.
class WindowSweep {
public:
    WindowSweep(const ArrowField& field, const PredicateSpec& spec, double lo, double hi, SweepStats& stats,
                const SweepOptions& opts)
        : field_(field), lo_(lo), hi_(hi), stats_(stats), opts_(opts) {
        paths_.resize(spec.paths.size());
        for (std::size_t p = 0; p < spec.paths.size(); ++p) {
            PathState& ps = paths_[p];
            ps.spec = &spec.paths[p];
            require(ps.spec->n_steps >= 0, "sweep: path horizon must be nonnegative");
            require(ps.spec->start.is_even(), "sweep: path start must be in the even lattice");
            const auto n = static_cast<std::size_t>(ps.spec->n_steps);
            ps.pos.assign(n + 1, 0);
            ps.gen.assign(n, 0);
            ps.since.assign(n, lo);
            ps.pos[0] = ps.spec->start.x;
        }
    }

    void run(TauIntervalSet& out) {
        for (std::size_t p = 0; p < paths_.size(); ++p) trace_from(static_cast<std::uint32_t>(p), 0, lo_);
        bool state = holds();
        double start = lo_;
        while (!queue_.empty()) {
            const double t = queue_.top().time;
            while (!queue_.empty() && queue_.top().time == t) {
                const Event e = queue_.top();
                queue_.pop();
                process(e);
            }
            const bool now = holds();
            if (now != state) {
                if (state) out.append(start, t);
                start = t;
                state = now;
            }
        }
        if (state) out.append(start, hi_);
        for (const auto& ps : paths_)
            for (std::int64_t k = 0; k < ps.end; ++k) stats_.exposure += hi_ - ps.since[static_cast<std::size_t>(k)];
    }

private:
    [[nodiscard]] bool holds() const {
        for (const auto& ps : paths_)
            if (ps.outcome != Verdict::accept) return false;
        return true;
    }

    void count_step() {
        ++stats_.steps_traced;
        if (opts_.max_path_steps > 0 && stats_.steps_traced > opts_.max_path_steps)
            throw BudgetError("sweep: path-step budget of " + std::to_string(opts_.max_path_steps) + " exceeded");
    }

    void retire(PathState& ps, std::int64_t k, double tau) {
        stats_.exposure += tau - ps.since[static_cast<std::size_t>(k)];
    }

    /// Marks step k as newly on-path at tau, queues its next ring and
    /// returns the arrow it reads.
    int visit(std::uint32_t p, std::int64_t k, double tau) {
        PathState& ps = paths_[p];
        const auto ku = static_cast<std::size_t>(k);
        ++ps.gen[ku];
        ps.since[ku] = tau;
        const RingSchedule& s = field_.schedule({ps.pos[ku], ps.spec->start.t + k});
        const std::size_t r = s.next_ring_after(tau);
        if (r < s.rings.size() && s.rings[r].time < hi_)
            queue_.push({s.rings[r].time, p, ps.gen[ku], k, static_cast<std::uint32_t>(r)});
        count_step();
        return r == 0 ? s.initial_sign : s.rings[r - 1].sign;
    }

    /// Settles the path's fate at k given pos[k]; returns false when traced further is needed.
    bool settle(PathState& ps, std::int64_t k) {
        const Verdict v = ps.spec->classify ? ps.spec->classify(k, ps.pos[static_cast<std::size_t>(k)]) : Verdict::proceed;
        if (v != Verdict::proceed) {
            ps.end = k;
            ps.outcome = v;
            return true;
        }
        if (k == ps.spec->n_steps) {
            ps.end = k;
            ps.outcome = ps.spec->accept_at_end ? Verdict::accept : Verdict::reject;
            return true;
        }
        return false;
    }

    void trace_from(std::uint32_t p, std::int64_t k, double tau) {
        PathState& ps = paths_[p];
        while (!settle(ps, k)) {
            const int sign = visit(p, k, tau);
            ps.pos[static_cast<std::size_t>(k + 1)] = ps.pos[static_cast<std::size_t>(k)] + sign;
            ++k;
        }
    }

    void process(const Event& e) {
        PathState& ps = paths_[e.path];
        const auto i = static_cast<std::size_t>(e.step);
        if (e.step >= ps.end || ps.gen[i] != e.gen) return;
        ++stats_.events;
        const Site z{ps.pos[i], ps.spec->start.t + e.step};
        const RingSchedule& s = field_.schedule(z);
        const Ring& ring = s.rings[e.ring];
        if (e.ring + 1 < s.rings.size() && s.rings[e.ring + 1].time < hi_)
            queue_.push({s.rings[e.ring + 1].time, e.path, e.gen, e.step, e.ring + 1});
        const int current = static_cast<int>(ps.pos[i + 1] - ps.pos[i]);
        if (ring.sign == current) return;
        ++stats_.flips;
        retrace(e.path, e.step, ring.sign, ring.time);
    }

    void retrace(std::uint32_t p, std::int64_t i, int sign, double tau) {
        PathState& ps = paths_[p];
        const std::int64_t old_end = ps.end;
        const Verdict old_outcome = ps.outcome;
        std::int64_t k = i + 1;
        std::int64_t next = ps.pos[static_cast<std::size_t>(i)] + sign;
        for (;;) {
            const auto ku = static_cast<std::size_t>(k);
            if (k <= old_end && ps.pos[ku] == next) {
                // Rejoined the old trajectory: everything from k on is unchanged.
                ps.end = old_end;
                ps.outcome = old_outcome;
                return;
            }
            if (k < old_end) retire(ps, k, tau);
            ps.pos[ku] = next;
            if (settle(ps, k)) {
                for (std::int64_t r = k + 1; r < old_end; ++r) retire(ps, r, tau);
                return;
            }
            next = ps.pos[ku] + visit(p, k, tau);
            ++k;
        }
    }

    const ArrowField& field_;
    double lo_;
    double hi_;
    SweepStats& stats_;
    const SweepOptions& opts_;
    std::vector<PathState> paths_;
    std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
};

}  // namespace

TauIntervalSet sweep_predicate(const ArrowField& field, const PredicateSpec& spec, const TauIntervalSet& windows,
                               SweepStats* stats, const SweepOptions& opts) {
    SweepStats local;
    SweepStats& st = stats ? *stats : local;
    TauIntervalSet out;
    for (const auto& w : windows.intervals()) {
        require(w.a >= 0.0 && w.b <= field.tau_max(), "sweep: window outside the field's generated tau range");
        ++st.windows;
        WindowSweep(field, spec, w.a, w.b, st, opts).run(out);
    }
    return out;
}

TauIntervalSet sweep_predicate(const ArrowField& field, const PredicateSpec& spec, double tau_max,
                               SweepStats* stats, const SweepOptions& opts) {
    require(tau_max > 0.0, "sweep: tau_max must be positive");
    require(tau_max <= field.tau_max(), "sweep: tau_max exceeds the field's generated tau range");
    return sweep_predicate(field, spec, TauIntervalSet::full(0.0, tau_max), stats, opts);
}

bool evaluate_predicate(const ArrowField& field, const PredicateSpec& spec, double tau) {
    for (const auto& ps : spec.paths) {
        std::int64_t x = ps.start.x;
        Verdict v = Verdict::proceed;
        for (std::int64_t k = 0;; ++k) {
            v = ps.classify ? ps.classify(k, x) : Verdict::proceed;
            if (v != Verdict::proceed) break;
            if (k == ps.n_steps) {
                v = ps.accept_at_end ? Verdict::accept : Verdict::reject;
                break;
            }
            x += field.arrow_at({x, ps.start.t + k}, tau);
        }
        if (v != Verdict::accept) return false;
    }
    return true;
}

PathSpec box_event_spec(const BoxSpec& box, const BoxSpec& next) {
    require(next.k == box.k + 1, "box_event_spec: boxes must be consecutive");
    const Site z = box.z_bar();
    const std::int64_t left = z.x - static_cast<std::int64_t>(box.d);
    const Site zn = next.z_bar();
    const auto n = static_cast<std::int64_t>(box.height());
    PathSpec ps;
    ps.start = z;
    ps.n_steps = n;
    ps.classify = [left, n, target = zn.x](std::int64_t k, std::int64_t pos) {
        if (pos <= left) return Verdict::reject;
        if (k == n) return pos > target ? Verdict::accept : Verdict::reject;
        return Verdict::proceed;
    };
    return ps;
}

PredicateSpec confinement_spec(double j, double K1, double K2, std::int64_t horizon) {
    require(K1 > 0.0 && K2 > 0.0, "confinement: K1 and K2 must be positive");
    require(horizon >= 0, "confinement: horizon must be nonnegative");
    PathSpec ps;
    ps.start = {0, 0};
    ps.n_steps = horizon;
    ps.classify = [j, K1, K2](std::int64_t k, std::int64_t pos) {
        const double r = std::sqrt(static_cast<double>(k));
        if (pos < ceil_with_slack(-j - K1 * r) || pos > floor_with_slack(j + K2 * r)) return Verdict::reject;
        return Verdict::proceed;
    };
    return {{ps}};
}

PredicateSpec exceedance_spec(std::int64_t level, std::int64_t horizon) {
    require(level >= 1, "exceedance: level must be positive");
    require(horizon >= 0, "exceedance: horizon must be nonnegative");
    PathSpec ps;
    ps.start = {0, 0};
    ps.n_steps = horizon;
    ps.accept_at_end = false;
    ps.classify = [level](std::int64_t k, std::int64_t pos) {
        if (pos >= level) return Verdict::accept;
        if (k > 0 && pos <= 0) return Verdict::reject;
        return Verdict::proceed;
    };
    return {{ps}};
}

PredicateSpec lower_barrier_spec(std::int64_t level, std::int64_t horizon) {
    require(level >= 1, "lower barrier: level must be positive");
    require(horizon >= 0, "lower barrier: horizon must be nonnegative");
    PathSpec ps;
    ps.start = {0, 0};
    ps.n_steps = horizon;
    ps.classify = [level](std::int64_t, std::int64_t pos) {
        return pos <= -level ? Verdict::reject : Verdict::proceed;
    };
    return {{ps}};
}

PredicateSpec En_spec(double K, int n_boxes) {
    require(n_boxes >= 0, "E_n: n_boxes must be nonnegative");
    const double g = gamma_of_K(K).value;
    const auto boxes = box_sequence(g, n_boxes + 1);
    PredicateSpec spec;
    for (int k = 0; k <= n_boxes; ++k)
        spec.paths.push_back(box_event_spec(boxes[static_cast<std::size_t>(k)], boxes[static_cast<std::size_t>(k) + 1]));
    return spec;
}

std::vector<TauIntervalSet> exceptional_sets_upto(const ArrowField& field, double K, int n_boxes, double tau_max,
                                                  SweepStats* stats, const SweepOptions& opts) {
    require(K > 0.0, "E_n: K must be positive");
    require(tau_max > 0.0 && tau_max <= field.tau_max(), "E_n: tau_max outside the field's generated range");
    const PredicateSpec all = En_spec(K, n_boxes);
    std::vector<TauIntervalSet> out;
    TauIntervalSet cur = TauIntervalSet::full(0.0, tau_max);
    for (const auto& path : all.paths) {
        if (!cur.empty()) cur = sweep_predicate(field, PredicateSpec{{path}}, cur, stats, opts);
        out.push_back(cur);
    }
    return out;
}

TauIntervalSet exceptional_set_En(const ArrowField& field, double K, int n_boxes, double tau_max, SweepStats* stats,
                                  const SweepOptions& opts) {
    return exceptional_sets_upto(field, K, n_boxes, tau_max, stats, opts).back();
}

TauIntervalSet confinement_sweep(const ArrowField& field, double j, double K1, double K2, std::int64_t horizon,
                                 double tau_max, SweepStats* stats, const SweepOptions& opts) {
    return sweep_predicate(field, confinement_spec(j, K1, K2, horizon), tau_max, stats, opts);
}

}  // namespace dydw
