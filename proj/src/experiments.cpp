#include "dydw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "dydw/arrow_field.hpp"
#include "dydw/boxes_events.hpp"
#include "dydw/dynamical_sweep.hpp"
#include "dydw/numerics.hpp"
#include "dydw/parallel.hpp"
#include "dydw/rng.hpp"
#include "dydw/stats.hpp"
#include "dydw/sticky_pair.hpp"
#include "dydw/web_paths.hpp"

namespace dydw {

void ExperimentReport::gate(std::string gate_name, bool ok, std::string detail) {
    gates.push_back({std::move(gate_name), ok ? GateStatus::pass : GateStatus::fail, std::move(detail)});
}

void ExperimentReport::skip(std::string gate_name, std::string detail) {
    gates.push_back({std::move(gate_name), GateStatus::skipped, std::move(detail)});
}

bool ExperimentReport::passed() const {
    return std::none_of(gates.begin(), gates.end(), [](const Gate& g) { return g.status == GateStatus::fail; });
}

ojson ExperimentReport::to_json() const {
    ojson j;
    j["experiment"] = name;
    j["seed"] = seed;
    j["replicates"] = replicates;
    j["config"] = config;
    j["summary"] = summary;
    j["cells"] = cells;
    j["fits"] = fits;
    ojson g = ojson::array();
    for (const auto& x : gates) {
        const char* st = x.status == GateStatus::pass ? "pass" : x.status == GateStatus::fail ? "fail" : "skipped";
        g.push_back({{"name", x.name}, {"status", st}, {"detail", x.detail}});
    }
    j["gates"] = g;
    j["passed"] = passed();
    return j;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string sigma_detail(double a, double b, double se) {
    return fmt(a) + " vs " + fmt(b) + " (3 SE = " + fmt(3.0 * se) + ")";
}

std::uint64_t double_stream(double v, std::uint64_t salt) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    return splitmix64(bits ^ splitmix64(salt));
}

/// Box event {min > -d, end > d} over d^2 steps for both walks of a sticky pair.
std::pair<bool, bool> sticky_box_events(double s, std::int64_t d, Engine& eng) {
    const std::int64_t n = d * d;
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t shared = 0;
    bool alive_a = true;
    bool alive_b = true;
    std::int64_t budget = sample_gap(s, eng);
    std::uint64_t bits = 0;
    int left = 0;
    const auto coin = [&]() -> std::int64_t {
        if (left == 0) {
            bits = eng();
            left = 64;
        }
        --left;
        const auto c = static_cast<std::int64_t>(bits & 1U);
        bits >>= 1;
        return 2 * c - 1;
    };
    for (std::int64_t t = 1; t <= n; ++t) {
        if (a == b && budget > 0) {
            --budget;
            shared += coin();
        } else {
            a += coin();
            b += coin();
            if (a == b) budget = sample_gap(s, eng);
        }
        if (a + shared <= -d) alive_a = false;
        if (b + shared <= -d) alive_b = false;
        if (!alive_a && !alive_b) return {false, false};
    }
    return {alive_a && a + shared > d, alive_b && b + shared > d};
}

}  // namespace

ExperimentReport correlation_decay(const CorrelationDecayConfig& cfg, std::uint64_t seed, int workers) {
    require(!cfg.delta_grid.empty() && !cfg.s_grid.empty(), "correlation_decay: grids must be nonempty");
    require(cfg.replicates >= 2, "correlation_decay: need at least two replicates");
    ExperimentReport rep;
    rep.name = "correlation_decay";
    rep.seed = seed;
    rep.replicates = cfg.replicates;
    rep.config = {{"delta_grid", cfg.delta_grid}, {"s_grid", cfg.s_grid}, {"replicates", cfg.replicates}};
    const auto R = cfg.replicates;
    const double pa_limit = brownian_PA();
    std::vector<double> fx;
    std::vector<double> fy;
    double min_delta_ratio = std::numeric_limits<double>::infinity();
    double min_cell_excess = 0.0;
    double min_cell_se = 0.0;
    for (double delta : cfg.delta_grid) {
        require(delta > 0.0 && delta <= 1.0, "correlation_decay: delta must lie in (0, 1]");
        const auto d = std::max<std::int64_t>(1, std::llround(1.0 / delta));
        const double p_lattice = exact_PA_side(d);
        std::vector<double> marg_all;
        for (double s : cfg.s_grid) {
            require(s >= 0.0, "correlation_decay: s must be nonnegative");
            std::vector<std::uint8_t> ia(static_cast<std::size_t>(R));
            std::vector<std::uint8_t> ib(static_cast<std::size_t>(R));
            const std::uint64_t stream = double_stream(delta, 11);
            parallel_for(R, workers, [&](std::int64_t i) {
                Engine eng(derive_seed(seed, stream, static_cast<std::uint64_t>(i)));
                const auto [x, y] = sticky_box_events(s, d, eng);
                ia[static_cast<std::size_t>(i)] = x;
                ib[static_cast<std::size_t>(i)] = y;
            });
            double sa = 0.0;
            double sj = 0.0;
            for (std::int64_t i = 0; i < R; ++i) {
                sa += ia[static_cast<std::size_t>(i)] + ib[static_cast<std::size_t>(i)];
                sj += ia[static_cast<std::size_t>(i)] * ib[static_cast<std::size_t>(i)];
            }
            const auto n = static_cast<double>(R);
            const double p = sa / (2.0 * n);
            const double joint = sj / n;
            const double excess = joint - p * p;
            std::vector<double> psi(static_cast<std::size_t>(R));
            std::vector<double> marg(static_cast<std::size_t>(R));
            for (std::int64_t i = 0; i < R; ++i) {
                const double a = ia[static_cast<std::size_t>(i)];
                const double b = ib[static_cast<std::size_t>(i)];
                psi[static_cast<std::size_t>(i)] = a * b - p * (a + b);
                marg[static_cast<std::size_t>(i)] = 0.5 * (a + b);
                marg_all.push_back(a);
                marg_all.push_back(b);
            }
            const double se = mean_se(psi).se;
            const double ratio = s > 0.0 ? delta / s : std::numeric_limits<double>::infinity();
            rep.cells.push_back({{"delta", delta},
                                 {"d", d},
                                 {"s", s},
                                 {"Delta", s > 0.0 ? ojson(ratio) : ojson(nullptr)},
                                 {"p_marginal", p},
                                 {"p_marginal_se", mean_se(marg).se},
                                 {"p_joint", joint},
                                 {"excess", excess},
                                 {"excess_se", se},
                                 {"p_lattice_exact", p_lattice},
                                 {"replicates", R},
                                 {"seed", seed}});
            if (s == 0.0) {
                rep.gate("s0_full_correlation_delta_" + fmt(delta), excess > 0.0 && std::abs(joint - p) == 0.0,
                         "excess " + fmt(excess) + ", p - p^2 = " + fmt(p - p * p));
            } else {
                if (excess > 5.0 / n) {
                    fx.push_back(std::log(ratio));
                    fy.push_back(std::log(excess));
                }
                if (ratio < min_delta_ratio) {
                    min_delta_ratio = ratio;
                    min_cell_excess = excess;
                    min_cell_se = se;
                }
            }
        }
        const MeanSe m = mean_se(marg_all);
        // Pairs are correlated, so the SE of the pooled marginal is widened by sqrt(2).
        const double se_m = m.se * std::sqrt(2.0);
        rep.gate("marginal_vs_lattice_delta_" + fmt(delta), within_se(m.mean, se_m, p_lattice, 0.0),
                 sigma_detail(m.mean, p_lattice, se_m));
        if (std::abs(p_lattice - pa_limit) < se_m)
            rep.gate("marginal_vs_brownian_delta_" + fmt(delta), within_se(m.mean, se_m, pa_limit, 0.0),
                     sigma_detail(m.mean, pa_limit, se_m));
        else
            rep.skip("marginal_vs_brownian_delta_" + fmt(delta),
                     "lattice bias " + fmt(p_lattice - pa_limit) + " exceeds one SE; use smaller delta");
    }
    if (fx.size() >= 2 && std::adjacent_find(fx.begin(), fx.end(), std::not_equal_to<>()) != fx.end()) {
        const LineFit f = fit_line(fx, fy);
        rep.fits.push_back({{"quantity", "log excess vs log Delta"},
                            {"slope_a", f.slope},
                            {"slope_se", f.slope_se},
                            {"intercept", f.intercept},
                            {"r2", f.r2},
                            {"points", f.points}});
        rep.gate("fitted_exponent_positive", f.slope > 0.0, "a = " + fmt(f.slope) + " over " + std::to_string(f.points) + " cells");
    } else {
        rep.fits.push_back({{"quantity", "log excess vs log Delta"}, {"degenerate", true}, {"points", fx.size()}});
        rep.gate("fitted_exponent_positive", false, "degenerate fit: fewer than two usable cells");
    }
    if (std::isfinite(min_delta_ratio))
        rep.gate("excess_vanishes_at_smallest_Delta", std::abs(min_cell_excess) <= 3.0 * min_cell_se,
                 "Delta = " + fmt(min_delta_ratio) + ": " + sigma_detail(min_cell_excess, 0.0, min_cell_se));
    rep.summary = {{"brownian_limit", pa_limit}};
    return rep;
}

ExperimentReport sticky_equivalence(const StickyEquivalenceConfig& cfg, std::uint64_t seed, int workers) {
    require(cfg.s >= 0.0, "sticky_equivalence: s must be nonnegative");
    require(cfg.horizon >= 1 && cfg.replicates >= 2, "sticky_equivalence: invalid horizon or replicates");
    ExperimentReport rep;
    rep.name = "sticky_equivalence";
    rep.seed = seed;
    rep.replicates = cfg.replicates;
    rep.config = {{"s", cfg.s}, {"horizon", cfg.horizon}, {"replicates", cfg.replicates},
                  {"checkpoints", cfg.checkpoints}, {"decorrelated_s", cfg.decorrelated_s}};
    std::vector<std::int64_t> ts;
    for (auto t : cfg.checkpoints)
        if (t >= 1 && t <= cfg.horizon) ts.push_back(t);
    if (std::find(ts.begin(), ts.end(), cfg.horizon) == ts.end()) ts.push_back(cfg.horizon);
    const std::size_t T = ts.size();
    const auto R = static_cast<std::size_t>(cfg.replicates);
    // Per replicate and method: coincidence at each checkpoint, then X_H Y_H, X_H^2, Y_H^2.
    std::vector<double> direct(R * (T + 3));
    std::vector<double> sticky(R * (T + 3));
    const double tau_max = cfg.s > 0.0 ? cfg.s : 1.0;
    parallel_for(cfg.replicates, workers, [&](std::int64_t i) {
        const auto iu = static_cast<std::size_t>(i);
        const ArrowField field(derive_seed(seed, 1, iu), tau_max);
        const auto [p, q] = direct_pair(field, 0.0, cfg.s, cfg.horizon);
        const StickyPairSample sp = sample_sticky_pair(cfg.s, cfg.horizon, derive_seed(seed, 2, iu));
        double* dr = &direct[iu * (T + 3)];
        double* sr = &sticky[iu * (T + 3)];
        for (std::size_t c = 0; c < T; ++c) {
            const auto t = static_cast<std::size_t>(ts[c]);
            dr[c] = p.positions[t] == q.positions[t] ? 1.0 : 0.0;
            sr[c] = sp.S_tau[t] == sp.S_tau_prime[t] ? 1.0 : 0.0;
        }
        const auto H = static_cast<std::size_t>(cfg.horizon);
        const auto dx = static_cast<double>(p.positions[H]);
        const auto dy = static_cast<double>(q.positions[H]);
        const auto sx = static_cast<double>(sp.S_tau[H]);
        const auto sy = static_cast<double>(sp.S_tau_prime[H]);
        dr[T] = dx * dy;
        dr[T + 1] = dx * dx;
        dr[T + 2] = dy * dy;
        sr[T] = sx * sy;
        sr[T + 1] = sx * sx;
        sr[T + 2] = sy * sy;
    });
    const auto column = [&](const std::vector<double>& v, std::size_t c) {
        std::vector<double> out(R);
        for (std::size_t i = 0; i < R; ++i) out[i] = v[i * (T + 3) + c];
        return out;
    };
    for (std::size_t c = 0; c < T; ++c) {
        const MeanSe a = mean_se(column(direct, c));
        const MeanSe b = mean_se(column(sticky, c));
        rep.cells.push_back({{"t", ts[c]},
                             {"p_direct", a.mean},
                             {"se_direct", a.se},
                             {"p_sticky", b.mean},
                             {"se_sticky", b.se},
                             {"replicates", cfg.replicates},
                             {"seed", seed}});
        rep.gate("coincidence_t" + std::to_string(ts[c]), within_se(a.mean, a.se, b.mean, b.se),
                 sigma_detail(a.mean, b.mean, std::hypot(a.se, b.se)));
        if (cfg.s == 0.0)
            rep.gate("identical_paths_t" + std::to_string(ts[c]), a.mean == 1.0 && b.mean == 1.0,
                     "coincidence " + fmt(a.mean) + " / " + fmt(b.mean));
    }
    const MeanSe cd = mean_se(column(direct, T));
    const MeanSe cs = mean_se(column(sticky, T));
    rep.gate("endpoint_covariance", within_se(cd.mean, cd.se, cs.mean, cs.se),
             sigma_detail(cd.mean, cs.mean, std::hypot(cd.se, cs.se)));
    const auto H = static_cast<double>(cfg.horizon);
    const char* names[2] = {"direct", "sticky"};
    const std::vector<double>* srcs[2] = {&direct, &sticky};
    for (int m = 0; m < 2; ++m)
        for (std::size_t c = T + 1; c <= T + 2; ++c) {
            const MeanSe v = mean_se(column(*srcs[m], c));
            rep.gate(std::string("marginal_variance_") + names[m] + (c == T + 1 ? "_tau" : "_tau_prime"),
                     within_se(v.mean, v.se, H, 0.0), sigma_detail(v.mean, H, v.se));
        }
    if (cfg.s >= cfg.decorrelated_s) {
        rep.gate("decorrelated_direct", within_se(cd.mean, cd.se, 0.0, 0.0), sigma_detail(cd.mean, 0.0, cd.se));
        rep.gate("decorrelated_sticky", within_se(cs.mean, cs.se, 0.0, 0.0), sigma_detail(cs.mean, 0.0, cs.se));
    }
    rep.summary = {{"endpoint_cov_direct", cd.mean}, {"endpoint_cov_direct_se", cd.se},
                   {"endpoint_cov_sticky", cs.mean}, {"endpoint_cov_sticky_se", cs.se}};
    return rep;
}

namespace {

struct EnReplicate {
    std::vector<double> leb;  // NaN once censored
    std::vector<TauIntervalSet> sets;
    int censored_at = -1;
};

EnReplicate run_En_replicate(double K, int n_boxes, double tau_max, std::int64_t budget, std::uint64_t s,
                             bool keep_sets) {
    const ArrowField field(s, tau_max);
    const PredicateSpec all = En_spec(K, n_boxes);
    EnReplicate r;
    r.leb.assign(static_cast<std::size_t>(n_boxes) + 1, std::numeric_limits<double>::quiet_NaN());
    SweepStats stats;
    SweepOptions opts;
    opts.max_path_steps = budget;
    TauIntervalSet cur = TauIntervalSet::full(0.0, tau_max);
    for (int k = 0; k <= n_boxes; ++k) {
        try {
            if (!cur.empty()) cur = sweep_predicate(field, PredicateSpec{{all.paths[static_cast<std::size_t>(k)]}}, cur, &stats, opts);
        } catch (const BudgetError&) {
            r.censored_at = k;
            break;
        }
        r.leb[static_cast<std::size_t>(k)] = measure(cur) / tau_max;
        if (keep_sets) r.sets.push_back(cur);
    }
    return r;
}

}  // namespace

ExperimentReport En_statistics(const EnStatisticsConfig& cfg, std::uint64_t seed, int workers) {
    require(cfg.K > 0.0 && cfg.n_boxes >= 0 && cfg.tau_max > 0.0 && cfg.replicates >= 2,
            "En_statistics: invalid configuration");
    ExperimentReport rep;
    rep.name = "En_statistics";
    rep.seed = seed;
    rep.replicates = cfg.replicates;
    const double g = gamma_of_K(cfg.K).value;
    rep.config = {{"K", cfg.K}, {"gamma", g}, {"n_boxes", cfg.n_boxes}, {"tau_max", cfg.tau_max},
                  {"replicates", cfg.replicates}, {"max_path_steps", cfg.max_path_steps}, {"floor_n", cfg.floor_n}};
    std::vector<EnReplicate> reps(static_cast<std::size_t>(cfg.replicates));
    parallel_for(cfg.replicates, workers, [&](std::int64_t i) {
        reps[static_cast<std::size_t>(i)] = run_En_replicate(cfg.K, cfg.n_boxes, cfg.tau_max, cfg.max_path_steps,
                                                             derive_seed(seed, 3, static_cast<std::uint64_t>(i)), false);
    });
    double prod = 1.0;
    double prev_mean = std::numeric_limits<double>::infinity();
    bool monotone = true;
    std::vector<MeanSe> nonempty_by_n;
    for (int n = 0; n <= cfg.n_boxes; ++n) {
        prod *= exact_PAk(g, n);
        std::vector<double> leb;
        std::vector<double> nonempty;
        std::int64_t censored = 0;
        for (const auto& r : reps) {
            const double v = r.leb[static_cast<std::size_t>(n)];
            if (std::isnan(v)) {
                ++censored;
                continue;
            }
            leb.push_back(v);
            nonempty.push_back(v > 0.0 ? 1.0 : 0.0);
        }
        const MeanSe m = mean_se(leb);
        const MeanSe ne = mean_se(nonempty);
        nonempty_by_n.push_back(ne);
        rep.cells.push_back({{"n", n},
                             {"mean_leb", m.mean},
                             {"mean_leb_se", m.se},
                             {"product_exact_PAk", prod},
                             {"nonempty_fraction", ne.mean},
                             {"nonempty_se", ne.se},
                             {"used", m.n},
                             {"censored", censored},
                             {"replicates", cfg.replicates},
                             {"seed", seed}});
        if (censored > 0)
            rep.skip("fubini_n" + std::to_string(n), std::to_string(censored) + " replicates censored by the step budget");
        else
            rep.gate("fubini_n" + std::to_string(n), within_se(m.mean, m.se, prod, 0.0), sigma_detail(m.mean, prod, m.se));
        if (m.n > 0) {
            if (m.mean > prev_mean) monotone = false;
            prev_mean = m.mean;
        }
    }
    rep.gate("mean_measure_nonincreasing", monotone, "mean Leb(E_n) over n = 0.." + std::to_string(cfg.n_boxes));
    if (cfg.floor_n >= 0 && cfg.floor_n <= cfg.n_boxes) {
        const MeanSe& f = nonempty_by_n[static_cast<std::size_t>(cfg.floor_n)];
        const MeanSe& l = nonempty_by_n.back();
        rep.gate("nonempty_floor", l.mean >= f.mean - 3.0 * std::hypot(f.se, l.se),
                 "fraction at n=" + std::to_string(cfg.n_boxes) + " " + fmt(l.mean) + " vs floor at n=" +
                     std::to_string(cfg.floor_n) + " " + fmt(f.mean));
    }
    return rep;
}

BoxcountFit boxcount_slope(const std::vector<TauIntervalSet>& sets, const std::vector<double>& eps_grid,
                           std::int64_t min_total) {
    BoxcountFit f;
    std::vector<double> x;
    std::vector<double> y;
    for (double eps : eps_grid) {
        std::int64_t total = 0;
        for (const auto& s : sets) total += cover_count(s, eps);
        const double mean = sets.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(sets.size());
        f.mean_counts.push_back(mean);
        if (total >= min_total && mean > 0.0) {
            x.push_back(std::log(1.0 / eps));
            y.push_back(std::log(mean));
        }
    }
    f.points = x.size();
    if (x.size() >= 2) {
        const LineFit lf = fit_line(x, y);
        f.slope = lf.slope;
        f.r2 = lf.r2;
        f.degenerate = x.size() < 3;
    }
    return f;
}

ExperimentReport dimension_boxcount(const DimensionBoxcountConfig& cfg, std::uint64_t seed, int workers) {
    require(!cfg.n_list.empty() && cfg.eps_grid.size() >= 2, "dimension_boxcount: grids too small");
    const auto [emin, emax] = std::minmax_element(cfg.eps_grid.begin(), cfg.eps_grid.end());
    require(*emin > 0.0 && *emax / *emin >= 100.0 * (1.0 - 1e-12), "dimension_boxcount: eps grid must span two decades");
    ExperimentReport rep;
    rep.name = "dimension_boxcount";
    rep.seed = seed;
    rep.replicates = cfg.replicates;
    const int n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
    rep.config = {{"K", cfg.K}, {"n_list", cfg.n_list}, {"tau_max", cfg.tau_max}, {"replicates", cfg.replicates},
                  {"eps_grid", cfg.eps_grid}, {"gamma0", cfg.gamma0}, {"max_path_steps", cfg.max_path_steps}};
    std::vector<EnReplicate> reps(static_cast<std::size_t>(cfg.replicates));
    parallel_for(cfg.replicates, workers, [&](std::int64_t i) {
        reps[static_cast<std::size_t>(i)] = run_En_replicate(cfg.K, n_max, cfg.tau_max, cfg.max_path_steps,
                                                             derive_seed(seed, 4, static_cast<std::uint64_t>(i)), true);
    });
    const BoxcountFit full = boxcount_slope({TauIntervalSet::full(0.0, 1.0)}, cfg.eps_grid);
    rep.gate("full_interval_slope", !full.degenerate && std::abs(full.slope - 1.0) <= 0.05,
             "slope " + fmt(full.slope));
    const double upper = dim_upper(cfg.K);
    const auto lower = dim_lower(cfg.K, cfg.gamma0);
    rep.summary = {{"dim_upper", upper}, {"dim_lower", lower ? ojson(*lower) : ojson(nullptr)},
                   {"note", "finite-scale box counts of E_n; an approximation, not a dimension estimate"}};
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    std::vector<int> ns = cfg.n_list;
    std::sort(ns.begin(), ns.end());
    for (int n : ns) {
        std::vector<TauIntervalSet> sets;
        std::int64_t censored = 0;
        for (const auto& r : reps) {
            if (static_cast<std::size_t>(n) < r.sets.size())
                sets.push_back(r.sets[static_cast<std::size_t>(n)]);
            else
                ++censored;
        }
        const BoxcountFit f = boxcount_slope(sets, cfg.eps_grid);
        rep.fits.push_back({{"n", n},
                            {"slope", f.slope},
                            {"r2", f.r2},
                            {"points", f.points},
                            {"degenerate", f.degenerate},
                            {"used", sets.size()},
                            {"censored", censored}});
        for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e)
            rep.cells.push_back({{"n", n}, {"eps", cfg.eps_grid[e]}, {"mean_cover_count", f.mean_counts[e]},
                                 {"used", sets.size()}, {"seed", seed}});
        if (f.degenerate) {
            rep.gate("fit_n" + std::to_string(n), false, "too few nonzero cover counts");
            continue;
        }
        if (f.slope > prev) monotone = false;
        prev = f.slope;
    }
    rep.gate("slope_nonincreasing_in_n", monotone, "fitted slopes refine with n");
    return rep;
}

ExperimentReport product_ratio_check(const ProductRatioConfig& cfg, std::uint64_t seed, int workers) {
    require(!cfg.s_grid.empty() && cfg.n >= 0 && cfg.replicates >= 2, "product_ratio_check: invalid configuration");
    for (double s : cfg.s_grid) require(s > 0.0, "product_ratio_check: s must be positive");
    ExperimentReport rep;
    rep.name = "product_ratio_check";
    rep.seed = seed;
    rep.replicates = cfg.replicates;
    const double g = gamma_of_K(cfg.K).value;
    rep.config = {{"K", cfg.K}, {"gamma", g}, {"s_grid", cfg.s_grid}, {"n", cfg.n},
                  {"replicates", cfg.replicates}, {"large_s", cfg.large_s}};
    std::vector<double> pk;
    double sup_inv = 0.0;
    for (int k = 0; k <= cfg.n; ++k) {
        pk.push_back(exact_PAk(g, k));
        sup_inv = std::max(sup_inv, 1.0 / pk.back());
    }
    const double b_theory = std::log(sup_inv) / std::log(g);
    std::vector<double> fx;
    std::vector<double> fy;
    std::vector<double> products;
    bool large_ok = true;
    bool any_large = false;
    for (double s : cfg.s_grid) {
        double prod = 1.0;
        double rel_var = 0.0;
        const auto N0 = static_cast<std::int64_t>(std::ceil(std::log(1.0 / s) / std::log(g)));
        for (int k = 0; k <= cfg.n; ++k) {
            const auto d = static_cast<std::int64_t>(box_side(g, k));
            std::vector<double> joint(static_cast<std::size_t>(cfg.replicates));
            const std::uint64_t stream = double_stream(s, 100 + static_cast<std::uint64_t>(k));
            parallel_for(cfg.replicates, workers, [&](std::int64_t i) {
                Engine eng(derive_seed(seed, stream, static_cast<std::uint64_t>(i)));
                const auto [a, b] = sticky_box_events(s, d, eng);
                joint[static_cast<std::size_t>(i)] = (a && b) ? 1.0 : 0.0;
            });
            const MeanSe m = mean_se(joint);
            const double p2 = pk[static_cast<std::size_t>(k)] * pk[static_cast<std::size_t>(k)];
            const double ratio = m.mean / p2;
            const double se = m.se / p2;
            const bool flagged = m.mean == 0.0;
            prod *= ratio;
            if (!flagged) rel_var += (m.se / m.mean) * (m.se / m.mean);
            rep.cells.push_back({{"s", s},
                                 {"k", k},
                                 {"d", d},
                                 {"N0", N0},
                                 {"p_joint", m.mean},
                                 {"p_joint_se", m.se},
                                 {"PAk_exact", pk[static_cast<std::size_t>(k)]},
                                 {"ratio", ratio},
                                 {"ratio_se", se},
                                 {"running_product", prod},
                                 {"zero_joint_estimate", flagged},
                                 {"replicates", cfg.replicates},
                                 {"seed", seed}});
            if (s >= cfg.large_s) {
                any_large = true;
                if (!within_se(ratio, se, 1.0, 0.0)) large_ok = false;
            }
        }
        products.push_back(prod);
        if (prod > 0.0) {
            fx.push_back(std::log(1.0 / s));
            fy.push_back(std::log(prod));
        }
        rep.summary["product_s_" + fmt(s)] = prod;
        rep.summary["product_rel_se_s_" + fmt(s)] = std::sqrt(rel_var);
    }
    if (any_large)
        rep.gate("large_s_ratios_near_one", large_ok, "ratio cells with s >= " + fmt(cfg.large_s) + " within 3 SE of 1");
    else
        rep.skip("large_s_ratios_near_one", "no s in grid at or above " + fmt(cfg.large_s));
    if (fx.size() >= 2) {
        const LineFit f = fit_line(fx, fy);
        double c = 0.0;
        for (std::size_t i = 0; i < fx.size(); ++i) c = std::max(c, std::exp(fy[i] - f.slope * fx[i]));
        rep.fits.push_back({{"quantity", "log product vs log(1/s)"}, {"b_hat", f.slope}, {"c_hat", c},
                            {"r2", f.r2}, {"b_theory", b_theory}, {"points", f.points}});
    } else {
        rep.fits.push_back({{"quantity", "log product vs log(1/s)"}, {"degenerate", true}, {"b_theory", b_theory}});
    }
    return rep;
}

ExperimentReport tameness_probe(const TamenessConfig& cfg, std::uint64_t seed, int workers) {
    require(!cfg.horizon_grid.empty() && cfg.level >= 1 && cfg.exceed_level >= 1 && cfg.tau_max > 0.0 &&
                cfg.cells >= 1 && cfg.replicates >= 2,
            "tameness_probe: invalid configuration");
    ExperimentReport rep;
    rep.name = "tameness_probe";
    rep.seed = seed;
    rep.replicates = cfg.replicates;
    rep.config = {{"horizon_grid", cfg.horizon_grid}, {"level", cfg.level}, {"exceed_level", cfg.exceed_level},
                  {"tau_max", cfg.tau_max}, {"cells", cfg.cells}, {"replicates", cfg.replicates},
                  {"conf_j", cfg.conf_j}, {"K1", cfg.K1}, {"K2", cfg.K2}, {"conf_horizons", cfg.conf_horizons}};
    const std::size_t NH = cfg.horizon_grid.size();
    const std::size_t NC = cfg.conf_horizons.size();
    const std::size_t W = 4 * NH + NC;
    const auto R = static_cast<std::size_t>(cfg.replicates);
    std::vector<double> data(R * W);
    const double cell_len = cfg.tau_max / static_cast<double>(cfg.cells);
    parallel_for(cfg.replicates, workers, [&](std::int64_t i) {
        const ArrowField field(derive_seed(seed, 5, static_cast<std::uint64_t>(i)), cfg.tau_max);
        double* row = &data[static_cast<std::size_t>(i) * W];
        for (std::size_t h = 0; h < NH; ++h) {
            const std::int64_t H = cfg.horizon_grid[h];
            const TauIntervalSet a = sweep_predicate(field, lower_barrier_spec(cfg.level, H), cfg.tau_max);
            std::int64_t hit = 0;
            for (std::int64_t c = 0; c < cfg.cells; ++c) {
                const TauIntervalSet cell = TauIntervalSet::full(c * cell_len, c + 1 == cfg.cells ? cfg.tau_max : (c + 1) * cell_len);
                if (!a.intersect(cell).empty()) ++hit;
            }
            const TauIntervalSet e = sweep_predicate(field, exceedance_spec(cfg.exceed_level, H), cfg.tau_max);
            row[4 * h] = measure(a) / cfg.tau_max;
            row[4 * h + 1] = static_cast<double>(hit) / static_cast<double>(cfg.cells);
            row[4 * h + 2] = measure(e) / cfg.tau_max;
            row[4 * h + 3] = static_cast<double>(e.size());
        }
        for (std::size_t c = 0; c < NC; ++c)
            row[4 * NH + c] =
                measure(confinement_sweep(field, cfg.conf_j, cfg.K1, cfg.K2, cfg.conf_horizons[c], cfg.tau_max)) /
                cfg.tau_max;
    });
    const auto column = [&](std::size_t c) {
        std::vector<double> out(R);
        for (std::size_t i = 0; i < R; ++i) out[i] = data[i * W + c];
        return out;
    };
    const double p_bar = or_coupling_plus_probability(cell_len);
    const double theta = theta_An(p_bar, cfg.level);
    for (std::size_t h = 0; h < NH; ++h) {
        const std::int64_t H = cfg.horizon_grid[h];
        const MeanSe frac = mean_se(column(4 * h));
        const MeanSe cellhit = mean_se(column(4 * h + 1));
        const MeanSe exc = mean_se(column(4 * h + 2));
        const MeanSe cnt = mean_se(column(4 * h + 3));
        const SurvivalTable sym = survival_symmetric(0.0, static_cast<double>(cfg.level - 1), H);
        const SurvivalTable drift = survival_walk(p_bar, 0.0, static_cast<double>(cfg.level - 1), H);
        const double static_lo = sym.lower.back();
        const double static_hi = sym.upper.back();
        const double bound = drift.upper.back();
        rep.cells.push_back({{"horizon", H},
                             {"barrier_tau_fraction", frac.mean},
                             {"barrier_tau_fraction_se", frac.se},
                             {"static_probability", static_lo},
                             {"cell_hit_fraction", cellhit.mean},
                             {"cell_hit_fraction_se", cellhit.se},
                             {"drifted_bound", bound},
                             {"theta_infinite_horizon", theta},
                             {"exceedance_tau_fraction", exc.mean},
                             {"exceedance_tau_fraction_se", exc.se},
                             {"exceedance_interval_count", cnt.mean},
                             {"exceedance_interval_count_se", cnt.se},
                             {"replicates", cfg.replicates},
                             {"seed", seed}});
        const std::string tag = "_H" + std::to_string(H);
        rep.gate("barrier_stationarity" + tag,
                 frac.mean >= static_lo - 3.0 * frac.se && frac.mean <= static_hi + 3.0 * frac.se,
                 sigma_detail(frac.mean, static_lo, frac.se));
        rep.gate("drifted_coupling_bound" + tag, cellhit.mean <= bound + 3.0 * cellhit.se,
                 fmt(cellhit.mean) + " <= " + fmt(bound) + " + 3 SE (" + fmt(3.0 * cellhit.se) + ")");
        if (cfg.exceed_level > H)
            rep.gate("exceedance_unreachable" + tag, exc.mean == 0.0, "fraction " + fmt(exc.mean));
    }
    double prev = std::numeric_limits<double>::infinity();
    bool decay = true;
    for (std::size_t c = 0; c < NC; ++c) {
        const MeanSe m = mean_se(column(4 * NH + c));
        rep.cells.push_back({{"confinement_horizon", cfg.conf_horizons[c]},
                             {"confinement_tau_fraction", m.mean},
                             {"confinement_tau_fraction_se", m.se},
                             {"replicates", cfg.replicates},
                             {"seed", seed}});
        if (c > 0 && !(m.mean < prev)) decay = false;
        prev = m.mean;
    }
    if (NC >= 2) rep.gate("confinement_strict_decay", decay, "mean measure decreases along the horizon grid");
    rep.summary = {{"p_bar", p_bar}, {"theta_An_p_bar", theta},
                   {"note", "theta is the infinite-horizon drifted value; the gate uses the finite-horizon drifted DP"}};
    return rep;
}

}  // namespace dydw
