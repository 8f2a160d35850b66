#include "dydw/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dydw/core.hpp"
#include "dydw/web_paths.hpp"

namespace dydw {

namespace {

// Lanczos approximation with N = 13, g = 6.024680040776729583740234375,
// scaled by exp(g) (coefficients in ascending powers of z).
constexpr double kLanczosG = 6.024680040776729583740234375;
constexpr double kLanczosNum[13] = {
    56906521.91347156388090791033559122686859,   103794043.1163445451906271053616070238554,
    86363131.28813859145546927288977868422342,   43338889.32467613834773723740590533316085,
    14605578.08768506808414169982791359218571,   3481712.15498064590882071018964774556468,
    601859.6171681098786670226533699352302507,   75999.29304014542649875303443598909137092,
    6955.999602515376140356310115515198987526,   449.9445569063168119446858607650988409623,
    19.51992788247617482847860966235652136208,   0.5098416655656676188125178644804694509993,
    0.006061842346248906525783753964555936883222};
constexpr double kLanczosDen[13] = {0.0,       39916800.0, 120543840.0, 150917976.0, 105258076.0,
                                    45995730.0, 13339535.0, 2637558.0,   357423.0,    32670.0,
                                    1925.0,    66.0,       1.0};

double lanczos_sum_expg_scaled(double z) {
    double num = 0.0;
    double den = 0.0;
    if (z <= 1.0) {
        for (int i = 12; i >= 0; --i) {
            num = num * z + kLanczosNum[i];
            den = den * z + kLanczosDen[i];
        }
    } else {
        const double w = 1.0 / z;
        for (int i = 0; i <= 12; ++i) {
            num = num * w + kLanczosNum[i];
            den = den * w + kLanczosDen[i];
        }
    }
    return num / den;
}

}  // namespace

double log_gamma(double x) {
    require(x > 0.0 && std::isfinite(x), "log_gamma: argument must be positive and finite");
    if (x < 1.0) return log_gamma(x + 1.0) - std::log(x);
    const double zgh = x + kLanczosG - 0.5;
    return std::log(lanczos_sum_expg_scaled(x)) + (x - 0.5) * (std::log(zgh) - 1.0);
}

double gamma_fn(double x) { return std::exp(log_gamma(x)); }

double K_of_gamma(double gamma) {
    require(gamma > 2.0, "K_of_gamma: gamma must exceed 2");
    return (gamma - 2.0) * std::sqrt((gamma + 1.0) / (gamma - 1.0));
}

SolverResult gamma_of_K(double K, double tol) {
    require(K > 0.0 && std::isfinite(K), "gamma_of_K: K must be positive and finite");
    double lo = 2.0;
    double hi = 4.0;
    while (K_of_gamma(hi) < K) {
        lo = hi;
        hi *= 2.0;
    }
    SolverResult r;
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    while (r.iterations < 2000) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ++r.iterations;
        if (K_of_gamma(mid) < K)
            lo = mid;
        else
            hi = mid;
    }
    const double klo = lo > 2.0 ? K_of_gamma(lo) : 0.0;
    const double khi = K_of_gamma(hi);
    r.value = (std::abs(klo - K) < std::abs(khi - K) && lo > 2.0) ? lo : hi;
    r.log_value = std::log(r.value);
    r.residual = std::abs(K_of_gamma(r.value) - K);
    r.converged = r.residual <= tol * std::max(1.0, K);
    return r;
}

SeriesValue f_sato_series_log(double log_p, double K, double tol) {
    require(log_p < 0.0, "f_sato: p must lie in (0, 1)");
    require(K > 0.0 && std::isfinite(K), "f_sato: K must be positive");
    const double p = std::exp(log_p);
    const double one_minus_p = -std::expm1(log_p);
    const double log_sin = p < 1e-8 ? std::log(std::numbers::pi / 2.0) + log_p : std::log(std::sin(std::numbers::pi * p / 2.0));
    const double log_pref = log_sin + log_gamma(1.0 + p / 2.0) - std::log(std::numbers::pi);
    const double log_a = std::log(std::numbers::sqrt2 * K);
    const auto log_term = [&](int n) {
        const double g = n == 1 ? log_gamma(one_minus_p / 2.0) : log_gamma((n - p) / 2.0);
        return n * log_a - log_gamma(n + 1.0) + g;
    };
    const int n_min = std::max(20, static_cast<int>(std::ceil(4.0 * K * K)));
    const double log_tol = std::log(tol);
    double m = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    int n = 1;
    double next = log_term(1);
    for (;; ++n) {
        const double lt = next;
        if (lt > m) {
            s = s * std::exp(m - lt) + 1.0;
            m = lt;
        } else {
            s += std::exp(lt - m);
        }
        next = log_term(n + 1);
        // Beyond n >= 4K^2 successive terms shrink by at least 1/2, so the
        // tail is at most twice the next term.
        if (n >= n_min && next < log_tol + m + std::log(s)) break;
    }
    SeriesValue out;
    out.terms = n;
    const double log_sum = m + std::log(s);
    out.log_value = log_pref + log_sum;
    out.value = std::exp(out.log_value);
    out.tail_bound = 2.0 * std::exp(next - log_sum);
    return out;
}

SeriesValue f_sato_series(double p, double K, double tol) {
    require(p > 0.0 && p < 1.0, "f_sato: p must lie in (0, 1)");
    return f_sato_series_log(std::log(p), K, tol);
}

double f_sato(double p, double K, double tol) { return f_sato_series(p, K, tol).value; }

SolverResult p_of_K(double K, double tol) {
    require(K > 0.0 && std::isfinite(K), "p_of_K: K must be positive");
    const auto g = [K](double u) { return f_sato_series_log(u, K).log_value; };
    double hi = -1e-15;
    double lo = -1.0;
    SolverResult r;
    if (g(hi) <= 0.0) {
        // K so small that f < 1 even at p = 1 - 1e-15: boundary-limit result.
        r.value = 1.0;
        r.log_value = 0.0;
        r.bracket_lo = r.bracket_hi = hi;
        r.residual = std::abs(std::expm1(g(hi)));
        return r;
    }
    while (g(lo) >= 0.0) {
        hi = lo;
        lo *= 2.0;
        if (lo < -1e9) {
            r.value = 0.0;
            r.log_value = lo;
            r.bracket_lo = lo;
            r.bracket_hi = hi;
            r.residual = std::abs(std::expm1(g(lo)));
            return r;
        }
    }
    r.bracket_lo = std::exp(lo);
    r.bracket_hi = std::exp(hi);
    while (r.iterations < 4000) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ++r.iterations;
        if (g(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double glo = g(lo);
    const double ghi = g(hi);
    const double u = std::abs(glo) < std::abs(ghi) ? lo : hi;
    const SeriesValue f = f_sato_series_log(u, K);
    r.log_value = u;
    r.value = std::exp(u);
    r.residual = std::abs(std::expm1(f.log_value));
    r.tail_bound = f.tail_bound;
    r.converged = r.residual <= tol;
    return r;
}

double dim_upper(double K) { return -std::expm1(p_of_K(K).log_value); }

std::optional<double> dim_lower(double K, double gamma0) {
    require(gamma0 > 1.0, "dim_lower: gamma0 must exceed 1");
    const double g = gamma_of_K(K).value;
    if (g <= gamma0) return std::nullopt;
    return 1.0 - std::log(gamma0) / std::log(g);
}

double theta_An(double p, std::int64_t n) {
    require(p >= 0.5 && p <= 1.0, "theta_An: p must lie in [1/2, 1]");
    require(n >= 0, "theta_An: n must be nonnegative");
    const double q = (2.0 * p - 1.0) / p;
    if (n == 0) return 0.0;
    if (n == 1 || q == 1.0) return q;
    return -std::expm1(static_cast<double>(n) * std::log1p(-q));
}

double energy_integral_closed(double b) {
    require(b > 0.0 && b < 1.0, "energy_integral_closed: b must lie in (0, 1)");
    return 2.0 / ((1.0 - b) * (2.0 - b));
}

DriftModel parse_drift_model(const std::string& s) {
    if (s == "exponential" || s == "exp") return DriftModel::exponential;
    if (s == "linear") return DriftModel::linear;
    throw PreconditionError("unknown drift model '" + s + "' (expected exponential or linear)");
}

std::string to_string(DriftModel m) { return m == DriftModel::exponential ? "exponential" : "linear"; }

double drift_p_up(double eps, DriftModel model) {
    require(eps >= 0.0, "drift: epsilon must be nonnegative");
    if (model == DriftModel::linear) {
        require(eps < 1.0, "drift: linear model needs epsilon < 1");
        return 0.5 * (1.0 + eps);
    }
    return 1.0 - 0.5 * std::exp(-eps);
}

std::int64_t survival_threshold(double K, double j, std::int64_t n) { return Boundary{j, K}.threshold(n); }

std::int64_t survival_cutoff(double j, std::int64_t n) {
    return static_cast<std::int64_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(n + 1)) + j));
}

namespace {

std::int64_t ceil_div2(std::int64_t v) { return v >= 0 ? (v + 1) / 2 : -((-v) / 2); }
std::int64_t floor_div2(std::int64_t v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

/// Forward DP over the up-step count u (position x = 2u - n). Calls
/// on_hit(n, x, mass) for mass falling below the boundary, on_escape(n, x,
/// mass) for mass removed above the cutoff, and on_final(x, mass) for the
/// surviving distribution at N.
template <class OnHit, class OnEscape, class OnFinal>
void run_survival_dp(double p_up, double K, double j, std::int64_t N, std::vector<double>* lower,
                     std::vector<double>* upper, OnHit&& on_hit, OnEscape&& on_escape, OnFinal&& on_final) {
    require(N >= 0, "survival: horizon must be nonnegative");
    require(K >= 0.0 && j >= 0.0, "survival: K and j must be nonnegative");
    require(p_up >= 0.0 && p_up <= 1.0, "survival: step probability must lie in [0, 1]");
    const double p_dn = 1.0 - p_up;
    // a[u + 1] holds the mass at up-count u; a[0] stays zero.
    std::vector<double> a(static_cast<std::size_t>(N) + 3, 0.0);
    std::vector<double> b(a.size(), 0.0);
    a[1] = 1.0;
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    double alive = 1.0;
    double escaped = 0.0;
    if (lower) {
        lower->assign(static_cast<std::size_t>(N) + 1, 0.0);
        (*lower)[0] = 1.0;
    }
    if (upper) {
        upper->assign(static_cast<std::size_t>(N) + 1, 0.0);
        (*upper)[0] = 1.0;
    }
    for (std::int64_t n = 1; n <= N; ++n) {
        if (lo <= hi) {
            const double* __restrict src = a.data();
            double* __restrict dst = b.data();
            const std::int64_t end = hi + 2;
            for (std::int64_t i = lo + 1; i <= end; ++i) dst[i] = p_up * src[i - 1] + p_dn * src[i];
            dst[lo] = 0.0;
            for (std::int64_t i = lo + 1; i <= end; ++i) a[i] = 0.0;
            a.swap(b);
            hi += 1;
            const std::int64_t u_min = ceil_div2(n + survival_threshold(K, j, n));
            for (std::int64_t u = lo; u <= std::min(hi, u_min - 1); ++u) {
                const double m = a[u + 1];
                if (m != 0.0) {
                    on_hit(n, 2 * u - n, m);
                    alive -= m;
                }
                a[u + 1] = 0.0;
            }
            lo = std::max(lo, u_min);
            const std::int64_t u_max = floor_div2(n + survival_cutoff(j, n));
            for (std::int64_t u = std::max(lo, u_max + 1); u <= hi; ++u) {
                const double m = a[u + 1];
                if (m != 0.0) {
                    on_escape(n, 2 * u - n, m);
                    alive -= m;
                    escaped += m;
                }
                a[u + 1] = 0.0;
            }
            hi = std::min(hi, u_max);
            if (lo > hi) alive = 0.0;
        }
        const double al = std::max(alive, 0.0);
        if (lower) (*lower)[static_cast<std::size_t>(n)] = al;
        if (upper) (*upper)[static_cast<std::size_t>(n)] = std::min(1.0, al + escaped);
    }
    for (std::int64_t u = lo; u <= hi; ++u) on_final(2 * u - N, a[u + 1]);
}

}  // namespace

SurvivalTable survival_walk(double p_up, double K, double j, std::int64_t n) {
    SurvivalTable t;
    t.K = K;
    t.j = j;
    t.p_up = p_up;
    t.horizon = n;
    double esc = 0.0;
    run_survival_dp(
        p_up, K, j, n, &t.lower, &t.upper, [](std::int64_t, std::int64_t, double) {},
        [&](std::int64_t, std::int64_t, double m) { esc += m; }, [](std::int64_t, double) {});
    t.escaped = esc;
    t.infinite_lower = 0.0;
    t.infinite_upper = t.upper.back();
    return t;
}

SurvivalTable survival_symmetric(double K, double j, std::int64_t n) {
    require(n >= 0, "survival_symmetric: n must be nonnegative");
    return survival_walk(0.5, K, j, n);
}

std::vector<double> first_passage_pmf(double K, std::int64_t n_max, double j) {
    require(n_max >= 1, "first_passage_pmf: n_max must be at least 1");
    std::vector<double> pmf(static_cast<std::size_t>(n_max) + 1, 0.0);
    run_survival_dp(
        0.5, K, j, n_max, nullptr, nullptr,
        [&](std::int64_t n, std::int64_t, double m) { pmf[static_cast<std::size_t>(n)] += m; },
        [](std::int64_t, std::int64_t, double) {}, [](std::int64_t, double) {});
    return pmf;
}

SurvivalTable survival_drifted_dp(double epsilon, double K, std::int64_t N, DriftModel model, double j) {
    require(N >= 1, "survival_drifted_dp: N must be at least 1");
    const double p_up = drift_p_up(epsilon, model);
    const double p_dn = 1.0 - p_up;
    // Beyond N the boundary keeps falling, so a flat barrier at its level
    // bounds survival from below (gambler's ruin with ratio p_dn / p_up).
    const double log_r = epsilon > 0.0 ? std::log(p_dn / p_up) : 0.0;
    const auto ruin_survival = [&](std::int64_t n, std::int64_t x) {
        const std::int64_t h = x - survival_threshold(K, j, n) + 1;
        return epsilon > 0.0 ? -std::expm1(static_cast<double>(h) * log_r) : 0.0;
    };
    SurvivalTable t;
    t.K = K;
    t.j = j;
    t.epsilon = epsilon;
    t.p_up = p_up;
    t.horizon = N;
    double esc = 0.0;
    double esc_lower = 0.0;
    double fin_lower = 0.0;
    run_survival_dp(
        p_up, K, j, N, &t.lower, &t.upper, [](std::int64_t, std::int64_t, double) {},
        [&](std::int64_t n, std::int64_t x, double m) {
            esc += m;
            esc_lower += m * ruin_survival(n, x);
        },
        [&](std::int64_t x, double m) { fin_lower += m * ruin_survival(N, x); });
    t.escaped = esc;
    t.infinite_upper = t.upper.back();
    t.infinite_lower = std::min(fin_lower + esc_lower, t.infinite_upper);
    return t;
}

double path_weight(std::int64_t n, std::int64_t x, double epsilon, DriftModel model) {
    const double p_up = drift_p_up(epsilon, model);
    const double ups = 0.5 * static_cast<double>(n + x);
    const double downs = 0.5 * static_cast<double>(n - x);
    return std::exp(ups * std::log(2.0 * p_up) + downs * std::log(2.0 * (1.0 - p_up)));
}

double f_eps(std::int64_t n, double epsilon, double K, DriftModel model) {
    require(n >= 1, "f_eps: n must be at least 1");
    const double m = std::floor(1.0 + K * std::sqrt(static_cast<double>(n)) + kBoundarySlack) + 1.0;
    const double p_up = drift_p_up(epsilon, model);
    const double nn = static_cast<double>(n);
    return std::exp(0.5 * (nn + m) * std::log(2.0 * (1.0 - p_up)) + 0.5 * (nn - m) * std::log(2.0 * p_up));
}

double hit_weight_bound(std::int64_t n, double epsilon, double K, DriftModel model, double j) {
    const double p_up = drift_p_up(epsilon, model);
    const double p_dn = 1.0 - p_up;
    const double nn = static_cast<double>(n);
    return std::exp(0.5 * nn * std::log(4.0 * p_up * p_dn) +
                    0.5 * (j + K * std::sqrt(nn)) * std::log(p_dn / p_up));
}

ReweightResult survival_drifted_reweight(double epsilon, double K, std::int64_t N, DriftModel model, double j) {
    require(N >= 1, "survival_drifted_reweight: N must be at least 1");
    const double p_up = drift_p_up(epsilon, model);
    const double l_up = std::log(2.0 * p_up);
    const double l_dn = std::log(2.0 * (1.0 - p_up));
    ReweightResult r;
    r.N = N;
    double acc = 0.0;
    double esc = 0.0;
    std::vector<double> lower;
    run_survival_dp(
        0.5, K, j, N, &lower, nullptr,
        [&](std::int64_t n, std::int64_t x, double m) {
            const double ups = 0.5 * static_cast<double>(n + x);
            const double downs = 0.5 * static_cast<double>(n - x);
            acc += m * -std::expm1(ups * l_up + downs * l_dn);
        },
        [&](std::int64_t, std::int64_t, double m) { esc += m; }, [](std::int64_t, double) {});
    r.accumulated = acc;
    r.survival_lower = lower.back();
    r.survival_upper = std::min(1.0, lower.back() + esc);
    r.lower = acc + (1.0 - hit_weight_bound(N + 1, epsilon, K, model, j)) * r.survival_lower;
    r.upper = acc + r.survival_upper;
    return r;
}

InfiniteSurvival survival_infinite_drifted(double epsilon, double K, double rel_width, std::int64_t N_max,
                                           DriftModel model, double j) {
    require(epsilon > 0.0, "survival_infinite_drifted: epsilon must be positive");
    require(rel_width > 0.0 && N_max >= 1, "survival_infinite_drifted: invalid tolerance or horizon");
    auto N = static_cast<std::int64_t>(std::ceil(4.0 / (epsilon * epsilon)));
    N = std::clamp<std::int64_t>(N, 16, N_max);
    InfiniteSurvival out;
    for (;;) {
        const SurvivalTable t = survival_drifted_dp(epsilon, K, N, model, j);
        out.lower = t.infinite_lower;
        out.upper = t.infinite_upper;
        out.horizon = N;
        if (out.rel_width() < rel_width || N >= N_max) return out;
        N = std::min(N_max, N + N / 2);
    }
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "fit_line: size mismatch");
    require(x.size() >= 2, "fit_line: need at least two points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "fit_line: degenerate abscissae");
    LineFit f;
    f.points = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        sse += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.slope_se = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    return f;
}

}  // namespace dydw
