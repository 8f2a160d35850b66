#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dydw {

struct SolverResult {
    double value = 0.0;
    double log_value = 0.0;  // log(value); stays finite when value underflows
    double residual = 0.0;   // |f(value) - target|
    int iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double tail_bound = 0.0;  // series truncation bound, relative to the sum
    bool converged = false;
};

/// log Gamma(x) for x > 0 via the 13-term Lanczos approximation (g ~ 6.0247).
[[nodiscard]] double log_gamma(double x);
[[nodiscard]] double gamma_fn(double x);

/// K(gamma) = (gamma - 2) sqrt((gamma + 1) / (gamma - 1)).
[[nodiscard]] double K_of_gamma(double gamma);
[[nodiscard]] SolverResult gamma_of_K(double K, double tol = 1e-13);

struct SeriesValue {
    double value = 0.0;
    double log_value = 0.0;
    int terms = 0;
    double tail_bound = 0.0;  // relative bound on the omitted tail
};

/// f(p, K) = sin(pi p / 2) Gamma(1 + p/2) / pi * sum_{n>=1} (sqrt2 K)^n / n! Gamma((n - p)/2).
[[nodiscard]] SeriesValue f_sato_series(double p, double K, double tol = 1e-16);
/// Same series with p = exp(log_p), evaluated entirely in log space.
[[nodiscard]] SeriesValue f_sato_series_log(double log_p, double K, double tol = 1e-16);
[[nodiscard]] double f_sato(double p, double K, double tol = 1e-16);

/// Root of f(., K) = 1 in (0, 1), bisected in log p.
[[nodiscard]] SolverResult p_of_K(double K, double tol = 1e-12);

[[nodiscard]] double dim_upper(double K);
/// 1 - log(gamma0) / log(gamma(K)); empty when gamma(K) <= gamma0.
[[nodiscard]] std::optional<double> dim_lower(double K, double gamma0);

/// theta_{A_n}(p) = 1 - ((1 - p) / p)^n.
[[nodiscard]] double theta_An(double p, std::int64_t n);

/// Integral of |s - t|^{-b} over the unit square.
[[nodiscard]] double energy_integral_closed(double b);

enum class DriftModel { exponential, linear };

[[nodiscard]] DriftModel parse_drift_model(const std::string& s);
[[nodiscard]] std::string to_string(DriftModel m);
/// Up-step probability: 1/2 + (1 - e^{-eps})/2 or (1 + eps)/2.
[[nodiscard]] double drift_p_up(double eps, DriftModel model);

/// Survival of a walk above -j - K sqrt(n), computed by forward DP. Paths
/// that climb above U(n) = ceil(10 sqrt(n+1) + j) are removed; `lower`
/// counts them as dead and `upper` as alive.
struct SurvivalTable {
    double K = 0.0;
    double j = 1.0;
    double epsilon = 0.0;
    double p_up = 0.5;
    std::int64_t horizon = 0;
    std::vector<double> lower;
    std::vector<double> upper;
    double escaped = 0.0;
    // Bracket on the survival probability for all time (drifted walks only).
    double infinite_lower = 0.0;
    double infinite_upper = 1.0;

    [[nodiscard]] double value(std::int64_t n) const { return lower.at(static_cast<std::size_t>(n)); }
};

[[nodiscard]] std::int64_t survival_threshold(double K, double j, std::int64_t n);
[[nodiscard]] std::int64_t survival_cutoff(double j, std::int64_t n);

[[nodiscard]] SurvivalTable survival_walk(double p_up, double K, double j, std::int64_t n);
[[nodiscard]] SurvivalTable survival_symmetric(double K, double j, std::int64_t n);

/// P(T_0 = n) for n = 0..n_max, where T_0 is the first time below -1 - K sqrt(n).
[[nodiscard]] std::vector<double> first_passage_pmf(double K, std::int64_t n_max, double j = 1.0);

[[nodiscard]] SurvivalTable survival_drifted_dp(double epsilon, double K, std::int64_t N,
                                                DriftModel model = DriftModel::exponential, double j = 1.0);

struct ReweightResult {
    double lower = 0.0;
    double upper = 1.0;
    double accumulated = 0.0;  // sum over n <= N of (1 - w) P(T_0 = n)
    double survival_lower = 0.0;
    double survival_upper = 0.0;
    std::int64_t N = 0;
};

/// P(T_eps = infinity) from the symmetric first-passage law reweighted by the
/// likelihood ratio of the drifted walk at each hitting point.
[[nodiscard]] ReweightResult survival_drifted_reweight(double epsilon, double K, std::int64_t N,
                                                       DriftModel model = DriftModel::linear, double j = 1.0);

/// f_eps(n) as displayed, with hitting level -floor(1 + K sqrt n) - 1.
[[nodiscard]] double f_eps(std::int64_t n, double epsilon, double K, DriftModel model = DriftModel::linear);
/// Likelihood ratio of a drifted path ending at x after n steps.
[[nodiscard]] double path_weight(std::int64_t n, std::int64_t x, double epsilon, DriftModel model);
/// Upper bound of path_weight over hitting points at times >= n.
[[nodiscard]] double hit_weight_bound(std::int64_t n, double epsilon, double K, DriftModel model, double j = 1.0);

struct InfiniteSurvival {
    double lower = 0.0;
    double upper = 1.0;
    std::int64_t horizon = 0;
    [[nodiscard]] double mid() const { return 0.5 * (lower + upper); }
    [[nodiscard]] double rel_width() const { return (upper - lower) / mid(); }
};

/// Drifted-DP bracket on P(T_eps = infinity), growing the horizon until the
/// bracket width is below rel_width of its midpoint or N_max is reached.
[[nodiscard]] InfiniteSurvival survival_infinite_drifted(double epsilon, double K, double rel_width,
                                                         std::int64_t N_max,
                                                         DriftModel model = DriftModel::exponential,
                                                         double j = 1.0);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

[[nodiscard]] LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dydw
