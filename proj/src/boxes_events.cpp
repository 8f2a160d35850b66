#include "dydw/boxes_events.hpp"

#include <bit>
#include <cstring>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/binomial.hpp>

#include "dydw/numerics.hpp"
#include "dydw/parallel.hpp"

namespace dydw {

namespace {

std::int64_t narrow(wide_int v, const char* what) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
        throw BudgetError(std::string(what) + " exceeds 64-bit range");
    return static_cast<std::int64_t>(v);
}

}  // namespace

Site BoxSpec::z_bar() const { return {narrow(x, "box corner x"), narrow(t, "box corner t")}; }

wide_int box_side(double gamma, int k) {
    require(gamma > 2.0, "box_side: gamma must exceed 2");
    require(k >= 0, "box_side: k must be nonnegative");
    const long double g = std::pow(static_cast<long double>(gamma), static_cast<long double>(k));
    if (!(g < 1e36L)) throw BudgetError("box_side: gamma^k too large");
    return 2 * (static_cast<wide_int>(std::floor(g / 2.0L)) + 1);
}

BoxSpec first_box() { return {0, 2, 0, 0}; }

BoxSpec next_box(double gamma, const BoxSpec& b) {
    BoxSpec n;
    n.k = b.k + 1;
    n.d = box_side(gamma, n.k);
    n.x = b.x + b.d;
    if (b.d > static_cast<wide_int>(1) << 60) throw BudgetError("next_box: box height overflows");
    n.t = b.t + b.d * b.d;
    return n;
}

std::vector<BoxSpec> box_sequence(double gamma, int n) {
    require(gamma > 2.0, "box_sequence: gamma must exceed 2");
    require(n >= 0, "box_sequence: n must be nonnegative");
    std::vector<BoxSpec> out{first_box()};
    for (int k = 1; k <= n; ++k) out.push_back(next_box(gamma, out.back()));
    return out;
}

bool event_Ak(const ArrowField& field, double tau, double gamma, int k) {
    const auto boxes = box_sequence(gamma, k + 1);
    const BoxSpec& b = boxes[static_cast<std::size_t>(k)];
    const std::int64_t d = narrow(b.d, "box side");
    const std::int64_t n = narrow(b.height(), "box height");
    const Site z = b.z_bar();
    std::int64_t y = 0;  // position relative to x_k
    for (std::int64_t i = 0; i < n; ++i) {
        y += field.arrow_at({z.x + y, z.t + i}, tau);
        if (y <= -d) return false;
    }
    return y > d;
}

double exact_PA_side(std::int64_t d) {
    require(d >= 1, "exact_PA_side: d must be positive");
    // Reflection: P(S_n > d, min S > -d) = P(S_n > d) - P(S_n > 3d), n = d^2.
    const auto n = static_cast<double>(d) * static_cast<double>(d);
    boost::math::binomial_distribution<double> bin(n, 0.5);
    const auto tail = [&](double level) {
        // S_n > level  <=>  U > (n + level) / 2 for U ~ Bin(n, 1/2).
        const double m = std::floor((n + level) / 2.0);
        if (m >= n) return 0.0;
        return boost::math::cdf(boost::math::complement(bin, m));
    };
    return tail(static_cast<double>(d)) - tail(3.0 * static_cast<double>(d));
}

double exact_PAk(double gamma, int k) {
    const wide_int d = box_side(gamma, k);
    return exact_PA_side(narrow(d, "box side"));
}

double brownian_PA() {
    const auto upper_tail = [](double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); };
    return upper_tail(1.0) - upper_tail(3.0);
}

PAkMethod parse_pak_method(const std::string& s) {
    if (s == "trace") return PAkMethod::trace;
    if (s == "walk") return PAkMethod::walk;
    if (s == "bridge") return PAkMethod::bridge;
    throw PreconditionError("unknown estimation method '" + s + "' (expected trace, walk or bridge)");
}

std::string to_string(PAkMethod m) {
    switch (m) {
        case PAkMethod::trace: return "trace";
        case PAkMethod::walk: return "walk";
        case PAkMethod::bridge: return "bridge";
    }
    return "?";
}

Estimate make_estimate(std::int64_t successes, std::int64_t replicates) {
    require(replicates >= 1, "estimate: replicates must be at least 1");
    require(successes >= 0 && successes <= replicates, "estimate: successes out of range");
    Estimate e;
    e.successes = successes;
    e.replicates = replicates;
    const auto n = static_cast<double>(replicates);
    e.p_hat = static_cast<double>(successes) / n;
    e.se = replicates > 1 ? std::sqrt(e.p_hat * (1.0 - e.p_hat) / (n - 1.0)) : 0.0;
    using boost::math::binomial_distribution;
    constexpr double alpha = 0.00135;  // one-sided 3-sigma
    const auto k = static_cast<double>(successes);
    e.lower = successes == 0 ? 0.0 : binomial_distribution<double>::find_lower_bound_on_p(n, k, alpha);
    e.upper = successes == replicates ? 1.0 : binomial_distribution<double>::find_upper_bound_on_p(n, k, alpha);
    return e;
}

bool sample_box_event_walk(std::int64_t d, Engine& eng) {
    const std::int64_t n = d * d;
    std::int64_t y = 0;
    std::int64_t remaining = n;
    while (remaining > 0) {
        const std::uint64_t bits = eng();
        if (remaining >= 64 && y - 64 > -d) {
            y += 2 * std::popcount(bits) - 64;
            remaining -= 64;
        } else {
            const std::int64_t m = std::min<std::int64_t>(64, remaining);
            for (std::int64_t i = 0; i < m; ++i) {
                y += ((bits >> i) & 1U) ? 1 : -1;
                if (y <= -d) return false;
            }
            remaining -= m;
        }
        if (y + remaining <= d) return false;
    }
    return y > d;
}

bool sample_box_event_bridge(std::int64_t d, Engine& eng) {
    const std::int64_t n = d * d;
    std::binomial_distribution<std::int64_t> bin(n, 0.5);
    const std::int64_t ups = bin(eng);
    const std::int64_t y = 2 * ups - n;
    if (y <= d) return false;
    // Given S_n = y, reflection gives P(min <= -d) = C(n, b + d) / C(n, b), b = (n + y) / 2.
    if (n - ups - d < 0) return true;
    const auto b = static_cast<double>(ups);
    const auto nn = static_cast<double>(n);
    const auto dd = static_cast<double>(d);
    const double log_hit = log_gamma(b + 1.0) + log_gamma(nn - b + 1.0) - log_gamma(b + dd + 1.0) -
                           log_gamma(nn - b - dd + 1.0);
    return uniform01(eng) > std::exp(log_hit);
}

namespace {

std::uint64_t pak_stream(double gamma, int k) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &gamma, sizeof bits);
    return splitmix64(bits) ^ static_cast<std::uint64_t>(k);
}

}  // namespace

Estimate estimate_PAk(double gamma, int k, std::int64_t replicates, std::uint64_t seed, PAkMethod method,
                      int workers) {
    require(replicates >= 1, "estimate_PAk: replicates must be at least 1");
    const std::int64_t d = narrow(box_side(gamma, k), "box side");
    const std::uint64_t stream = pak_stream(gamma, k);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(replicates), 0);
    parallel_for(replicates, workers, [&](std::int64_t i) {
        const std::uint64_t s = derive_seed(seed, stream, static_cast<std::uint64_t>(i));
        bool ok = false;
        if (method == PAkMethod::trace) {
            const ArrowField field(s, 1.0);
            ok = event_Ak(field, 0.0, gamma, k);
        } else {
            Engine eng(s);
            ok = method == PAkMethod::walk ? sample_box_event_walk(d, eng) : sample_box_event_bridge(d, eng);
        }
        hit[static_cast<std::size_t>(i)] = ok ? 1 : 0;
    });
    std::int64_t succ = 0;
    for (auto h : hit) succ += h;
    return make_estimate(succ, replicates);
}

Gamma0Result gamma0_hat(const std::vector<double>& K_grid, const std::vector<int>& ks, std::int64_t replicates,
                        std::uint64_t seed, PAkMethod method, int workers) {
    require(!K_grid.empty() && !ks.empty(), "gamma0_hat: grids must be nonempty");
    Gamma0Result r;
    for (double K : K_grid) {
        const double g = gamma_of_K(K).value;
        for (int k : ks) {
            Gamma0Cell c{K, g, k, estimate_PAk(g, k, replicates, seed, method, workers)};
            const double inv = c.estimate.p_hat > 0.0 ? 1.0 / c.estimate.p_hat : std::numeric_limits<double>::infinity();
            const double inv_conf =
                c.estimate.lower > 0.0 ? 1.0 / c.estimate.lower : std::numeric_limits<double>::infinity();
            r.value = std::max(r.value, inv);
            r.upper_conf = std::max(r.upper_conf, inv_conf);
            r.cells.push_back(c);
        }
    }
    return r;
}

}  // namespace dydw
