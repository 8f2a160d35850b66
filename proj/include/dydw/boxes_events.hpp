#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dydw/arrow_field.hpp"
#include "dydw/core.hpp"
#include "dydw/rng.hpp"

namespace dydw {

/// Box R_k: lower-left corner region anchored at z_bar = (x, t), side
/// parameter d (even), height d^2 and width 2d.
struct BoxSpec {
    int k = 0;
    wide_int d = 2;
    wide_int x = 0;
    wide_int t = 0;

    [[nodiscard]] wide_int height() const { return d * d; }
    [[nodiscard]] wide_int width() const { return 2 * d; }
    [[nodiscard]] wide_int left_boundary() const { return x - d; }
    [[nodiscard]] Site z_bar() const;
};

[[nodiscard]] wide_int box_side(double gamma, int k);
[[nodiscard]] BoxSpec first_box();
[[nodiscard]] BoxSpec next_box(double gamma, const BoxSpec& b);
[[nodiscard]] std::vector<BoxSpec> box_sequence(double gamma, int n);

/// A_k at dynamical time tau: the path from z_bar_k stays strictly right of
/// x_k - d_k during the box and ends strictly right of x_{k+1}.
[[nodiscard]] bool event_Ak(const ArrowField& field, double tau, double gamma, int k);

/// Exact lattice probability of A_k for a simple symmetric walk.
[[nodiscard]] double exact_PAk(double gamma, int k);
[[nodiscard]] double exact_PA_side(std::int64_t d);

/// Brownian limit of P(A_k): P(B(1) > 1, inf B > -1).
[[nodiscard]] double brownian_PA();

enum class PAkMethod { trace, walk, bridge };

[[nodiscard]] PAkMethod parse_pak_method(const std::string& s);
[[nodiscard]] std::string to_string(PAkMethod m);

struct Estimate {
    double p_hat = 0.0;
    double se = 0.0;
    std::int64_t successes = 0;
    std::int64_t replicates = 0;
    double lower = 0.0;  // one-sided Clopper-Pearson bounds at the 3-sigma level
    double upper = 1.0;
};

[[nodiscard]] Estimate make_estimate(std::int64_t successes, std::int64_t replicates);

/// Monte Carlo estimate of P(A_k); replicate i uses a seed derived from
/// (seed, gamma, k, i) so the result does not depend on `workers`.
[[nodiscard]] Estimate estimate_PAk(double gamma, int k, std::int64_t replicates, std::uint64_t seed,
                                    PAkMethod method = PAkMethod::bridge, int workers = 1);

/// One sample of A_k's indicator for a walk of d^2 steps from 0.
bool sample_box_event_walk(std::int64_t d, Engine& eng);
bool sample_box_event_bridge(std::int64_t d, Engine& eng);

struct Gamma0Cell {
    double K = 0.0;
    double gamma = 0.0;
    int k = 0;
    Estimate estimate;
};

struct Gamma0Result {
    double value = 0.0;       // max of 1 / p_hat over the grid
    double upper_conf = 0.0;  // max of 1 / lower bound; infinite if some lower bound is 0
    std::vector<Gamma0Cell> cells;
};

[[nodiscard]] Gamma0Result gamma0_hat(const std::vector<double>& K_grid, const std::vector<int>& ks,
                                      std::int64_t replicates, std::uint64_t seed,
                                      PAkMethod method = PAkMethod::bridge, int workers = 1);

}  // namespace dydw
