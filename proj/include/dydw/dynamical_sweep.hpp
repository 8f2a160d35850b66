#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dydw/arrow_field.hpp"
#include "dydw/boxes_events.hpp"
#include "dydw/tau_interval_set.hpp"

namespace dydw {

enum class Verdict : std::uint8_t { proceed, accept, reject };

/// Decides a path's fate from its position at step k; called for k = 0, 1, ...
/// until it returns accept or reject, or k reaches n_steps.
using Classifier = std::function<Verdict(std::int64_t k, std::int64_t pos)>;

struct PathSpec {
    Site start;
    std::int64_t n_steps = 0;
    Classifier classify;
    bool accept_at_end = true;
};

/// Conjunction of per-path verdicts; an empty spec is always true.
struct PredicateSpec {
    std::vector<PathSpec> paths;
};

struct SweepOptions {
    std::int64_t max_path_steps = 0;  // 0 means unlimited
};

struct SweepStats {
    std::int64_t events = 0;         // valid ring events processed
    std::int64_t flips = 0;          // events that changed an on-path arrow
    std::int64_t steps_traced = 0;   // path steps traced, initial and re-traced
    double exposure = 0.0;           // sum over on-path sites of tau-time spent on a path
    std::int64_t windows = 0;

    SweepStats& operator+=(const SweepStats& o);
};

/// Exact set of tau in [0, tau_max) where the predicate holds.
[[nodiscard]] TauIntervalSet sweep_predicate(const ArrowField& field, const PredicateSpec& spec, double tau_max,
                                             SweepStats* stats = nullptr, const SweepOptions& opts = {});

/// Same, restricted to the given windows.
[[nodiscard]] TauIntervalSet sweep_predicate(const ArrowField& field, const PredicateSpec& spec,
                                             const TauIntervalSet& windows, SweepStats* stats = nullptr,
                                             const SweepOptions& opts = {});

/// Frozen-tau evaluation of the predicate by direct tracing.
[[nodiscard]] bool evaluate_predicate(const ArrowField& field, const PredicateSpec& spec, double tau);

[[nodiscard]] PathSpec box_event_spec(const BoxSpec& box, const BoxSpec& next);
[[nodiscard]] PredicateSpec confinement_spec(double j, double K1, double K2, std::int64_t horizon);
/// Path from the origin reaches `level` before coming back to 0, within the horizon.
[[nodiscard]] PredicateSpec exceedance_spec(std::int64_t level, std::int64_t horizon);
/// Path from the origin stays strictly above -level up to the horizon.
[[nodiscard]] PredicateSpec lower_barrier_spec(std::int64_t level, std::int64_t horizon);

/// E_0, ..., E_n for gamma = gamma(K); each box is swept only over the previous set.
[[nodiscard]] std::vector<TauIntervalSet> exceptional_sets_upto(const ArrowField& field, double K, int n_boxes,
                                                                double tau_max, SweepStats* stats = nullptr,
                                                                const SweepOptions& opts = {});
[[nodiscard]] TauIntervalSet exceptional_set_En(const ArrowField& field, double K, int n_boxes, double tau_max,
                                                SweepStats* stats = nullptr, const SweepOptions& opts = {});
[[nodiscard]] PredicateSpec En_spec(double K, int n_boxes);

[[nodiscard]] TauIntervalSet confinement_sweep(const ArrowField& field, double j, double K1, double K2,
                                               std::int64_t horizon, double tau_max, SweepStats* stats = nullptr,
                                               const SweepOptions& opts = {});

}  // namespace dydw
