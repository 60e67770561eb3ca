#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"

namespace sdhawkes {

inline constexpr double kProbabilityRowTolerance = 1e-12;

// Event and state space sizes with display labels. Indices are 0-based
// everywhere; labels are only used at the serialisation boundary.
struct Dimensions {
    std::size_t n_event_types = 0;
    std::size_t n_states = 0;
    std::vector<std::string> event_labels;
    std::vector<std::string> state_labels;

    static Dimensions make(std::size_t n_event_types, std::size_t n_states) {
        Dimensions d;
        d.n_event_types = n_event_types;
        d.n_states = n_states;
        for (std::size_t e = 0; e < n_event_types; ++e) d.event_labels.push_back(std::to_string(e));
        for (std::size_t x = 0; x < n_states; ++x) d.state_labels.push_back(std::to_string(x));
        return d;
    }

    // Event-major composite index of the lifted process: (e, x) -> e*n_states + x.
    std::size_t composite(std::size_t e, std::size_t x) const { return e * n_states + x; }
    std::size_t n_composite() const { return n_event_types * n_states; }
};

// Per-event-type Markov matrices. at(e, from, to) is the probability that the
// state jumps from `from` to `to` at an event of type e.
struct TransitionDistribution {
    std::size_t n_event_types = 0;
    std::size_t n_states = 0;
    std::vector<double> values;  // [e][from][to]

    TransitionDistribution() = default;

    TransitionDistribution(std::size_t events, std::size_t states, double fill)
        : n_event_types(events), n_states(states), values(events * states * states, fill) {}

    static TransitionDistribution uniform(std::size_t events, std::size_t states) {
        return TransitionDistribution(events, states, 1.0 / static_cast<double>(states));
    }

    static TransitionDistribution identity(std::size_t events, std::size_t states) {
        TransitionDistribution phi(events, states, 0.0);
        for (std::size_t e = 0; e < events; ++e)
            for (std::size_t x = 0; x < states; ++x) phi.at(e, x, x) = 1.0;
        return phi;
    }

    double at(std::size_t e, std::size_t from, std::size_t to) const {
        return values[(e * n_states + from) * n_states + to];
    }
    double& at(std::size_t e, std::size_t from, std::size_t to) {
        return values[(e * n_states + from) * n_states + to];
    }
};

// Exponential kernel parameters. alpha and beta are stored source-major and
// indexed by the composite source stream c = (e', x') and the target type e,
// so that the per-target slice has stride n_event_types.
struct ExpKernelParams {
    std::size_t n_event_types = 0;
    std::size_t n_states = 0;
    std::vector<double> nu;     // [e], events per unit time
    std::vector<double> alpha;  // [e'][x'][e], events per unit time
    std::vector<double> beta;   // [e'][x'][e], 1/time

    ExpKernelParams() = default;

    ExpKernelParams(std::size_t events, std::size_t states)
        : n_event_types(events),
          n_states(states),
          nu(events, 0.0),
          alpha(events * states * events, 0.0),
          beta(events * states * events, 1.0) {}

    std::size_t index(std::size_t source_event, std::size_t source_state, std::size_t target) const {
        return (source_event * n_states + source_state) * n_event_types + target;
    }

    double a(std::size_t ep, std::size_t xp, std::size_t e) const { return alpha[index(ep, xp, e)]; }
    double& a(std::size_t ep, std::size_t xp, std::size_t e) { return alpha[index(ep, xp, e)]; }
    double b(std::size_t ep, std::size_t xp, std::size_t e) const { return beta[index(ep, xp, e)]; }
    double& b(std::size_t ep, std::size_t xp, std::size_t e) { return beta[index(ep, xp, e)]; }
};

struct SdHawkesModel {
    Dimensions dims;
    TransitionDistribution phi;
    ExpKernelParams kernel;
};

// A realisation {(t_n, e_n, x_n)} on the window (window_start, window_end].
// Events with time <= window_start form an optional history prefix that only
// conditions the intensity.
struct MarkedSequence {
    std::vector<double> times;        // strictly increasing, all <= window_end
    std::vector<std::size_t> events;  // type indices
    std::vector<std::size_t> states;  // post-event state indices
    std::size_t initial_state = 0;    // state before the first recorded event
    double window_start = 0.0;
    double window_end = 0.0;

    std::size_t size() const { return times.size(); }

    // Index of the first event strictly inside the window.
    std::size_t first_in_window() const {
        return static_cast<std::size_t>(
            std::upper_bound(times.begin(), times.end(), window_start) - times.begin());
    }

    std::size_t n_in_window() const { return size() - first_in_window(); }

    // State in effect at the window start: the state after the last prefix
    // event, or initial_state when there is no prefix.
    std::size_t state_at_window_start() const {
        const std::size_t k = first_in_window();
        return k == 0 ? initial_state : states[k - 1];
    }

    void check(const Dimensions& dims) const {
        if (events.size() != times.size() || states.size() != times.size())
            throw DataError("sequence arrays have mismatched lengths");
        if (!(window_start < window_end)) throw DataError("sequence window is empty");
        for (std::size_t n = 0; n < times.size(); ++n) {
            if (!std::isfinite(times[n])) throw DataError("non-finite event time");
            if (n > 0 && !(times[n] > times[n - 1]))
                throw DataError("event times are not strictly increasing");
            if (times[n] > window_end) throw DataError("event time beyond the window end");
            if (events[n] >= dims.n_event_types) throw DataError("event index out of range");
            if (states[n] >= dims.n_states) throw DataError("state index out of range");
        }
        if (initial_state >= dims.n_states) throw DataError("initial state out of range");
    }
};

// Restricts the window to (t0, T]. Events at or before t0 become the history
// prefix; events after T are dropped.
inline MarkedSequence rewindow(const MarkedSequence& seq, double t0, double horizon) {
    if (!(t0 < horizon)) throw DataError("rewindow: empty window");
    MarkedSequence out = seq;
    out.window_start = t0;
    out.window_end = horizon;
    const std::size_t keep = static_cast<std::size_t>(
        std::upper_bound(out.times.begin(), out.times.end(), horizon) - out.times.begin());
    out.times.resize(keep);
    out.events.resize(keep);
    out.states.resize(keep);
    return out;
}

// Returns the list of violated invariants; empty when the model is valid.
inline std::vector<std::string> validate(const SdHawkesModel& model) {
    std::vector<std::string> report;
    const auto& d = model.dims;

    if (d.n_event_types < 1) report.push_back("n_event_types must be >= 1");
    if (d.n_states < 1) report.push_back("n_states must be >= 1");
    if (d.event_labels.size() != d.n_event_types)
        report.push_back("event label count differs from n_event_types");
    if (d.state_labels.size() != d.n_states)
        report.push_back("state label count differs from n_states");
    {
        std::unordered_set<std::string> seen(d.event_labels.begin(), d.event_labels.end());
        if (seen.size() != d.event_labels.size()) report.push_back("duplicate event labels");
        seen = std::unordered_set<std::string>(d.state_labels.begin(), d.state_labels.end());
        if (seen.size() != d.state_labels.size()) report.push_back("duplicate state labels");
    }

    const auto& phi = model.phi;
    if (phi.n_event_types != d.n_event_types || phi.n_states != d.n_states ||
        phi.values.size() != d.n_event_types * d.n_states * d.n_states) {
        report.push_back("transition distribution shape inconsistent with dimensions");
    } else {
        for (std::size_t e = 0; e < d.n_event_types; ++e) {
            for (std::size_t x = 0; x < d.n_states; ++x) {
                double row_sum = 0.0;
                for (std::size_t y = 0; y < d.n_states; ++y) {
                    const double p = phi.at(e, x, y);
                    if (!(p >= 0.0 && p <= 1.0)) {
                        report.push_back("phi entry outside [0, 1] at event " + std::to_string(e) +
                                         " row " + std::to_string(x));
                        row_sum = 1.0;  // suppress the row-sum message for garbage rows
                        break;
                    }
                    row_sum += p;
                }
                if (std::abs(row_sum - 1.0) > kProbabilityRowTolerance)
                    report.push_back("phi row sum != 1 at event " + std::to_string(e) + " row " +
                                     std::to_string(x));
            }
        }
    }

    const auto& k = model.kernel;
    const std::size_t n_coeff = d.n_event_types * d.n_states * d.n_event_types;
    if (k.n_event_types != d.n_event_types || k.n_states != d.n_states ||
        k.nu.size() != d.n_event_types || k.alpha.size() != n_coeff || k.beta.size() != n_coeff) {
        report.push_back("kernel parameter shapes inconsistent with dimensions");
        return report;
    }
    for (std::size_t e = 0; e < d.n_event_types; ++e)
        if (!(k.nu[e] > 0.0)) report.push_back("base rate not strictly positive at event " + std::to_string(e));
    for (std::size_t i = 0; i < n_coeff; ++i) {
        if (!(k.alpha[i] >= 0.0)) {
            report.push_back("negative impact coefficient");
            break;
        }
    }
    for (std::size_t i = 0; i < n_coeff; ++i) {
        if (!(k.beta[i] > 0.0)) {
            report.push_back("decay coefficient not strictly positive");
            break;
        }
    }
    return report;
}

inline void require_valid(const SdHawkesModel& model) {
    const auto report = validate(model);
    if (!report.empty()) throw DataError("invalid model: " + report.front());
}

inline std::size_t composite_index(std::size_t e, std::size_t x, const Dimensions& dims) {
    if (e >= dims.n_event_types || x >= dims.n_states)
        throw DataError("composite_index: event or state out of range");
    return dims.composite(e, x);
}

inline Dimensions lifted_dimensions(const Dimensions& dims) {
    Dimensions out;
    out.n_event_types = dims.n_composite();
    out.n_states = 1;
    out.state_labels = {"*"};
    out.event_labels.reserve(out.n_event_types);
    for (std::size_t e = 0; e < dims.n_event_types; ++e)
        for (std::size_t x = 0; x < dims.n_states; ++x)
            out.event_labels.push_back(dims.event_labels[e] + ":" + dims.state_labels[x]);
    return out;
}

// Lifts (events, states) to the n_event_types * n_states composite marks of
// the ordinary point process that counts (event, post-state) pairs.
inline MarkedSequence lift_sequence(const MarkedSequence& seq, const Dimensions& dims) {
    seq.check(dims);
    MarkedSequence out;
    out.times = seq.times;
    out.events.reserve(seq.size());
    for (std::size_t n = 0; n < seq.size(); ++n)
        out.events.push_back(composite_index(seq.events[n], seq.states[n], dims));
    out.states.assign(seq.size(), 0);
    out.initial_state = 0;
    out.window_start = seq.window_start;
    out.window_end = seq.window_end;
    return out;
}

// Inverse of lift_sequence. The lifted mark drops the pre-first-event state,
// so it is supplied separately.
inline MarkedSequence unlift_sequence(const MarkedSequence& lifted, const Dimensions& dims,
                                      std::size_t initial_state = 0) {
    MarkedSequence out;
    out.times = lifted.times;
    out.events.reserve(lifted.size());
    out.states.reserve(lifted.size());
    for (std::size_t n = 0; n < lifted.size(); ++n) {
        const std::size_t composite = lifted.events[n];
        if (composite >= dims.n_composite()) throw DataError("composite event index out of range");
        out.events.push_back(composite / dims.n_states);
        out.states.push_back(composite % dims.n_states);
    }
    out.initial_state = initial_state;
    out.window_start = lifted.window_start;
    out.window_end = lifted.window_end;
    return out;
}

struct StabilityCondition {
    std::size_t event = 0;
    std::size_t state = 0;
    double kernel_mass = 0.0;     // sum over (e', x') of the full kernel norm into `event`
    double bound = 0.0;           // (max_{x'} phi_event(x', state))^-1
    bool satisfied = false;
    double margin = 0.0;          // bound - kernel_mass
};

struct StabilityReport {
    bool kernels_bounded = true;  // always true for exponential kernels
    std::vector<StabilityCondition> integral_conditions;  // one per (event, state)

    bool all_satisfied() const {
        for (const auto& c : integral_conditions)
            if (!c.satisfied) return false;
        return true;
    }
};

inline StabilityReport check_stability(const SdHawkesModel& model) {
    require_valid(model);
    const auto& d = model.dims;
    StabilityReport report;
    report.kernels_bounded = true;

    for (std::size_t e = 0; e < d.n_event_types; ++e) {
        double mass = 0.0;
        for (std::size_t ep = 0; ep < d.n_event_types; ++ep)
            for (std::size_t xp = 0; xp < d.n_states; ++xp)
                mass += model.kernel.a(ep, xp, e) / model.kernel.b(ep, xp, e);
        for (std::size_t x = 0; x < d.n_states; ++x) {
            double max_entry = 0.0;
            for (std::size_t xp = 0; xp < d.n_states; ++xp)
                max_entry = std::max(max_entry, model.phi.at(e, xp, x));
            StabilityCondition c;
            c.event = e;
            c.state = x;
            c.kernel_mass = mass;
            c.bound = max_entry > 0.0 ? 1.0 / max_entry : std::numeric_limits<double>::infinity();
            c.satisfied = mass < c.bound;
            c.margin = c.bound - mass;
            report.integral_conditions.push_back(c);
        }
    }
    return report;
}

}  // namespace sdhawkes
