#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "likelihood.hpp"
#include "model.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace sdhawkes {

struct FitConfig {
    int n_random_starts = 3;
    // Warm starts (e.g. an ordinary-Hawkes fit or the previous day's fit);
    // tried before the random ones. Shapes must match the fitted dimensions.
    std::vector<ExpKernelParams> warm_starts;
    int max_iterations = 500;
    double gradient_tolerance = 1e-7;
    double nu_lower = 1e-8;
    double alpha_lower = 0.0;
    double beta_lower = 1e-8;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

struct StartTrace {
    std::size_t event_type = 0;
    int start_id = 0;
    std::string start_kind;  // "warm" or "random"
    int iterations = 0;
    int evaluations = 0;
    double final_value = -std::numeric_limits<double>::infinity();  // l_plus - l_minus piece
    bool converged = false;
};

struct EstimateResult {
    SdHawkesModel model;
    LikelihoodBreakdown likelihood;
    std::vector<StartTrace> traces;
    std::vector<int> chosen_start;             // per event type
    std::vector<std::uint8_t> phi_row_observed;  // from transition_mle, [e][x]
};

struct EstimationError : NumericalError {
    EstimationError(const std::string& message, std::vector<StartTrace> run_traces)
        : NumericalError(message), traces(std::move(run_traces)) {}
    std::vector<StartTrace> traces;
};

// Tiles a single-state kernel across n_states, so an ordinary-Hawkes fit can
// seed a state-dependent one as a warm start.
inline ExpKernelParams broadcast_states(const ExpKernelParams& flat, std::size_t n_states) {
    if (flat.n_states != 1) throw DataError("broadcast_states expects a single-state kernel");
    ExpKernelParams out(flat.n_event_types, n_states);
    out.nu = flat.nu;
    for (std::size_t ep = 0; ep < flat.n_event_types; ++ep)
        for (std::size_t x = 0; x < n_states; ++x)
            for (std::size_t e = 0; e < flat.n_event_types; ++e) {
                out.a(ep, x, e) = flat.a(ep, 0, e);
                out.b(ep, x, e) = flat.b(ep, 0, e);
            }
    return out;
}

namespace detail {

// Random starting point for one event-type subproblem, drawn log-uniformly:
// nu from [0.1, 10] * (event rate / d_e), beta from [1e-1, 1e5], and alpha as
// a per-stream kernel norm from [1e-2, 1e2] / (2 * n_streams) times beta.
inline std::vector<double> random_subproblem_start(Xoshiro256pp& rng, std::size_t n_streams,
                                                   double rate_scale, std::size_t n_event_types) {
    const auto log_uniform = [&](double lo, double hi) {
        return std::exp(std::log(lo) + rng.uniform01() * (std::log(hi) - std::log(lo)));
    };
    std::vector<double> x(1 + 2 * n_streams);
    x[0] = log_uniform(0.1, 10.0) * rate_scale / static_cast<double>(n_event_types);
    for (std::size_t c = 0; c < n_streams; ++c) {
        const double beta = log_uniform(1e-1, 1e5);
        const double norm = log_uniform(1e-2, 1e2) / (2.0 * static_cast<double>(n_streams));
        x[1 + n_streams + c] = beta;
        x[1 + c] = norm * beta;
    }
    return x;
}

inline std::vector<double> subproblem_start_from_kernel(const ExpKernelParams& kernel,
                                                        std::size_t target) {
    const std::size_t n_streams = kernel.n_event_types * kernel.n_states;
    std::vector<double> x(1 + 2 * n_streams);
    x[0] = kernel.nu[target];
    for (std::size_t c = 0; c < n_streams; ++c) {
        x[1 + c] = kernel.alpha[c * kernel.n_event_types + target];
        x[1 + n_streams + c] = kernel.beta[c * kernel.n_event_types + target];
    }
    return x;
}

struct SubproblemSolution {
    std::vector<double> x;
    double value = -std::numeric_limits<double>::infinity();
    StartTrace trace;
};

}  // namespace detail

// Maximum likelihood fit: closed-form transition estimate plus one
// bound-constrained numerical maximisation per event type, each run from every
// start; the best final value wins, ties broken by the lowest start id.
inline EstimateResult fit(const MarkedSequence& seq, const Dimensions& dims,
                          const FitConfig& config = {}) {
    seq.check(dims);
    if (config.n_random_starts < 0) throw DataError("n_random_starts must be >= 0");
    for (const auto& warm : config.warm_starts)
        if (warm.n_event_types != dims.n_event_types || warm.n_states != dims.n_states)
            throw DataError("warm start shape differs from the fitted dimensions");

    const std::size_t n_events = dims.n_event_types;
    const std::size_t n_streams = dims.n_composite();
    const auto stream = detail::stream_indices(seq, dims);
    const double span_length = seq.window_end - seq.window_start;
    const double rate_scale =
        std::max<double>(seq.n_in_window(), 1) / span_length;

    const int n_starts = static_cast<int>(config.warm_starts.size()) + config.n_random_starts;
    if (n_starts == 0) throw DataError("fit requires at least one start");

    BoundedMinimizeOptions opt;
    opt.max_iterations = config.max_iterations;
    opt.gradient_tolerance = config.gradient_tolerance;

    std::vector<double> lower(1 + 2 * n_streams, config.beta_lower);
    lower[0] = config.nu_lower;
    for (std::size_t c = 0; c < n_streams; ++c) lower[1 + c] = config.alpha_lower;

    std::vector<detail::SubproblemSolution> solutions(
        static_cast<std::size_t>(n_starts) * n_events);

    parallel_for(solutions.size(), config.jobs, [&](std::size_t task) {
        const std::size_t e = task / static_cast<std::size_t>(n_starts);
        const int start_id = static_cast<int>(task % static_cast<std::size_t>(n_starts));

        std::vector<double> x0;
        std::string kind;
        if (start_id < static_cast<int>(config.warm_starts.size())) {
            x0 = detail::subproblem_start_from_kernel(config.warm_starts[start_id], e);
            kind = "warm";
        } else {
            Xoshiro256pp rng(derive_seed(config.seed, e * 7919 + static_cast<std::size_t>(start_id)));
            x0 = detail::random_subproblem_start(rng, n_streams, rate_scale, n_events);
            kind = "random";
        }

        const BoundedObjective objective = [&](std::span<const double> x, std::span<double> grad) {
            const auto terms = detail::evaluate_type_terms(
                seq.times, stream, seq.events, e, seq.window_start, seq.window_end, n_streams,
                x[0], x.subspan(1, n_streams), x.subspan(1 + n_streams, n_streams), true);
            grad[0] = -terms.d_nu;
            for (std::size_t c = 0; c < n_streams; ++c) {
                grad[1 + c] = -terms.d_alpha[c];
                grad[1 + n_streams + c] = -terms.d_beta[c];
            }
            return -(terms.l_plus - terms.l_minus);
        };

        auto run = minimize_with_lower_bounds(objective, std::move(x0), lower, opt);

        detail::SubproblemSolution solution;
        solution.x = std::move(run.x);
        solution.value = std::isfinite(run.value) ? -run.value
                                                  : -std::numeric_limits<double>::infinity();
        solution.trace = StartTrace{e,           start_id,       kind, run.iterations,
                                    run.evaluations, solution.value, run.converged};
        solutions[task] = std::move(solution);
    });

    EstimateResult result;
    result.model.dims = dims;
    result.model.kernel = ExpKernelParams(n_events, dims.n_states);
    result.chosen_start.assign(n_events, -1);

    for (std::size_t e = 0; e < n_events; ++e) {
        int best = -1;
        for (int s = 0; s < n_starts; ++s) {
            const auto& candidate = solutions[e * n_starts + static_cast<std::size_t>(s)];
            result.traces.push_back(candidate.trace);
            if (!std::isfinite(candidate.value)) continue;
            if (best < 0 || candidate.value > solutions[e * n_starts + best].value) best = s;
        }
        if (best < 0)
            throw EstimationError("no start produced a finite likelihood for event type " +
                                      std::to_string(e),
                                  result.traces);
        const auto& chosen = solutions[e * n_starts + static_cast<std::size_t>(best)];
        result.chosen_start[e] = best;
        result.model.kernel.nu[e] = chosen.x[0];
        for (std::size_t c = 0; c < n_streams; ++c) {
            result.model.kernel.alpha[c * n_events + e] = chosen.x[1 + c];
            result.model.kernel.beta[c * n_events + e] = chosen.x[1 + n_streams + c];
        }
    }

    const auto transition = transition_mle(seq, dims);
    result.model.phi = transition.phi;
    result.phi_row_observed = transition.row_observed;
    result.likelihood = log_likelihood(result.model, seq);
    return result;
}

// Ordinary Hawkes fit: the same sequence with the state dimension collapsed
// to one. Serves as a comparison baseline and, applied to a lifted sequence,
// estimates the event-space alternative model.
inline EstimateResult fit_ordinary(const MarkedSequence& seq, const Dimensions& dims,
                                   const FitConfig& config = {}) {
    Dimensions flat;
    flat.n_event_types = dims.n_event_types;
    flat.n_states = 1;
    flat.event_labels = dims.event_labels;
    flat.state_labels = {"*"};

    MarkedSequence collapsed = seq;
    std::fill(collapsed.states.begin(), collapsed.states.end(), 0);
    collapsed.initial_state = 0;

    FitConfig flat_config = config;
    flat_config.warm_starts.clear();
    for (const auto& warm : config.warm_starts)
        if (warm.n_states == 1 && warm.n_event_types == dims.n_event_types)
            flat_config.warm_starts.push_back(warm);

    return fit(collapsed, flat, flat_config);
}

}  // namespace sdhawkes
