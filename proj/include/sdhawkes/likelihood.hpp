#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "model.hpp"

namespace sdhawkes {

struct LikelihoodBreakdown {
    double transition_term = 0.0;  // sum of ln phi over in-window events
    double l_plus = 0.0;           // sum of ln lambda_{e_n}(t_n)
    double l_minus = 0.0;          // integral of the total intensity over the window
    bool zero_transition = false;  // an observed transition has probability zero
    double total = 0.0;            // transition_term + l_plus - l_minus, or -inf when flagged
};

// Gradient of l_plus - l_minus with respect to the kernel parameters. The
// transition term is separable and contributes nothing here.
struct LikelihoodGradient {
    std::vector<double> nu;     // [e]
    std::vector<double> alpha;  // [e'][x'][e]
    std::vector<double> beta;   // [e'][x'][e]
};

namespace detail {

struct TypeTerms {
    double l_plus = 0.0;
    double l_minus = 0.0;
    double d_nu = 0.0;            // d(l_plus - l_minus)/d nu
    std::vector<double> d_alpha;  // per source stream, d(l_plus - l_minus)
    std::vector<double> d_beta;
};

// Single pass over the events computing, for one target type, the excitation
// terms of the log likelihood on (t0, T]:
//
//   l_plus  = sum over in-window target events of ln(nu + sum_c alpha_c S_c)
//   l_minus = nu (T - t0) + sum_c sum_{i in c} (alpha_c/beta_c)
//                 (exp(-beta_c (max(t0, t_i) - t_i)) - exp(-beta_c (T - t_i)))
//
// S and S1 are maintained by the decay recursions; history events (t <= t0)
// enter only through them and through the l_minus bracket.
inline TypeTerms evaluate_type_terms(std::span<const double> times,
                                     std::span<const std::size_t> stream,
                                     std::span<const std::size_t> event_types, std::size_t target,
                                     double t0, double horizon, std::size_t n_streams, double nu,
                                     std::span<const double> alpha, std::span<const double> beta,
                                     bool with_gradient) {
    TypeTerms out;
    const double span_length = horizon - t0;
    out.l_minus = nu * span_length;
    if (with_gradient) {
        out.d_nu = -span_length;
        out.d_alpha.assign(n_streams, 0.0);
        out.d_beta.assign(n_streams, 0.0);
    }

    std::vector<double> s(n_streams, 0.0);
    std::vector<double> s1(with_gradient ? n_streams : 0, 0.0);

    double prev = times.empty() ? t0 : times.front();
    for (std::size_t n = 0; n < times.size(); ++n) {
        const double t = times[n];
        const double dt = t - prev;
        if (dt > 0.0) {
            for (std::size_t c = 0; c < n_streams; ++c) {
                const double factor = std::exp(-beta[c] * dt);
                if (with_gradient) s1[c] = factor * (s1[c] + dt * s[c]);
                s[c] *= factor;
            }
        }

        if (t > t0 && event_types[n] == target) {
            double lambda = nu;
            for (std::size_t c = 0; c < n_streams; ++c) lambda += alpha[c] * s[c];
            if (!(lambda > 0.0)) throw DataError("zero intensity at an observed event");
            out.l_plus += std::log(lambda);
            if (with_gradient) {
                const double inv = 1.0 / lambda;
                out.d_nu += inv;
                for (std::size_t c = 0; c < n_streams; ++c) {
                    out.d_alpha[c] += s[c] * inv;
                    out.d_beta[c] -= alpha[c] * s1[c] * inv;
                }
            }
        }

        // l_minus bracket of this event against the target's parameters.
        const std::size_t c = stream[n];
        const double a = alpha[c];
        const double b = beta[c];
        const double decay_to_end = std::exp(-b * (horizon - t));
        if (t > t0) {
            out.l_minus += (a / b) * (1.0 - decay_to_end);
            if (with_gradient) {
                out.d_alpha[c] -= (1.0 / b) * (1.0 - decay_to_end);
                out.d_beta[c] -= (a / b) * (horizon - t) * decay_to_end -
                                 (a / (b * b)) * (1.0 - decay_to_end);
            }
        } else {
            const double decay_to_start = std::exp(-b * (t0 - t));
            out.l_minus += (a / b) * (decay_to_start - decay_to_end);
            if (with_gradient) {
                out.d_alpha[c] -= (1.0 / b) * (decay_to_start - decay_to_end);
                out.d_beta[c] -=
                    (a / b) * ((horizon - t) * decay_to_end - (t0 - t) * decay_to_start) -
                    (a / (b * b)) * (decay_to_start - decay_to_end);
            }
        }

        s[c] += 1.0;
        prev = t;
    }
    return out;
}

// Per-event composite stream indices.
inline std::vector<std::size_t> stream_indices(const MarkedSequence& seq, const Dimensions& dims) {
    std::vector<std::size_t> out(seq.size());
    for (std::size_t n = 0; n < seq.size(); ++n) out[n] = dims.composite(seq.events[n], seq.states[n]);
    return out;
}

// Gathers the parameter slices feeding target type e into contiguous buffers.
inline void gather_target_slice(const ExpKernelParams& kernel, std::size_t target,
                                std::vector<double>& alpha, std::vector<double>& beta) {
    const std::size_t n_streams = kernel.n_event_types * kernel.n_states;
    alpha.resize(n_streams);
    beta.resize(n_streams);
    for (std::size_t c = 0; c < n_streams; ++c) {
        alpha[c] = kernel.alpha[c * kernel.n_event_types + target];
        beta[c] = kernel.beta[c * kernel.n_event_types + target];
    }
}

inline double transition_log_term(const SdHawkesModel& model, const MarkedSequence& seq,
                                  bool& zero_flag) {
    double term = 0.0;
    zero_flag = false;
    std::size_t previous = seq.initial_state;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        if (seq.times[n] > seq.window_start) {
            const double p = model.phi.at(seq.events[n], previous, seq.states[n]);
            if (p > 0.0)
                term += std::log(p);
            else
                zero_flag = true;
        }
        previous = seq.states[n];
    }
    return term;
}

}  // namespace detail

// Exact log likelihood on the sequence's window via the O(N) recursions.
// A zero-probability observed transition yields total = -infinity with the
// zero_transition flag set instead of an exception.
inline LikelihoodBreakdown log_likelihood(const SdHawkesModel& model, const MarkedSequence& seq) {
    require_valid(model);
    seq.check(model.dims);

    LikelihoodBreakdown out;
    out.transition_term = detail::transition_log_term(model, seq, out.zero_transition);

    const auto stream = detail::stream_indices(seq, model.dims);
    std::vector<double> alpha, beta;
    for (std::size_t e = 0; e < model.dims.n_event_types; ++e) {
        detail::gather_target_slice(model.kernel, e, alpha, beta);
        const auto terms = detail::evaluate_type_terms(
            seq.times, stream, seq.events, e, seq.window_start, seq.window_end,
            model.dims.n_composite(), model.kernel.nu[e], alpha, beta, false);
        out.l_plus += terms.l_plus;
        out.l_minus += terms.l_minus;
    }
    out.total = out.zero_transition ? -std::numeric_limits<double>::infinity()
                                    : out.transition_term + out.l_plus - out.l_minus;
    return out;
}

// Independent O(N^2) oracle: l_plus by direct double sums, l_minus by summing
// closed-form integrals over each inter-event interval. No recursions.
inline double log_likelihood_naive(const SdHawkesModel& model, const MarkedSequence& seq) {
    require_valid(model);
    seq.check(model.dims);

    bool zero_transition = false;
    const double transition_term = detail::transition_log_term(model, seq, zero_transition);
    if (zero_transition) return -std::numeric_limits<double>::infinity();

    const auto& kernel = model.kernel;
    const double t0 = seq.window_start;
    const double horizon = seq.window_end;

    double l_plus = 0.0;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        if (seq.times[n] <= t0) continue;
        const std::size_t e = seq.events[n];
        double lambda = kernel.nu[e];
        for (std::size_t i = 0; i < n; ++i) {
            const double a = kernel.a(seq.events[i], seq.states[i], e);
            const double b = kernel.b(seq.events[i], seq.states[i], e);
            lambda += a * std::exp(-b * (seq.times[n] - seq.times[i]));
        }
        l_plus += std::log(lambda);
    }

    // Integration grid: window start, every in-window event time, window end.
    std::vector<double> grid;
    grid.push_back(t0);
    for (std::size_t n = seq.first_in_window(); n < seq.size(); ++n)
        if (seq.times[n] < horizon) grid.push_back(seq.times[n]);
    grid.push_back(horizon);

    double l_minus = 0.0;
    for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
        const double a0 = grid[g];
        const double b0 = grid[g + 1];
        for (std::size_t e = 0; e < model.dims.n_event_types; ++e) {
            double piece = kernel.nu[e] * (b0 - a0);
            for (std::size_t i = 0; i < seq.size() && seq.times[i] <= a0; ++i) {
                const double a = kernel.a(seq.events[i], seq.states[i], e);
                const double b = kernel.b(seq.events[i], seq.states[i], e);
                piece += (a / b) * (std::exp(-b * (a0 - seq.times[i])) - std::exp(-b * (b0 - seq.times[i])));
            }
            l_minus += piece;
        }
    }

    return transition_term + l_plus - l_minus;
}

// Analytic gradient of l_plus - l_minus with respect to every nu, alpha, beta.
inline LikelihoodGradient gradient(const SdHawkesModel& model, const MarkedSequence& seq) {
    require_valid(model);
    seq.check(model.dims);

    const std::size_t n_events = model.dims.n_event_types;
    const std::size_t n_streams = model.dims.n_composite();
    LikelihoodGradient out;
    out.nu.assign(n_events, 0.0);
    out.alpha.assign(n_streams * n_events, 0.0);
    out.beta.assign(n_streams * n_events, 0.0);

    const auto stream = detail::stream_indices(seq, model.dims);
    std::vector<double> alpha, beta;
    for (std::size_t e = 0; e < n_events; ++e) {
        detail::gather_target_slice(model.kernel, e, alpha, beta);
        const auto terms = detail::evaluate_type_terms(
            seq.times, stream, seq.events, e, seq.window_start, seq.window_end, n_streams,
            model.kernel.nu[e], alpha, beta, true);
        out.nu[e] = terms.d_nu;
        for (std::size_t c = 0; c < n_streams; ++c) {
            out.alpha[c * n_events + e] = terms.d_alpha[c];
            out.beta[c * n_events + e] = terms.d_beta[c];
        }
    }
    return out;
}

struct TransitionMle {
    TransitionDistribution phi;
    // One flag per (event, from-state) row; false for rows never observed,
    // which are filled uniformly.
    std::vector<std::uint8_t> row_observed;

    bool observed(std::size_t e, std::size_t x) const { return row_observed[e * phi.n_states + x] != 0; }
};

// Closed-form maximum likelihood estimate of the transition distribution:
// empirical transition frequencies over the in-window events.
inline TransitionMle transition_mle(const MarkedSequence& seq, const Dimensions& dims) {
    seq.check(dims);
    TransitionMle out;
    out.phi = TransitionDistribution(dims.n_event_types, dims.n_states, 0.0);
    out.row_observed.assign(dims.n_event_types * dims.n_states, 0);

    std::vector<double> row_counts(dims.n_event_types * dims.n_states, 0.0);
    std::size_t previous = seq.initial_state;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        if (seq.times[n] > seq.window_start) {
            const std::size_t e = seq.events[n];
            out.phi.at(e, previous, seq.states[n]) += 1.0;
            row_counts[e * dims.n_states + previous] += 1.0;
        }
        previous = seq.states[n];
    }

    for (std::size_t e = 0; e < dims.n_event_types; ++e) {
        for (std::size_t x = 0; x < dims.n_states; ++x) {
            const double count = row_counts[e * dims.n_states + x];
            if (count > 0.0) {
                out.row_observed[e * dims.n_states + x] = 1;
                for (std::size_t y = 0; y < dims.n_states; ++y) out.phi.at(e, x, y) /= count;
            } else {
                for (std::size_t y = 0; y < dims.n_states; ++y)
                    out.phi.at(e, x, y) = 1.0 / static_cast<double>(dims.n_states);
            }
        }
    }
    return out;
}

}  // namespace sdhawkes
