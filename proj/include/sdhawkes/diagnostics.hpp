#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "intensity.hpp"
#include "model.hpp"

namespace sdhawkes {

// Time-change residuals of a fitted model over the sequence window. Under the
// true model every stream is i.i.d. Exp(1). Streams are anchored at the
// window start, so the first residual integrates from t0.
struct ResidualSet {
    // Event residuals: one list per event type, one entry per in-window event
    // of that type.
    std::vector<std::vector<double>> event_residuals;
    // Total residuals: one list per (event, state) stream, empty and flagged
    // when the stream has fewer than two in-window events.
    std::vector<std::vector<double>> total_residuals;
    std::vector<std::uint8_t> total_low_count;

    // Integrated intensities over the whole window, for cross-checks against
    // the likelihood integral.
    std::vector<double> integrated_event_intensity;  // [e]
    std::vector<double> integrated_total_intensity;  // [e][x]

    std::size_t n_event_types = 0;
    std::size_t n_states = 0;
};

namespace detail {

inline ResidualSet compute_residuals(const SdHawkesModel& model, const MarkedSequence& seq,
                                     bool want_event, bool want_total) {
    require_valid(model);
    seq.check(model.dims);

    const std::size_t n_events = model.dims.n_event_types;
    const std::size_t n_states = model.dims.n_states;
    const std::size_t n_streams = n_events * n_states;
    const double t0 = seq.window_start;

    ResidualSet out;
    out.n_event_types = n_events;
    out.n_states = n_states;
    out.event_residuals.resize(want_event ? n_events : 0);
    out.total_residuals.resize(want_total ? n_streams : 0);
    out.total_low_count.assign(want_total ? n_streams : 0, 0);
    out.integrated_event_intensity.assign(n_events, 0.0);
    out.integrated_total_intensity.assign(n_streams, 0.0);

    const double first_time = seq.times.empty() ? t0 : std::min(seq.times.front(), t0);
    IntensityState state(model, seq.initial_state, first_time);

    // Replay the history prefix.
    std::size_t n = 0;
    while (n < seq.size() && seq.times[n] <= t0) {
        state.advance(seq.times[n] - state.current_time());
        state.on_event(seq.events[n], seq.states[n]);
        ++n;
    }
    state.advance(t0 - state.current_time());

    // Cumulative integrals from t0 of lambda_e and of the lifted intensities.
    std::vector<double> base_mark(n_events);
    for (std::size_t e = 0; e < n_events; ++e) base_mark[e] = state.integrated_intensity(e);
    std::vector<double> event_cum(n_events, 0.0);
    std::vector<double> lifted_cum(n_streams, 0.0);
    std::vector<double> event_last(n_events, 0.0);
    std::vector<double> lifted_last(n_streams, 0.0);

    const auto accumulate_interval_to = [&](double t) {
        const std::size_t state_before = state.current_state();
        state.advance(t - state.current_time());
        for (std::size_t e = 0; e < n_events; ++e) {
            const double cum = state.integrated_intensity(e) - base_mark[e];
            const double delta = cum - event_cum[e];
            event_cum[e] = cum;
            for (std::size_t x = 0; x < n_states; ++x)
                lifted_cum[e * n_states + x] += model.phi.at(e, state_before, x) * delta;
        }
    };

    for (; n < seq.size(); ++n) {
        accumulate_interval_to(seq.times[n]);
        const std::size_t e = seq.events[n];
        const std::size_t x = seq.states[n];
        if (want_event) {
            out.event_residuals[e].push_back(event_cum[e] - event_last[e]);
            event_last[e] = event_cum[e];
        }
        if (want_total) {
            const std::size_t c = e * n_states + x;
            out.total_residuals[c].push_back(lifted_cum[c] - lifted_last[c]);
            lifted_last[c] = lifted_cum[c];
        }
        state.on_event(e, x);
    }
    accumulate_interval_to(seq.window_end);

    out.integrated_event_intensity = event_cum;
    out.integrated_total_intensity = lifted_cum;

    if (want_total) {
        for (std::size_t c = 0; c < n_streams; ++c) {
            if (out.total_residuals[c].size() < 2) {
                out.total_residuals[c].clear();
                out.total_low_count[c] = 1;
            }
        }
    }
    return out;
}

}  // namespace detail

inline ResidualSet event_residuals(const SdHawkesModel& model, const MarkedSequence& seq) {
    return detail::compute_residuals(model, seq, true, false);
}

inline ResidualSet total_residuals(const SdHawkesModel& model, const MarkedSequence& seq) {
    return detail::compute_residuals(model, seq, false, true);
}

inline ResidualSet residuals(const SdHawkesModel& model, const MarkedSequence& seq) {
    return detail::compute_residuals(model, seq, true, true);
}

// Q-Q points against Exp(1) at plotting positions (i - 0.5)/n:
// (theoretical quantile, empirical quantile), sorted.
inline std::vector<std::pair<double, double>> qq_points(std::span<const double> residuals) {
    std::vector<double> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        out.emplace_back(-std::log1p(-p), sorted[i]);
    }
    return out;
}

namespace detail {

// Survival function of the Kolmogorov distribution, Q(lam) = P(K > lam).
inline double kolmogorov_survival(double lam) {
    if (lam <= 0.0) return 1.0;
    if (lam < 1.18) {
        // Complementary theta-series form, accurate for small lam.
        const double v = M_PI * M_PI / (8.0 * lam * lam);
        double cdf = 0.0;
        for (int k = 1; k <= 9; k += 2) cdf += std::exp(-static_cast<double>(k) * k * v);
        cdf *= std::sqrt(2.0 * M_PI) / lam;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double q = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lam * lam);
        q += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * q, 0.0, 1.0);
}

}  // namespace detail

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// One-sample Kolmogorov-Smirnov test against Exp(1), asymptotic p-value.
inline KsResult ks_exp1(std::span<const double> residuals) {
    if (residuals.size() < 2) throw DataError("ks_exp1 needs at least two residuals");
    std::vector<double> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = -std::expm1(-sorted[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - cdf);
        d = std::max(d, cdf - static_cast<double>(i) / n);
    }
    KsResult out;
    out.statistic = d;
    out.n = sorted.size();
    out.p_value = detail::kolmogorov_survival(std::sqrt(n) * d);
    return out;
}

struct Correlogram {
    std::vector<double> acf;  // lags 1..max_lag
    bool zero_variance = false;
};

inline Correlogram correlogram(std::span<const double> residuals, std::size_t max_lag) {
    if (residuals.size() < 2) throw DataError("correlogram needs at least two residuals");
    const std::size_t n = residuals.size();
    double mean = 0.0;
    for (double r : residuals) mean += r;
    mean /= static_cast<double>(n);
    double variance = 0.0;
    for (double r : residuals) variance += (r - mean) * (r - mean);

    Correlogram out;
    // Constant inputs accumulate rounding noise of order (n * eps * mean)^2.
    const double floor = 1e-12 * std::max(1.0, std::abs(mean));
    if (!(variance > static_cast<double>(n) * floor * floor)) {
        out.zero_variance = true;
        return out;
    }
    out.acf.reserve(max_lag);
    for (std::size_t lag = 1; lag <= max_lag && lag < n; ++lag) {
        double cov = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i)
            cov += (residuals[i] - mean) * (residuals[i + lag] - mean);
        out.acf.push_back(cov / variance);
    }
    return out;
}

}  // namespace sdhawkes
