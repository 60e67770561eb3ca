#pragma once

// Shared test fixtures and independent oracles. Everything here stays clear
// of the library's fast paths: brute-force sums, finite differences and the
// Gelfand iteration are the reference implementations the fast code is
// checked against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sdhawkes/sdhawkes.hpp"

namespace testutil {

using namespace sdhawkes;

// Single-type model with self-excitation only in the second state
// (nu = 1, alpha = 1{x=2}, beta = 4) and a mildly sticky state chain.
inline SdHawkesModel excite_in_state2_model() {
    SdHawkesModel model;
    model.dims.n_event_types = 1;
    model.dims.n_states = 2;
    model.dims.event_labels = {"e"};
    model.dims.state_labels = {"1", "2"};
    model.phi = TransitionDistribution(1, 2, 0.0);
    model.phi.at(0, 0, 0) = 0.6;
    model.phi.at(0, 0, 1) = 0.4;
    model.phi.at(0, 1, 0) = 0.4;
    model.phi.at(0, 1, 1) = 0.6;
    model.kernel = ExpKernelParams(1, 2);
    model.kernel.nu = {1.0};
    model.kernel.a(0, 0, 0) = 0.0;
    model.kernel.a(0, 1, 0) = 1.0;
    model.kernel.b(0, 0, 0) = 4.0;
    model.kernel.b(0, 1, 0) = 4.0;
    return model;
}

// Homogeneous Poisson special case: one type, one state, no excitation.
inline SdHawkesModel poisson_model(double rate) {
    SdHawkesModel model;
    model.dims = Dimensions::make(1, 1);
    model.phi = TransitionDistribution::identity(1, 1);
    model.kernel = ExpKernelParams(1, 1);
    model.kernel.nu = {rate};
    model.kernel.a(0, 0, 0) = 0.0;
    model.kernel.b(0, 0, 0) = 1.0;
    return model;
}

// Random stable-ish model for cross-check suites.
inline SdHawkesModel random_model(std::size_t n_events, std::size_t n_states, Xoshiro256pp& rng) {
    SdHawkesModel model;
    model.dims = Dimensions::make(n_events, n_states);
    model.phi = TransitionDistribution(n_events, n_states, 0.0);
    for (std::size_t e = 0; e < n_events; ++e) {
        for (std::size_t x = 0; x < n_states; ++x) {
            double row_sum = 0.0;
            std::vector<double> row(n_states);
            for (std::size_t y = 0; y < n_states; ++y) {
                row[y] = 0.05 + rng.uniform01();
                row_sum += row[y];
            }
            for (std::size_t y = 0; y < n_states; ++y) model.phi.at(e, x, y) = row[y] / row_sum;
        }
    }
    model.kernel = ExpKernelParams(n_events, n_states);
    for (std::size_t e = 0; e < n_events; ++e) model.kernel.nu[e] = 0.5 + 1.5 * rng.uniform01();
    const double norm_budget = 0.6 / static_cast<double>(n_events * n_states);
    for (std::size_t i = 0; i < model.kernel.alpha.size(); ++i) {
        const double beta = std::exp(std::log(0.5) + rng.uniform01() * std::log(40.0));
        model.kernel.beta[i] = beta;
        model.kernel.alpha[i] = norm_budget * rng.uniform01() * beta;
    }
    return model;
}

// Random marked sequence: sorted uniform times with uniform marks; valid but
// not drawn from any Hawkes law, which is all the likelihood oracles need.
inline MarkedSequence random_sequence(const Dimensions& dims, std::size_t count, double t0,
                                      double horizon, Xoshiro256pp& rng,
                                      std::size_t history_count = 0) {
    MarkedSequence seq;
    seq.window_start = t0;
    seq.window_end = horizon;
    seq.initial_state = 0;
    std::vector<double> times;
    for (std::size_t n = 0; n < history_count; ++n)
        times.push_back(t0 - 2.0 * rng.uniform01() * (horizon - t0) - 1e-6);
    for (std::size_t n = 0; n < count; ++n)
        times.push_back(t0 + rng.uniform01() * (horizon - t0));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    seq.times = times;
    for (std::size_t n = 0; n < seq.times.size(); ++n) {
        seq.events.push_back(static_cast<std::size_t>(rng.uniform01() * dims.n_event_types) %
                             dims.n_event_types);
        seq.states.push_back(static_cast<std::size_t>(rng.uniform01() * dims.n_states) %
                             dims.n_states);
    }
    return seq;
}

// O(N^2) references for the decayed sums maintained by IntensityState.
inline double brute_force_decayed_sum(const MarkedSequence& seq, const SdHawkesModel& model,
                                      std::size_t source_event, std::size_t source_state,
                                      std::size_t target, double t) {
    const double beta = model.kernel.b(source_event, source_state, target);
    double sum = 0.0;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        if (seq.times[n] >= t) break;
        if (seq.events[n] == source_event && seq.states[n] == source_state)
            sum += std::exp(-beta * (t - seq.times[n]));
    }
    return sum;
}

inline double brute_force_decayed_lag_sum(const MarkedSequence& seq, const SdHawkesModel& model,
                                          std::size_t source_event, std::size_t source_state,
                                          std::size_t target, double t) {
    const double beta = model.kernel.b(source_event, source_state, target);
    double sum = 0.0;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        if (seq.times[n] >= t) break;
        if (seq.events[n] == source_event && seq.states[n] == source_state)
            sum += (t - seq.times[n]) * std::exp(-beta * (t - seq.times[n]));
    }
    return sum;
}

// Central finite difference of l_plus - l_minus in one kernel coordinate.
enum class Coordinate { nu, alpha, beta };

inline double finite_difference(const SdHawkesModel& model, const MarkedSequence& seq,
                                Coordinate kind, std::size_t index, double relative_step = 1e-5) {
    const auto value_at = [&](double shift) {
        SdHawkesModel perturbed = model;
        double* coordinate = nullptr;
        switch (kind) {
            case Coordinate::nu: coordinate = &perturbed.kernel.nu[index]; break;
            case Coordinate::alpha: coordinate = &perturbed.kernel.alpha[index]; break;
            case Coordinate::beta: coordinate = &perturbed.kernel.beta[index]; break;
        }
        *coordinate += shift;
        const LikelihoodBreakdown b = log_likelihood(perturbed, seq);
        return b.l_plus - b.l_minus;
    };
    double base = 0.0;
    switch (kind) {
        case Coordinate::nu: base = model.kernel.nu[index]; break;
        case Coordinate::alpha: base = model.kernel.alpha[index]; break;
        case Coordinate::beta: base = model.kernel.beta[index]; break;
    }
    const double h = relative_step * std::max(std::abs(base), 1e-3);
    return (value_at(h) - value_at(-h)) / (2.0 * h);
}

// Gelfand iteration: rho = lim ||M^(2^k)||^(1/2^k) by repeated squaring with
// normalisation. With A_k = M^(2^k)/scale_k and s_k = ||A_k||, the normalised
// log scale obeys l_{k+1} = l_k + log(s_k)/2^k, so rho = exp(lim l_k).
// Independent of the power-iteration implementation.
inline double spectral_radius_gelfand(std::vector<double> m, std::size_t n, int squarings = 50) {
    double log_rho = 0.0;
    double pow2 = 1.0;
    std::vector<double> next(n * n);
    for (int k = 0; k < squarings; ++k) {
        double norm = 0.0;
        for (double v : m) norm = std::max(norm, std::abs(v));
        if (norm == 0.0) return 0.0;  // nilpotent
        log_rho += std::log(norm) / pow2;
        for (double& v : m) v /= norm;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t l = 0; l < n; ++l) acc += m[i * n + l] * m[l * n + j];
                next[i * n + j] = acc;
            }
        m.swap(next);
        pow2 *= 2.0;
    }
    double norm = 0.0;
    for (double v : m) norm = std::max(norm, std::abs(v));
    if (norm == 0.0) return 0.0;
    return std::exp(log_rho + std::log(norm) / pow2);
}

}  // namespace testutil
