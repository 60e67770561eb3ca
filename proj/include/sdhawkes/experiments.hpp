#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "estimate.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace sdhawkes {

// Signed worst relative error: (est - true)/true at the coordinate with the
// largest relative deviation, ties broken by the lowest index.
inline double worst_relative_error(std::span<const double> estimated,
                                   std::span<const double> truth) {
    if (estimated.size() != truth.size() || truth.empty())
        throw DataError("worst_relative_error: size mismatch or empty input");
    double worst = -1.0;
    double signed_error = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        if (!(truth[j] > 0.0))
            throw DataError("worst_relative_error: true value not strictly positive (use the absolute variant)");
        const double rel = std::abs(estimated[j] - truth[j]) / truth[j];
        if (rel > worst) {
            worst = rel;
            signed_error = (estimated[j] - truth[j]) / truth[j];
        }
    }
    return signed_error;
}

// Same with denominator one (used for transition probabilities).
inline double worst_absolute_error(std::span<const double> estimated,
                                   std::span<const double> truth) {
    if (estimated.size() != truth.size() || truth.empty())
        throw DataError("worst_absolute_error: size mismatch or empty input");
    double worst = -1.0;
    double signed_error = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const double abs_err = std::abs(estimated[j] - truth[j]);
        if (abs_err > worst) {
            worst = abs_err;
            signed_error = estimated[j] - truth[j];
        }
    }
    return signed_error;
}

namespace detail {

// Relative worst error restricted to the strictly positive true coordinates,
// so models with structural zeros in alpha stay measurable.
inline double worst_relative_error_positive(std::span<const double> estimated,
                                            std::span<const double> truth) {
    std::vector<double> est_pos, true_pos;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        if (truth[j] > 0.0) {
            est_pos.push_back(estimated[j]);
            true_pos.push_back(truth[j]);
        }
    }
    if (true_pos.empty()) return std::numeric_limits<double>::quiet_NaN();
    return worst_relative_error(est_pos, true_pos);
}

}  // namespace detail

struct MonteCarloRecord {
    std::size_t sample_size = 0;
    int replication = 0;
    bool fit_ok = false;
    // Signed worst errors per parameter group: phi absolute, the rest relative
    // over the strictly positive true coordinates.
    double phi_error = 0.0;
    double nu_error = 0.0;
    double alpha_error = 0.0;
    double beta_error = 0.0;
};

struct MonteCarloConfig {
    std::vector<std::size_t> sample_sizes;
    int replications = 20;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    std::size_t initial_state = 0;
    std::uint64_t max_events = 10'000'000;
    FitConfig fit;  // the true parameters are always added as a warm start

    MonteCarloConfig() { fit.n_random_starts = 0; }
};

// Finite-sample consistency experiment: per sample size N, simulate paths of
// N events from the true model, re-fit each with a true-parameter warm start,
// and record the four signed worst group errors. Deterministic under the seed
// and independent of the execution schedule.
inline std::vector<MonteCarloRecord> monte_carlo_consistency(const SdHawkesModel& truth,
                                                             const MonteCarloConfig& config) {
    require_valid(truth);
    if (config.replications < 0) throw DataError("replications must be >= 0");
    const std::size_t total =
        config.sample_sizes.size() * static_cast<std::size_t>(config.replications);
    std::vector<MonteCarloRecord> records(total);

    parallel_for(total, config.jobs, [&](std::size_t task) {
        const std::size_t size_index = task / static_cast<std::size_t>(config.replications);
        const int replication = static_cast<int>(task % static_cast<std::size_t>(config.replications));
        MonteCarloRecord record;
        record.sample_size = config.sample_sizes[size_index];
        record.replication = replication;

        SimulationConfig sim;
        sim.initial_state = config.initial_state;
        sim.start_time = 0.0;
        sim.horizon = std::numeric_limits<double>::infinity();
        sim.target_events = record.sample_size;
        sim.max_events = config.max_events;
        sim.seed = derive_seed(config.seed, task);

        try {
            const MarkedSequence path = simulate(truth, sim);
            FitConfig fit_config = config.fit;
            fit_config.seed = derive_seed(config.seed ^ 0x5ca1ab1eULL, task);
            fit_config.warm_starts.insert(fit_config.warm_starts.begin(), truth.kernel);
            const EstimateResult estimate = fit(path, truth.dims, fit_config);

            record.fit_ok = true;
            record.phi_error = worst_absolute_error(estimate.model.phi.values, truth.phi.values);
            record.nu_error =
                detail::worst_relative_error_positive(estimate.model.kernel.nu, truth.kernel.nu);
            record.alpha_error = detail::worst_relative_error_positive(estimate.model.kernel.alpha,
                                                                       truth.kernel.alpha);
            record.beta_error = detail::worst_relative_error_positive(estimate.model.kernel.beta,
                                                                      truth.kernel.beta);
        } catch (const std::exception&) {
            record.fit_ok = false;  // recorded, not fatal
        }
        records[task] = record;
    });
    return records;
}

struct QuantileBand {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct BootstrapReplicate {
    bool ok = false;
    std::vector<double> nu, alpha, beta, phi;
};

struct BootstrapSummary {
    int n_success = 0;
    int n_failure = 0;
    QuantileBand nu;     // per base-rate coordinate
    QuantileBand alpha;  // per kernel coordinate, [e'][x'][e] order
    QuantileBand beta;
    QuantileBand phi;    // per transition entry, [e][x][x'] order
    std::vector<double> time_grid;
    // Truncated-norm bands per (source stream c, target e), index c*d_e + e.
    std::vector<QuantileBand> norm_curves;
    // Raw re-fitted parameters per replication, in replication order.
    std::vector<BootstrapReplicate> replicates;
};

struct BootstrapConfig {
    double horizon = 0.0;
    double start_time = 0.0;
    int replications = 100;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    std::size_t initial_state = 0;
    double lower_quantile = 0.005;
    double upper_quantile = 0.995;
    int min_successes = 2;
    std::uint64_t max_events = 10'000'000;
    std::vector<double> time_grid;  // defaults to default_norm_time_grid()
    FitConfig fit;                  // fitted parameters are always added as a warm start
    bool vary_seeds = true;         // test hook: false reuses one stream for every path
};

namespace detail {

// Empirical quantile with linear interpolation between order statistics.
inline double empirical_quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double position = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(position);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    if (values[lo] == values[hi]) return values[lo];
    const double weight = position - static_cast<double>(lo);
    return values[lo] * (1.0 - weight) + values[hi] * weight;
}

inline QuantileBand band_over(const std::vector<std::vector<double>>& samples_by_coordinate,
                              double lo_q, double hi_q) {
    QuantileBand band;
    band.lower.reserve(samples_by_coordinate.size());
    band.upper.reserve(samples_by_coordinate.size());
    for (const auto& samples : samples_by_coordinate) {
        band.lower.push_back(empirical_quantile(samples, lo_q));
        band.upper.push_back(empirical_quantile(samples, hi_q));
    }
    return band;
}

}  // namespace detail

// Parametric bootstrap: simulate `replications` paths at the fitted
// parameters over (start_time, horizon], re-fit each, and return empirical
// quantile bands of every parameter and of the truncated kernel-norm curves
// on the time grid. Fit failures are counted; bands are computed on the
// successes, subject to min_successes.
inline BootstrapSummary parametric_bootstrap(const SdHawkesModel& fitted,
                                             const BootstrapConfig& config) {
    require_valid(fitted);
    if (config.replications < 2) throw DataError("bootstrap needs at least two replications");
    if (!(config.lower_quantile < config.upper_quantile))
        throw DataError("bootstrap quantiles out of order");

    const std::vector<double> grid =
        config.time_grid.empty() ? default_norm_time_grid() : config.time_grid;
    const std::size_t n_coeff = fitted.kernel.alpha.size();

    std::vector<BootstrapReplicate> replicates(static_cast<std::size_t>(config.replications));

    parallel_for(replicates.size(), config.jobs, [&](std::size_t r) {
        SimulationConfig sim;
        sim.initial_state = config.initial_state;
        sim.start_time = config.start_time;
        sim.horizon = config.horizon;
        sim.max_events = config.max_events;
        sim.seed = config.vary_seeds ? derive_seed(config.seed, r) : config.seed;

        try {
            const MarkedSequence path = simulate(fitted, sim);
            FitConfig fit_config = config.fit;
            fit_config.seed = config.vary_seeds ? derive_seed(config.seed ^ 0xb00757a9ULL, r)
                                                : config.seed;
            fit_config.warm_starts.insert(fit_config.warm_starts.begin(), fitted.kernel);
            const EstimateResult estimate = fit(path, fitted.dims, fit_config);
            replicates[r] = BootstrapReplicate{true, estimate.model.kernel.nu,
                                               estimate.model.kernel.alpha,
                                               estimate.model.kernel.beta,
                                               estimate.model.phi.values};
        } catch (const std::exception&) {
            replicates[r].ok = false;
        }
    });

    BootstrapSummary summary;
    summary.time_grid = grid;
    for (const auto& rep : replicates) (rep.ok ? summary.n_success : summary.n_failure)++;
    if (summary.n_success < config.min_successes)
        throw NumericalError("bootstrap: only " + std::to_string(summary.n_success) +
                             " of " + std::to_string(config.replications) + " re-fits succeeded");

    const auto collect = [&](auto&& accessor, std::size_t n_coordinates) {
        std::vector<std::vector<double>> by_coordinate(n_coordinates);
        for (const auto& rep : replicates) {
            if (!rep.ok) continue;
            for (std::size_t j = 0; j < n_coordinates; ++j)
                by_coordinate[j].push_back(accessor(rep, j));
        }
        return detail::band_over(by_coordinate, config.lower_quantile, config.upper_quantile);
    };

    summary.nu = collect([](const BootstrapReplicate& rep, std::size_t j) { return rep.nu[j]; },
                         fitted.kernel.nu.size());
    summary.alpha =
        collect([](const BootstrapReplicate& rep, std::size_t j) { return rep.alpha[j]; }, n_coeff);
    summary.beta =
        collect([](const BootstrapReplicate& rep, std::size_t j) { return rep.beta[j]; }, n_coeff);
    summary.phi = collect([](const BootstrapReplicate& rep, std::size_t j) { return rep.phi[j]; },
                          fitted.phi.values.size());

    summary.norm_curves.resize(n_coeff);
    for (std::size_t i = 0; i < n_coeff; ++i) {
        std::vector<std::vector<double>> by_point(grid.size());
        for (const auto& rep : replicates) {
            if (!rep.ok) continue;
            for (std::size_t g = 0; g < grid.size(); ++g)
                by_point[g].push_back(truncated_kernel_norm(rep.alpha[i], rep.beta[i], grid[g]));
        }
        summary.norm_curves[i] =
            detail::band_over(by_point, config.lower_quantile, config.upper_quantile);
    }
    summary.replicates = std::move(replicates);
    return summary;
}

}  // namespace sdhawkes
