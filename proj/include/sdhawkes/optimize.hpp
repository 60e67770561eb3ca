#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace sdhawkes {

// Objective callback: fills `grad` and returns the value at `x`.
using BoundedObjective = std::function<double(std::span<const double>, std::span<double>)>;

struct BoundedMinimizeOptions {
    int max_iterations = 500;
    // Convergence on the projected gradient sup-norm, relative to max(1, |f|).
    double gradient_tolerance = 1e-7;
    int history = 8;  // quasi-Newton memory
    double armijo_c1 = 1e-4;
    int max_line_search_steps = 45;
};

struct BoundedMinimizeResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

// Projected limited-memory quasi-Newton descent for min f(x) subject to
// x >= lower. Coordinates pinned at their bound with an outward-pointing
// gradient are frozen; the remaining ones take an L-BFGS step with a
// backtracking Armijo line search along the projected path. Accepted iterates
// never increase f.
inline BoundedMinimizeResult minimize_with_lower_bounds(const BoundedObjective& objective,
                                                        std::vector<double> x,
                                                        const std::vector<double>& lower,
                                                        const BoundedMinimizeOptions& options = {}) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) x[i] = std::max(x[i], lower[i]);

    std::vector<double> grad(n), trial(n), trial_grad(n), direction(n), projected(n);
    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> memory;

    BoundedMinimizeResult result;
    double value = objective(x, grad);
    result.evaluations = 1;

    const auto at_bound = [&](std::size_t i) {
        return x[i] - lower[i] <= 1e-12 * (1.0 + std::abs(lower[i]));
    };

    int flat_streak = 0;
    for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
        double pg_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            projected[i] = (at_bound(i) && grad[i] > 0.0) ? 0.0 : grad[i];
            pg_norm = std::max(pg_norm, std::abs(projected[i]));
        }
        if (pg_norm <= options.gradient_tolerance * std::max(1.0, std::abs(value))) {
            result.converged = true;
            break;
        }

        bool accepted = false;
        double accepted_value = value;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            bool first_step = memory.empty();
            if (first_step) {
                // No curvature yet: steepest descent preconditioned by the
                // parameter magnitudes, which keeps the first moves sane when
                // coordinates span several decades.
                for (std::size_t i = 0; i < n; ++i) {
                    const double scale = std::max(std::abs(x[i]), 1e-3);
                    direction[i] = -projected[i] * scale * scale;
                }
            } else {
                // Two-loop recursion on the projected gradient.
                std::vector<double> q(projected.begin(), projected.end());
                std::vector<double> coeff(memory.size());
                for (std::size_t m = memory.size(); m-- > 0;) {
                    const auto& p = memory[m];
                    double dot = 0.0;
                    for (std::size_t i = 0; i < n; ++i) dot += p.s[i] * q[i];
                    coeff[m] = p.rho * dot;
                    for (std::size_t i = 0; i < n; ++i) q[i] -= coeff[m] * p.y[i];
                }
                const auto& last = memory.back();
                double sy = 0.0;
                double yy = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    sy += last.s[i] * last.y[i];
                    yy += last.y[i] * last.y[i];
                }
                const double gamma = yy > 0.0 ? sy / yy : 1.0;
                for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
                for (std::size_t m = 0; m < memory.size(); ++m) {
                    const auto& p = memory[m];
                    double dot = 0.0;
                    for (std::size_t i = 0; i < n; ++i) dot += p.y[i] * q[i];
                    const double b = p.rho * dot;
                    for (std::size_t i = 0; i < n; ++i) q[i] += (coeff[m] - b) * p.s[i];
                }
                for (std::size_t i = 0; i < n; ++i) direction[i] = -q[i];
            }
            for (std::size_t i = 0; i < n; ++i)
                if (at_bound(i) && grad[i] > 0.0) direction[i] = 0.0;

            double descent = 0.0;
            for (std::size_t i = 0; i < n; ++i) descent += direction[i] * projected[i];
            if (!(descent < 0.0)) {
                memory.clear();
                continue;  // retry with the preconditioned steepest direction
            }

            double step = 1.0;
            if (first_step) {
                // Cap the first trial so no coordinate moves by more than half
                // its own magnitude.
                double worst = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    worst = std::max(worst, std::abs(direction[i]) / (std::abs(x[i]) + 1e-3));
                if (worst > 0.0) step = std::min(1.0, 0.5 / worst);
            }

            for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
                bool moved = false;
                for (std::size_t i = 0; i < n; ++i) {
                    trial[i] = std::max(x[i] + step * direction[i], lower[i]);
                    moved = moved || trial[i] != x[i];
                }
                if (!moved) break;
                const double trial_value = objective(trial, trial_grad);
                ++result.evaluations;
                double decrease = 0.0;
                for (std::size_t i = 0; i < n; ++i) decrease += grad[i] * (trial[i] - x[i]);
                decrease = std::min(decrease, 0.0);
                if (std::isfinite(trial_value) && trial_value <= value + options.armijo_c1 * decrease) {
                    accepted = true;
                    accepted_value = trial_value;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                if (memory.empty()) break;  // steepest descent already stalled
                memory.clear();             // fall back to steepest once
            }
        }
        if (!accepted) break;  // line search stalled; best point so far stands

        std::vector<double> s(n), y(n);
        double sy = 0.0;
        double s_norm = 0.0;
        double y_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial[i] - x[i];
            y[i] = trial_grad[i] - grad[i];
            sy += s[i] * y[i];
            s_norm += s[i] * s[i];
            y_norm += y[i] * y[i];
        }
        if (sy > 1e-10 * std::sqrt(s_norm) * std::sqrt(y_norm)) {
            memory.push_back(Pair{std::move(s), std::move(y), 1.0 / sy});
            if (memory.size() > static_cast<std::size_t>(options.history)) memory.pop_front();
        }

        const bool flat = value - accepted_value <= 1e-13 * std::max(1.0, std::abs(value));
        flat_streak = flat ? flat_streak + 1 : 0;

        x.swap(trial);
        grad.swap(trial_grad);
        value = accepted_value;
        result.iterations = iteration;

        if (flat_streak >= 3) {
            result.converged = true;  // objective numerically flat
            break;
        }
    }

    result.x = std::move(x);
    result.value = value;
    return result;
}

}  // namespace sdhawkes
