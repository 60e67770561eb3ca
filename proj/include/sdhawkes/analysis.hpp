#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace sdhawkes {

// Truncated L1 norm of an exponential kernel: integral of alpha e^{-beta s}
// over [0, t] = (alpha/beta)(1 - e^{-beta t}). Monotone non-decreasing in t;
// t may be +infinity.
inline double truncated_kernel_norm(double alpha, double beta, double t) {
    if (!(beta > 0.0)) throw DataError("truncated_kernel_norm: beta must be > 0");
    if (alpha < 0.0) throw DataError("truncated_kernel_norm: alpha must be >= 0");
    if (t < 0.0) throw DataError("truncated_kernel_norm: t must be >= 0");
    return (alpha / beta) * (-std::expm1(-beta * t));
}

// Kernel-norm matrix in state x: entry (i, j) is the full L1 norm of the
// kernel from type j into type i, i.e. alpha[j][x][i] / beta[j][x][i].
// Row-major d_e x d_e.
inline std::vector<double> kernel_norm_matrix(const SdHawkesModel& model, std::size_t x) {
    require_valid(model);
    if (x >= model.dims.n_states) throw DataError("kernel_norm_matrix: state out of range");
    const std::size_t d = model.dims.n_event_types;
    std::vector<double> m(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            m[i * d + j] = model.kernel.a(j, x, i) / model.kernel.b(j, x, i);
    return m;
}

namespace detail {

// Power iteration on an irreducible non-negative block, made primitive by a
// positive diagonal shift (rho(M + cI) = rho(M) + c). All-ones start; the
// Collatz-Wielandt ratios bracket the Perron root, so the bracket width is a
// certified error bound.
inline double perron_root_irreducible(std::span<const double> m, std::size_t n) {
    double max_entry = 0.0;
    for (double v : m) max_entry = std::max(max_entry, v);
    if (max_entry == 0.0) return 0.0;
    const double shift = 0.05 * max_entry + 1e-6;

    std::vector<double> x(n, 1.0), y(n);
    double low = 0.0;
    double high = 0.0;
    for (long iteration = 0; iteration < 100000; ++iteration) {
        low = std::numeric_limits<double>::infinity();
        high = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = shift * x[i];
            for (std::size_t j = 0; j < n; ++j) acc += m[i * n + j] * x[j];
            y[i] = acc;
            const double ratio = acc / x[i];
            low = std::min(low, ratio);
            high = std::max(high, ratio);
        }
        if (high - low <= 1e-10 * std::max(1.0, high)) {
            return 0.5 * (low + high) - shift;
        }
        double norm = 0.0;
        for (double v : y) norm = std::max(norm, v);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    }
    throw NumericalError("spectral radius power iteration did not converge");
}

// Strongly connected components of the sparsity pattern, via transitive
// closure (the matrices here are tiny).
inline std::vector<std::vector<std::size_t>> strongly_connected_blocks(std::span<const double> m,
                                                                       std::size_t n) {
    std::vector<char> reach(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        reach[i * n + i] = 1;
        for (std::size_t j = 0; j < n; ++j)
            if (m[i * n + j] > 0.0) reach[i * n + j] = 1;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i * n + k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k * n + j]) reach[i * n + j] = 1;

    std::vector<std::vector<std::size_t>> blocks;
    std::vector<char> assigned(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i]) continue;
        std::vector<std::size_t> block;
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i * n + j] && reach[j * n + i]) {
                block.push_back(j);
                assigned[j] = 1;
            }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

}  // namespace detail

// Spectral radius of a non-negative square matrix (row-major). Power
// iteration with a deterministic strictly positive start; reducible matrices
// are handled block-by-block over the strongly connected components. For
// n <= 2 the closed-form characteristic root doubles as a cross-check.
inline double spectral_radius(std::span<const double> matrix, std::size_t n) {
    if (matrix.size() != n * n) throw DataError("spectral_radius: matrix size mismatch");
    for (double v : matrix)
        if (!(v >= 0.0)) throw DataError("spectral_radius: matrix must be non-negative");
    if (n == 0) return 0.0;

    double closed_form = -1.0;
    if (n == 1) {
        closed_form = matrix[0];
    } else if (n == 2) {
        const double trace = matrix[0] + matrix[3];
        const double det = matrix[0] * matrix[3] - matrix[1] * matrix[2];
        closed_form = 0.5 * (trace + std::sqrt(std::max(trace * trace - 4.0 * det, 0.0)));
    }

    double rho = 0.0;
    for (const auto& block : detail::strongly_connected_blocks(matrix, n)) {
        const std::size_t bn = block.size();
        std::vector<double> sub(bn * bn);
        for (std::size_t i = 0; i < bn; ++i)
            for (std::size_t j = 0; j < bn; ++j) sub[i * bn + j] = matrix[block[i] * n + block[j]];
        rho = std::max(rho, detail::perron_root_irreducible(sub, bn));
    }

    if (closed_form >= 0.0) {
        if (std::abs(rho - closed_form) > 1e-8 * std::max(1.0, closed_form))
            throw NumericalError("spectral radius cross-check failed");
        return closed_form;
    }
    return rho;
}

// Endogeneity measure rho(x): Perron root of the kernel-norm matrix in state x.
inline double spectral_radius(const SdHawkesModel& model, std::size_t x) {
    const auto m = kernel_norm_matrix(model, x);
    return spectral_radius(m, model.dims.n_event_types);
}

// Log-spaced time grid over 1e-6..1e2 seconds, ten points per decade.
inline std::vector<double> default_norm_time_grid() {
    std::vector<double> grid;
    grid.reserve(81);
    for (int i = 0; i <= 80; ++i) grid.push_back(std::pow(10.0, -6.0 + static_cast<double>(i) * 0.1));
    return grid;
}

}  // namespace sdhawkes
