#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scenver {

struct QpInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QpOptions {
    double tolerance = 1e-8;
    int max_iterations = 500;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace detail

// Minimum-deviation QP:
//   minimize ||u - nominal||^2  subject to  rows[i] . u >= bounds[i]
// solved in the dual by Hildreth coordinate ascent. Sized for the handful of
// constraints a pairwise safety filter produces, not for general QPs.
//
// Throws QpInfeasible when the dual diverges or the primal residual is still
// above tolerance at the iteration cap (which covers genuinely empty
// feasible sets as well as zero constraint rows with positive bounds).
inline std::vector<double> solve_qp(std::span<const double> nominal,
                                    const std::vector<std::vector<double>>& rows,
                                    std::span<const double> bounds,
                                    const QpOptions& opt = {}) {
    const std::size_t dim = nominal.size();
    const std::size_t m = rows.size();
    if (bounds.size() != m)
        throw std::invalid_argument("constraint rows and bounds disagree");
    for (const auto& row : rows)
        if (row.size() != dim)
            throw std::invalid_argument("constraint row dimension mismatch");

    std::vector<double> u(nominal.begin(), nominal.end());
    if (m == 0) return u;

    // Slack at the nominal point; d[i] > 0 marks a violated constraint.
    std::vector<double> d(m);
    bool any_violated = false;
    for (std::size_t i = 0; i < m; ++i) {
        d[i] = bounds[i] - detail::dot(rows[i], nominal);
        if (d[i] > 0.0) any_violated = true;
    }
    if (!any_violated) return u;  // nominal already feasible, returned bit-exact

    // Gram matrix of the constraint rows.
    std::vector<double> gram(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j)
            gram[i * m + j] = gram[j * m + i] = detail::dot(rows[i], rows[j]);

    std::vector<double> lambda(m, 0.0);
    bool diverged = false;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        double delta = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (gram[i * m + i] <= 0.0) continue;  // zero row, nothing to ascend
            double w = d[i];
            for (std::size_t j = 0; j < m; ++j)
                if (j != i) w -= gram[i * m + j] * lambda[j];
            const double next = std::max(0.0, w / gram[i * m + i]);
            delta = std::max(delta, std::abs(next - lambda[i]));
            lambda[i] = next;
            scale = std::max(scale, next);
        }
        if (scale > 1e14) {
            diverged = true;
            break;
        }
        if (delta <= 1e-14 * (1.0 + scale)) break;
    }

    for (std::size_t i = 0; i < m; ++i) {
        if (lambda[i] == 0.0) continue;
        for (std::size_t k = 0; k < dim; ++k) u[k] += rows[i][k] * lambda[i];
    }

    double residual = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        residual = std::max(residual, bounds[i] - detail::dot(rows[i], u));
    if (diverged || residual > opt.tolerance)
        throw QpInfeasible("qp infeasible or unconverged, residual " + std::to_string(residual));
    return u;
}

}  // namespace scenver
