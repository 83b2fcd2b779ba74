#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "nonsimplify/errors.hpp"

namespace nonsimplify {

/// Tolerance below which grid values count as equal for the discrete measure.
inline constexpr double kConstTolerance = 1e-12;

/// Pseudo-normed vector space operations for the value type E.
/// Reals and copulas-on-grids share the same measure code through this.
template <class E>
struct VectorOps {
    std::function<double(const E&)> norm;
    std::function<E(const E&, const E&)> add;
    std::function<E(double, const E&)> scale;

    E subtract(const E& a, const E& b) const { return add(a, scale(-1.0, b)); }
};

/// Ready-made ops for E = double (absolute value norm).
inline VectorOps<double> real_ops() {
    return VectorOps<double>{
        [](const double& v) { return std::abs(v); },
        [](const double& a, const double& b) { return a + b; },
        [](double a, const double& v) { return a * v; },
    };
}

/// Ready-made ops for E = vector<double> with the sup norm.
inline VectorOps<std::vector<double>> vector_sup_ops() {
    return VectorOps<std::vector<double>>{
        [](const std::vector<double>& v) {
            double m = 0.0;
            for (double t : v) m = std::max(m, std::abs(t));
            return m;
        },
        [](const std::vector<double>& a, const std::vector<double>& b) {
            std::vector<double> out(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
            return out;
        },
        [](double a, const std::vector<double>& v) {
            std::vector<double> out(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i];
            return out;
        },
    };
}

/// A function known through its values on a finite collection of points.
template <class E>
struct GriddedFunction {
    std::vector<std::vector<double>> domain_points;
    std::vector<E> values;

    void validate() const {
        if (values.empty()) throw InvalidArgument("gridded function: needs at least one point");
        if (!domain_points.empty() && domain_points.size() != values.size())
            throw InvalidArgument("gridded function: points/values length mismatch");
    }
};

enum class AveragingNorm { Sup, Integral };

namespace detail {

inline std::vector<double> normalized_weights(std::vector<double> mu, std::size_t m) {
    if (mu.empty()) mu.assign(m, 1.0 / static_cast<double>(m));
    if (mu.size() != m) throw InvalidArgument("weights: length must match the grid");
    double total = 0.0;
    for (double w : mu) {
        if (w < 0.0) throw InvalidArgument("weights: must be nonnegative");
        total += w;
    }
    if (total <= 0.0) throw InvalidArgument("weights: must not all be zero");
    for (double& w : mu) w /= total;
    return mu;
}

} // namespace detail

/// Kolmogorov-Smirnov pseudo-measure: max pairwise distance on the grid.
template <class E>
double psi_ks(const GriddedFunction<E>& f, const VectorOps<E>& ops) {
    f.validate();
    const std::size_t m = f.values.size();
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            best = std::max(best, ops.norm(ops.subtract(f.values[i], f.values[j])));
    return best;
}

/// Integral-type pseudo-measure: (sum_{i,j} mu_i mu_j ||f_i - f_j||^s)^(1/s), s > 1.
template <class E>
double psi_integral(const GriddedFunction<E>& f, const VectorOps<E>& ops, double s,
                    std::vector<double> mu = {}) {
    f.validate();
    if (!(s > 1.0)) throw InvalidArgument("psi_integral: exponent s must exceed 1");
    const std::size_t m = f.values.size();
    const auto w = detail::normalized_weights(std::move(mu), m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            total += w[i] * w[j] * std::pow(ops.norm(ops.subtract(f.values[i], f.values[j])), s);
        }
    return std::pow(total, 1.0 / s);
}

/// Averaging-based pseudo-measure: distance of f to ave(f) = sum mu_i f_i,
/// in the weighted sup or integral sense.
template <class E>
double psi_averaging(const GriddedFunction<E>& f, const VectorOps<E>& ops,
                     AveragingNorm norm = AveragingNorm::Sup, std::vector<double> mu = {}) {
    f.validate();
    const std::size_t m = f.values.size();
    const auto w = detail::normalized_weights(std::move(mu), m);
    E ave = ops.scale(w[0], f.values[0]);
    for (std::size_t i = 1; i < m; ++i) ave = ops.add(ave, ops.scale(w[i], f.values[i]));
    double out = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double di = ops.norm(ops.subtract(f.values[i], ave));
        if (norm == AveragingNorm::Sup)
            out = std::max(out, di);
        else
            out += w[i] * di;
    }
    return out;
}

/// Discrete measure: 0 iff all grid values coincide up to kConstTolerance, else 1.
template <class E>
double psi_discrete(const GriddedFunction<E>& f, const VectorOps<E>& ops) {
    return psi_ks(f, ops) <= kConstTolerance ? 0.0 : 1.0;
}

/// Derivative-based measure for a scalar function on a strictly increasing 1-D grid.
/// Central differences inside, one-sided at the ends; Sup gives max |theta'|,
/// Integral gives the trapezoid integral of |theta'| over the grid span.
inline double psi_derivative(const std::vector<double>& grid, const std::vector<double>& theta,
                             AveragingNorm norm = AveragingNorm::Sup) {
    const std::size_t m = grid.size();
    if (m < 2 || theta.size() != m)
        throw InvalidArgument("psi_derivative: needs matching grid/values with m >= 2");
    for (std::size_t i = 1; i < m; ++i)
        if (!(grid[i] > grid[i - 1]))
            throw InvalidArgument("psi_derivative: grid must be strictly increasing");

    std::vector<double> deriv(m);
    deriv[0] = (theta[1] - theta[0]) / (grid[1] - grid[0]);
    deriv[m - 1] = (theta[m - 1] - theta[m - 2]) / (grid[m - 1] - grid[m - 2]);
    for (std::size_t i = 1; i + 1 < m; ++i)
        deriv[i] = (theta[i + 1] - theta[i - 1]) / (grid[i + 1] - grid[i - 1]);

    if (norm == AveragingNorm::Sup) {
        double best = 0.0;
        for (double v : deriv) best = std::max(best, std::abs(v));
        return best;
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i)
        total += 0.5 * (std::abs(deriv[i]) + std::abs(deriv[i + 1])) * (grid[i + 1] - grid[i]);
    return total;
}

/// Conic combination sum_k alpha_k psi_k(f) with alpha_k >= 0.
template <class E>
double conic_combine(
    const std::vector<std::pair<double, std::function<double(const GriddedFunction<E>&)>>>& terms,
    const GriddedFunction<E>& f) {
    if (terms.empty()) throw InvalidArgument("conic_combine: needs at least one measure");
    double total = 0.0;
    for (const auto& [alpha, psi] : terms) {
        if (alpha < 0.0) throw InvalidArgument("conic_combine: coefficients must be >= 0");
        if (alpha > 0.0) total += alpha * psi(f);
    }
    return total;
}

} // namespace nonsimplify
