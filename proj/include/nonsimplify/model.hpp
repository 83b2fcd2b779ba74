#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nonsimplify/copula.hpp"
#include "nonsimplify/dataset.hpp"

namespace nonsimplify {

/// Ground-truth conditional copula model: a parameter map z -> copula family
/// on a closed interval, with uniform conditional margins (d = 2, p = 1).
class ConditionalCopulaModel {
public:
    ConditionalCopulaModel(std::string label, double z_lo, double z_hi,
                           std::function<CopulaFamily(double)> theta_map);

    const std::string& label() const { return label_; }
    double z_lo() const { return z_lo_; }
    double z_hi() const { return z_hi_; }

    CopulaFamily family_at(double z) const;

    /// Conditional copula CDF C_{X|Z=z}(u1, u2).
    double cdf(double u1, double u2, double z) const;

    /// Scalar dependence parameter theta(z).
    double theta(double z) const { return family_at(z).theta(); }

    /// View with the two X components swapped (u1 and u2 exchanged).
    ConditionalCopulaModel swapped_x() const;

private:
    std::string label_;
    double z_lo_, z_hi_;
    std::function<CopulaFamily(double)> theta_map_;
    bool swap_u_ = false;
};

/// Built-in data-generating processes: "indep", "gauss_0_5", "gauss_0.8z".
const ConditionalCopulaModel& builtin_model(const std::string& name);
std::vector<std::string> builtin_model_names();

/// Draws n rows: Z ~ U[z_lo, z_hi], then (X1, X2) from the conditional copula
/// with uniform margins. Deterministic given the seed.
Dataset sample(const ConditionalCopulaModel& model, std::size_t n, std::uint64_t seed);

/// Draws n rows from the d-dimensional Gaussian copula with the given
/// correlation matrix (row-major d*d); output has uniform margins and p = 0.
Dataset sample_gaussian_copula(const std::vector<double>& corr, std::size_t dim,
                               std::size_t n, std::uint64_t seed);

/// Non-simplified 3-D construction: X1 ~ U[0,1] and, given X1 = v,
/// (X2, X3) follows the Gaussian copula with rho(v) = 0.8 (2v - 1).
/// The conditional Kendall tau of (2,3) given X1 = v is 2 asin(0.8(2v-1))/pi.
Dataset sample_sign_mixture3(std::size_t n, std::uint64_t seed);

} // namespace nonsimplify
