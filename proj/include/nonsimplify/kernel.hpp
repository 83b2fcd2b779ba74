#pragma once

#include <string>
#include <vector>

#include "nonsimplify/dataset.hpp"

namespace nonsimplify {

enum class Kernel { Epanechnikov, Gaussian, Uniform };

Kernel parse_kernel(const std::string& name);
std::string kernel_name(Kernel k);

/// Product kernel over the p conditioning coordinates with common bandwidth h.
/// Optional per-coordinate scales multiply h (empty means all ones).
struct KernelSpec {
    Kernel kernel = Kernel::Epanechnikov;
    double h = 0.1;
    std::vector<double> scales;

    void validate(std::size_t p) const;
    double bandwidth(std::size_t coord) const {
        return scales.empty() ? h : h * scales[coord];
    }
};

/// One-dimensional kernel shape (integrates to 1).
double kernel_value(Kernel k, double t);

/// Normalized Nadaraya-Watson weights w_i(z) = K_h(Z_i - z) / sum_j K_h(Z_j - z).
/// With pseudo_z, every coordinate of Z_i and z is replaced by its empirical
/// CDF value before the kernel is evaluated.
/// Throws DegenerateNeighborhood when every kernel value is zero.
std::vector<double> kernel_weights(const Dataset& data, const std::vector<double>& z,
                                   const KernelSpec& k, bool pseudo_z = false);

} // namespace nonsimplify
