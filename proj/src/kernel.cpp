#include "nonsimplify/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "nonsimplify/errors.hpp"
#include "nonsimplify/gaussian.hpp"

namespace nonsimplify {

Kernel parse_kernel(const std::string& name) {
    if (name == "epanechnikov") return Kernel::Epanechnikov;
    if (name == "gaussian") return Kernel::Gaussian;
    if (name == "uniform") return Kernel::Uniform;
    throw InvalidArgument("unknown kernel '" + name + "' (epanechnikov, gaussian, uniform)");
}

std::string kernel_name(Kernel k) {
    switch (k) {
        case Kernel::Epanechnikov: return "epanechnikov";
        case Kernel::Gaussian: return "gaussian";
        case Kernel::Uniform: return "uniform";
    }
    return "?";
}

void KernelSpec::validate(std::size_t p) const {
    if (!(h > 0.0)) throw InvalidArgument("kernel: bandwidth h must be > 0");
    if (!scales.empty() && scales.size() != p)
        throw InvalidArgument("kernel: per-coordinate scale count must match p");
    for (double s : scales)
        if (!(s > 0.0)) throw InvalidArgument("kernel: scales must be > 0");
}

double kernel_value(Kernel k, double t) {
    switch (k) {
        case Kernel::Epanechnikov:
            return std::abs(t) <= 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
        case Kernel::Gaussian:
            return norm_pdf(t);
        case Kernel::Uniform:
            return std::abs(t) <= 1.0 ? 0.5 : 0.0;
    }
    return 0.0;
}

namespace {

// Empirical CDF values of v at the sample points and at a query point.
std::vector<double> ecdf_values(const std::vector<double>& sorted, const std::vector<double>& v) {
    std::vector<double> out(v.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), v[i]);
        out[i] = static_cast<double>(it - sorted.begin()) / n;
    }
    return out;
}

} // namespace

std::vector<double> kernel_weights(const Dataset& data, const std::vector<double>& z,
                                   const KernelSpec& k, bool pseudo_z) {
    if (data.p == 0) throw InvalidArgument("kernel_weights: dataset has no Z columns");
    if (z.size() != data.p) throw InvalidArgument("kernel_weights: z has wrong dimension");
    k.validate(data.p);

    std::vector<double> w(data.n, 1.0);
    for (std::size_t j = 0; j < data.p; ++j) {
        std::vector<double> col = data.z_column(j);
        double zq = z[j];
        if (pseudo_z) {
            std::vector<double> sorted = col;
            std::sort(sorted.begin(), sorted.end());
            const std::vector<double> q = ecdf_values(sorted, {zq});
            col = ecdf_values(sorted, col);
            zq = q[0];
        }
        const double hj = k.bandwidth(j);
        for (std::size_t i = 0; i < data.n; ++i)
            w[i] *= kernel_value(k.kernel, (col[i] - zq) / hj);
    }

    double total = 0.0;
    for (double v : w) total += v;
    if (total <= 0.0)
        throw DegenerateNeighborhood(
            "kernel_weights: no observation within bandwidth of the requested point");
    for (double& v : w) v /= total;
    return w;
}

} // namespace nonsimplify
