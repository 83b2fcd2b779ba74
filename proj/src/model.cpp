#include "nonsimplify/model.hpp"

#include <cmath>

#include "nonsimplify/errors.hpp"
#include "nonsimplify/gaussian.hpp"
#include "nonsimplify/rng.hpp"

namespace nonsimplify {

ConditionalCopulaModel::ConditionalCopulaModel(std::string label, double z_lo, double z_hi,
                                               std::function<CopulaFamily(double)> theta_map)
    : label_(std::move(label)), z_lo_(z_lo), z_hi_(z_hi), theta_map_(std::move(theta_map)) {
    if (!(z_lo_ < z_hi_)) throw InvalidArgument("model: z domain must satisfy z_lo < z_hi");
    // Construction of an invalid family throws; probe the map on a dense grid.
    const int m = 257;
    for (int i = 0; i < m; ++i) {
        const double z = z_lo_ + (z_hi_ - z_lo_) * i / (m - 1);
        (void)theta_map_(z);
    }
}

CopulaFamily ConditionalCopulaModel::family_at(double z) const {
    if (z < z_lo_ || z > z_hi_)
        throw InvalidArgument("model '" + label_ + "': z outside [" + std::to_string(z_lo_) +
                              ", " + std::to_string(z_hi_) + "]");
    return theta_map_(z);
}

double ConditionalCopulaModel::cdf(double u1, double u2, double z) const {
    if (swap_u_) std::swap(u1, u2);
    return copula_cdf(family_at(z), u1, u2);
}

ConditionalCopulaModel ConditionalCopulaModel::swapped_x() const {
    ConditionalCopulaModel out = *this;
    out.swap_u_ = !out.swap_u_;
    return out;
}

const ConditionalCopulaModel& builtin_model(const std::string& name) {
    static const ConditionalCopulaModel indep(
        "indep", 0.0, 1.0, [](double) { return CopulaFamily::independence(); });
    static const ConditionalCopulaModel gauss05(
        "gauss_0_5", 0.0, 1.0, [](double) { return CopulaFamily::gaussian(0.5); });
    static const ConditionalCopulaModel gauss08z(
        "gauss_0.8z", 0.0, 1.0, [](double z) { return CopulaFamily::gaussian(0.8 * z); });
    if (name == "indep") return indep;
    if (name == "gauss_0_5") return gauss05;
    if (name == "gauss_0.8z") return gauss08z;
    throw InvalidArgument("unknown model '" + name + "' (expected indep, gauss_0_5, gauss_0.8z)");
}

std::vector<std::string> builtin_model_names() {
    return {"indep", "gauss_0_5", "gauss_0.8z"};
}

Dataset sample(const ConditionalCopulaModel& model, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("sample: n must be >= 1");
    CounterRng rng(seed);
    Dataset data;
    data.n = n;
    data.d = 2;
    data.p = 1;
    data.seed = seed;
    data.x.resize(2 * n);
    data.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u0 = rng.uniform(3 * i);
        const double u1 = rng.uniform(3 * i + 1);
        const double u2 = rng.uniform(3 * i + 2);
        const double z = model.z_lo() + (model.z_hi() - model.z_lo()) * u0;
        data.z[i] = z;
        const CopulaFamily fam = model.family_at(z);
        if (fam.id() == FamilyId::Independence || fam.theta() == 0.0) {
            data.x[2 * i] = u1;
            data.x[2 * i + 1] = u2;
        } else {
            const double rho = fam.theta();
            const double n1 = norm_quantile(u1);
            const double n2 = rho * n1 + std::sqrt(1.0 - rho * rho) * norm_quantile(u2);
            data.x[2 * i] = norm_cdf(n1);
            data.x[2 * i + 1] = norm_cdf(n2);
        }
    }
    return data;
}

namespace {

// Lower Cholesky factor of a small SPD matrix (row-major dim*dim).
std::vector<double> cholesky(const std::vector<double>& a, std::size_t dim) {
    std::vector<double> L(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * dim + j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i * dim + k] * L[j * dim + k];
            if (i == j) {
                if (s <= 0.0)
                    throw InvalidArgument("correlation matrix is not positive definite");
                L[i * dim + i] = std::sqrt(s);
            } else {
                L[i * dim + j] = s / L[j * dim + j];
            }
        }
    }
    return L;
}

} // namespace

Dataset sample_gaussian_copula(const std::vector<double>& corr, std::size_t dim,
                               std::size_t n, std::uint64_t seed) {
    if (dim < 2) throw InvalidArgument("sample_gaussian_copula: dim must be >= 2");
    if (corr.size() != dim * dim)
        throw InvalidArgument("sample_gaussian_copula: corr must be dim*dim");
    const auto L = cholesky(corr, dim);
    CounterRng rng(seed);
    Dataset data;
    data.n = n;
    data.d = dim;
    data.p = 0;
    data.seed = seed;
    data.x.resize(n * dim);
    std::vector<double> g(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) g[j] = norm_quantile(rng.uniform(dim * i + j));
        for (std::size_t j = 0; j < dim; ++j) {
            double y = 0.0;
            for (std::size_t k = 0; k <= j; ++k) y += L[j * dim + k] * g[k];
            data.x[i * dim + j] = norm_cdf(y);
        }
    }
    return data;
}

Dataset sample_sign_mixture3(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    Dataset data;
    data.n = n;
    data.d = 3;
    data.p = 0;
    data.seed = seed;
    data.x.resize(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = rng.uniform(3 * i);
        const double rho = 0.8 * (2.0 * v - 1.0);
        const double n1 = norm_quantile(rng.uniform(3 * i + 1));
        const double n2 = rho * n1 + std::sqrt(1.0 - rho * rho) * norm_quantile(rng.uniform(3 * i + 2));
        data.x[3 * i] = v;
        data.x[3 * i + 1] = norm_cdf(n1);
        data.x[3 * i + 2] = norm_cdf(n2);
    }
    return data;
}

} // namespace nonsimplify
