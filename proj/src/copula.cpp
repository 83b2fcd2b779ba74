#include "nonsimplify/copula.hpp"

#include <cmath>

#include "nonsimplify/errors.hpp"
#include "nonsimplify/gaussian.hpp"

namespace nonsimplify {

namespace {
constexpr double kPi = 3.141592653589793238462643;
// Quantile clamp for grid points arbitrarily close to the corners.
constexpr double kUClamp = 1e-12;
} // namespace

CopulaFamily CopulaFamily::gaussian(double rho) {
    if (!(std::abs(rho) < 1.0))
        throw InvalidArgument("CopulaFamily: Gaussian rho must lie strictly inside (-1, 1)");
    return CopulaFamily(FamilyId::GaussianRho, rho);
}

std::string CopulaFamily::name() const {
    switch (id_) {
        case FamilyId::Independence: return "independence";
        case FamilyId::GaussianRho: return "gaussian(rho=" + std::to_string(rho_) + ")";
    }
    return "?";
}

double copula_cdf(const CopulaFamily& fam, double u1, double u2) {
    if (!(u1 >= 0.0 && u1 <= 1.0 && u2 >= 0.0 && u2 <= 1.0))
        throw InvalidArgument("copula_cdf: u must lie in [0, 1]^2");
    if (u1 == 0.0 || u2 == 0.0) return 0.0;
    if (u1 == 1.0) return u2;
    if (u2 == 1.0) return u1;

    switch (fam.id()) {
        case FamilyId::Independence:
            return u1 * u2;
        case FamilyId::GaussianRho: {
            const double rho = fam.theta();
            if (rho == 0.0) return u1 * u2;
            const double a = norm_quantile(std::clamp(u1, kUClamp, 1.0 - kUClamp));
            const double b = norm_quantile(std::clamp(u2, kUClamp, 1.0 - kUClamp));
            return bvn_cdf(a, b, rho);
        }
    }
    return 0.0;
}

double kendall_tau(const CopulaFamily& fam) {
    switch (fam.id()) {
        case FamilyId::Independence: return 0.0;
        case FamilyId::GaussianRho: return 2.0 * std::asin(fam.theta()) / kPi;
    }
    return 0.0;
}

double spearman_rho(const CopulaFamily& fam) {
    switch (fam.id()) {
        case FamilyId::Independence: return 0.0;
        case FamilyId::GaussianRho: return 6.0 / kPi * std::asin(fam.theta() / 2.0);
    }
    return 0.0;
}

} // namespace nonsimplify
