#pragma once

#include <string>

namespace nonsimplify {

enum class FamilyId { Independence, GaussianRho };

/// A bivariate copula family, either the independence copula or the
/// Gaussian copula with correlation parameter rho in (-1, 1).
class CopulaFamily {
public:
    static CopulaFamily independence() { return CopulaFamily(FamilyId::Independence, 0.0); }
    static CopulaFamily gaussian(double rho);

    FamilyId id() const { return id_; }

    /// Scalar dependence parameter; the independence copula reports 0.
    double theta() const { return rho_; }

    std::string name() const;

private:
    CopulaFamily(FamilyId id, double rho) : id_(id), rho_(rho) {}
    FamilyId id_;
    double rho_;
};

/// Copula CDF at u = (u1, u2) in [0, 1]^2.
double copula_cdf(const CopulaFamily& fam, double u1, double u2);

/// Population Kendall's tau of the family.
double kendall_tau(const CopulaFamily& fam);

/// Population Spearman's rho of the family.
double spearman_rho(const CopulaFamily& fam);

} // namespace nonsimplify
