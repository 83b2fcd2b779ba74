#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nonsimplify/model.hpp"

namespace nonsimplify {

enum class OracleMeasure { Psi1CvM, Psi1KS, Psi0TildeCvM, Psi0TildeKS, ParamSup, ParamInt };

OracleMeasure parse_oracle_measure(const std::string& name);
std::string oracle_measure_name(OracleMeasure m);

enum class QuadRule { Trapezoid, GaussLegendre };

struct RefineSpec {
    int passes = 3;
    double shrink = 0.5;
};

struct OracleSpec {
    int u_grid = 101;    // per-axis count for the u tensor / scan
    int z_grid = 201;    // count for the z quadrature / scan
    QuadRule quad = QuadRule::Trapezoid;
    RefineSpec refine;

    void validate() const;
};

/// A computed population measure with a grid-halving error estimate.
struct MeasureValue {
    double value = 0.0;
    double abs_err_estimate = 0.0;
    std::uint64_t evaluations = 0;
};

/// Average conditional copula at u, integrating z over the model domain.
/// mu, when given, holds nonnegative weights over the spec's z nodes
/// (default: the quadrature weights of the uniform law of Z).
double average_copula(const ConditionalCopulaModel& model, double u1, double u2,
                      const OracleSpec& spec, const std::vector<double>* mu = nullptr);

/// Quadrature nodes the oracle uses on the model's z domain.
std::vector<double> oracle_z_nodes(const ConditionalCopulaModel& model, const OracleSpec& spec);

/// ( int_{u,z} |C(u|z) - C_ave(u)|^2 du dz )^(1/2)
MeasureValue true_psi1_cvm(const ConditionalCopulaModel& model, const OracleSpec& spec);

/// sup_{u,z} |C(u|z) - C_ave(u)| via grid scan plus local refinement.
MeasureValue true_psi1_ks(const ConditionalCopulaModel& model, const OracleSpec& spec);

/// ( int_{u,z,z'} |C(u|z) - C(u|z')|^2 du dz dz' )^(1/2)
MeasureValue true_psi0_cvm(const ConditionalCopulaModel& model, const OracleSpec& spec);

/// sup_{u,z,z'} |C(u|z) - C(u|z')| via grid scan plus local refinement.
MeasureValue true_psi0_ks(const ConditionalCopulaModel& model, const OracleSpec& spec);

enum class ParamVariant { SupPairwise, DistToAverage };

/// Measures of non-constantness of the scalar parameter map z -> theta(z):
/// SupPairwise = sup |theta(z) - theta(z')|, DistToAverage = sup |theta(z) - mean theta|.
MeasureValue true_param_measure(const ConditionalCopulaModel& model, ParamVariant variant,
                                const OracleSpec& spec);

/// Dispatch by measure id.
MeasureValue compute_oracle(const ConditionalCopulaModel& model, OracleMeasure measure,
                            const OracleSpec& spec);

/// Group-average over permutations of the X components (and of the Z
/// components; p = 1 here, so that sum has a single term).
double symmetrize(const std::function<double(const ConditionalCopulaModel&)>& psi,
                  const ConditionalCopulaModel& model);

} // namespace nonsimplify
