#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nonsimplify/dataset.hpp"
#include "nonsimplify/kernel.hpp"

namespace nonsimplify {

enum class EstMeasure {
    Psi1CvM,
    Psi1KS,
    Psi0TildeCvM,
    Psi0TildeKS,
    CKTSupPairwise,
    CKTSumPairwise,
    CKTDistToAverage
};

enum class AveVariant { Cs3, Cs4 };
enum class PseudoZ { Auto, Raw, RankTransformed };

EstMeasure parse_est_measure(const std::string& name);
std::string est_measure_name(EstMeasure m);
AveVariant parse_ave_variant(const std::string& name);
std::string ave_variant_name(AveVariant v);

bool is_ckt_measure(EstMeasure m);

/// How a plug-in measure is evaluated: which measure, which average-copula
/// estimator, the u grid, the design points in z, and the Z treatment.
struct EstimatorSpec {
    EstMeasure measure = EstMeasure::CKTSupPairwise;
    AveVariant ave_variant = AveVariant::Cs3;
    int u_grid = 50;
    std::size_t n_design = 20;
    std::vector<std::vector<double>> z_design; // empty: quantile defaults
    PseudoZ pseudo_z = PseudoZ::Auto;

    void validate() const;
    /// Auto resolves to rank-transformed Z for the conditional-copula
    /// measures and raw Z for the CKT measures.
    bool use_ranks() const;
};

struct MeasureEstimate {
    double value = 0.0;
    EstMeasure measure;
    AveVariant ave_variant;
    double h = 0.0;
    Kernel kernel;
    bool ranks = false;
    std::size_t n = 0;
    std::size_t n_design = 0;
    int u_grid = 0;
};

/// Weighted empirical CDF of one margin: right-continuous nondecreasing step
/// function with limits 0 and 1, plus its generalized inverse.
class StepCdf {
public:
    StepCdf(std::vector<double> xs, std::vector<double> cum_weights);

    double operator()(double x) const;

    /// Generalized inverse F^-(u) = inf{x : F(x) >= u}; u = 0 maps to the
    /// smallest support point.
    double quantile(double u) const;

    std::size_t support_size() const { return xs_.size(); }

private:
    std::vector<double> xs_;   // ascending jump points
    std::vector<double> cum_;  // cumulative weights, last entry 1
};

/// Kernel-weighted conditional ECDF of X margin `margin` given Z = z.
StepCdf cond_ecdf(const Dataset& data, const std::vector<double>& z, const KernelSpec& k,
                  std::size_t margin, bool pseudo_z = false);

double cond_quantile(const StepCdf& cdf, double u);

/// Conditional empirical copula at u given Z = z (d = 2).
double cond_empirical_copula(const Dataset& data, const std::vector<double>& z,
                             const KernelSpec& k, double u1, double u2, bool pseudo_z = true);

/// Average conditional copula estimators (d = 2).
double ave_copula_cs3(const Dataset& data, const KernelSpec& k, double u1, double u2,
                      bool pseudo_z = true);
double ave_copula_cs4(const Dataset& data, const KernelSpec& k, double u1, double u2,
                      bool pseudo_z = true);

/// Kernel conditional Kendall's tau at Z = z. With uniform weights this is
/// exactly the classical sample Kendall's tau.
double cond_kendall_tau(const Dataset& data, const std::vector<double>& z, const KernelSpec& k,
                        bool pseudo_z = false);

/// Default design points: the (i - 0.5)/n' empirical quantiles of Z (p = 1),
/// or observed Z rows subsampled along the first coordinate (p > 1).
std::vector<std::vector<double>> default_design_points(const Dataset& data, std::size_t n_design);

/// Plug-in estimate of one measure of non-simplifyingness.
MeasureEstimate estimate_measure(const Dataset& data, const EstimatorSpec& espec,
                                 const KernelSpec& k, std::size_t threads = 1);

/// Batch variant sharing the conditional-copula grids across measures
/// (identical results to calling estimate_measure per entry).
std::vector<MeasureEstimate> estimate_measures(
    const Dataset& data, const EstimatorSpec& base,
    const std::vector<std::pair<EstMeasure, AveVariant>>& measures, const KernelSpec& k,
    std::size_t threads = 1);

/// Verifies that strictly increasing marginal transforms leave the rank/sign
/// based estimators unchanged (within 1e-12). Throws InvalidArgument if a
/// transform is not strictly increasing on the observed values.
bool marginal_transform_check(const Dataset& data,
                              const std::vector<std::function<double(double)>>& transforms,
                              const KernelSpec& k);

} // namespace nonsimplify
