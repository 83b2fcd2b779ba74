#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonsimplify/estimators.hpp"

namespace nonsimplify {

/// Configuration of one simulation study run.
struct SimConfig {
    std::vector<std::string> dgps = {"indep", "gauss_0_5", "gauss_0.8z"};
    std::size_t n = 2000;
    std::size_t replications = 50;
    std::vector<double> h_grid;   // empty: default_h_grid()
    std::vector<std::pair<EstMeasure, AveVariant>> measures; // empty: default_measures()
    std::uint64_t base_seed = 20240901;
    std::size_t n_design = 20;
    int u_grid = 50;
    Kernel kernel = Kernel::Epanechnikov;
    bool record_timing = false;

    void validate() const;
    static std::vector<double> default_h_grid();
    static std::vector<std::pair<EstMeasure, AveVariant>> default_measures();
};

/// One (dgp, measure, h, replication) result. A failed estimate keeps its
/// row with estimate unset and the error recorded.
struct SimResultRow {
    std::string dgp;
    EstMeasure measure;
    AveVariant ave_variant;
    double h = 0.0;
    std::size_t rep = 0;
    std::optional<double> estimate;
    std::string error;
    double true_value = 0.0;
    std::int64_t elapsed_ms = 0;
};

struct SimSummaryRow {
    std::string dgp;
    EstMeasure measure;
    AveVariant ave_variant;
    double h = 0.0;
    double median = 0.0, q25 = 0.0, q75 = 0.0;
    double true_value = 0.0;
    std::size_t n_ok = 0;
};

/// Runs the full study. Deterministic given cfg, for any worker count:
/// replication r of each DGP is sampled with seed base_seed XOR r.
std::vector<SimResultRow> run_study(const SimConfig& cfg, std::size_t threads = 1);

/// Per-(dgp, measure, ave_variant, h) robust summary over replications.
std::vector<SimSummaryRow> summarize(const std::vector<SimResultRow>& rows);

/// CSV emission (LF endings, stable formatting).
std::string rows_to_csv(const std::vector<SimResultRow>& rows);
std::string summary_to_csv(const std::vector<SimSummaryRow>& rows);

/// Sample quantile (linear interpolation between order statistics).
double sample_quantile(std::vector<double> values, double q);

std::size_t resolve_threads(long requested);

} // namespace nonsimplify
