#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "nonsimplify/dataset.hpp"
#include "nonsimplify/estimators.hpp"
#include "nonsimplify/kernel.hpp"

namespace nonsimplify {

/// Edge of a vine tree: conditioned pair {a, b} and conditioning set D
/// (zero-based variable labels, all kept sorted).
struct VineEdge {
    int a = 0, b = 0;
    std::vector<int> cond;

    bool operator==(const VineEdge&) const = default;
    auto operator<=>(const VineEdge&) const = default;
};

/// Regular vine: trees T_1..T_{d-1}; edges of T_k are the nodes of T_{k+1}
/// and every edge of T_{k+1} joins two T_k edges sharing a common node.
struct VineStructure {
    int d = 0;
    std::vector<std::vector<VineEdge>> trees;

    bool operator==(const VineStructure&) const = default;
};

/// Checks the regular-vine invariants; returns an empty string when valid,
/// else a description of the first violation.
std::string validate_vine(const VineStructure& v);

/// All labeled regular vines on d variables, 2 <= d <= 5.
/// Throws DimensionTooLarge beyond d = 5.
std::vector<VineStructure> enumerate_vines(int d);

/// Card(V_d) for the labeled count: d!/2 * 2^((d-2)(d-3)/2).
std::size_t vine_count_formula(int d);

enum class VineAggregation { Sum, Norm };

struct VineScoreSpec {
    VineAggregation aggregation = VineAggregation::Sum;
    double norm_q = 2.0;              // exponent for Norm; infinity() gives the max
    EstimatorSpec estimator;          // measure defaults to CKTSupPairwise
    KernelSpec kernel{Kernel::Epanechnikov, -1.0, {}}; // h <= 0: per-edge plug-in rule
};

/// Memo cache for edge measures keyed by (conditioned pair, conditioning set);
/// safe for concurrent insert-or-get.
class EdgeMeasureCache {
public:
    bool lookup(const VineEdge& e, double* out) const;
    void store(const VineEdge& e, double value);
    std::map<VineEdge, double> snapshot() const;

private:
    mutable std::mutex mu_;
    std::map<VineEdge, double> map_;
};

/// Measure of one conditioned edge: the chosen CKT-based pseudo-measure of
/// the pair (X_a, X_b) conditionally on X_D. Requires a nonempty D.
double edge_measure(const Dataset& data, const VineEdge& e, const VineScoreSpec& spec,
                    EdgeMeasureCache* cache = nullptr);

/// Aggregated measure over the conditioned edges (trees 2..d-1) of one vine.
double vine_measure(const Dataset& data, const VineStructure& v, const VineScoreSpec& spec,
                    EdgeMeasureCache* cache = nullptr);

struct VineScoreReport {
    std::vector<std::pair<VineStructure, double>> per_vine;
    double wcns = 0.0, bcns = 0.0, acns = 0.0;
    VineAggregation aggregation = VineAggregation::Sum;
    std::map<VineEdge, double> edge_values;
};

/// WCNS/BCNS/ACNS over all d-dimensional vines, with edge memoization.
VineScoreReport vine_scores(const Dataset& data, int d, const VineScoreSpec& spec,
                            std::size_t threads = 1);

/// JSON forms used by the CLI (one edge object: {"conditioned":[a,b],
/// "conditioning":[...]}, with one-based labels).
std::string vine_to_json(const VineStructure& v);
std::string vines_to_json(const std::vector<VineStructure>& vines);

} // namespace nonsimplify
