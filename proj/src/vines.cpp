#include "nonsimplify/vines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "json.hpp"
#include "nonsimplify/errors.hpp"
#include "nonsimplify/threading.hpp"

namespace nonsimplify {

namespace {

using IntSet = std::vector<int>; // sorted

IntSet set_union(const IntSet& a, const IntSet& b) {
    IntSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

IntSet set_intersection(const IntSet& a, const IntSet& b) {
    IntSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

IntSet set_difference(const IntSet& a, const IntSet& b) {
    IntSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

// All spanning trees over `nodes` vertices using the allowed edge list,
// by brute force over (nodes-1)-subsets.
std::vector<std::vector<std::pair<int, int>>> spanning_trees(
    int nodes, const std::vector<std::pair<int, int>>& allowed) {
    std::vector<std::vector<std::pair<int, int>>> out;
    const int need = nodes - 1;
    if (need == 0) {
        out.push_back({});
        return out;
    }
    if (static_cast<int>(allowed.size()) < need) return out;
    std::vector<int> pick(need);
    std::iota(pick.begin(), pick.end(), 0);
    for (;;) {
        UnionFind uf(nodes);
        bool ok = true;
        for (int i : pick)
            if (!uf.unite(allowed[i].first, allowed[i].second)) {
                ok = false;
                break;
            }
        if (ok) {
            std::vector<std::pair<int, int>> tree;
            for (int i : pick) tree.push_back(allowed[i]);
            out.push_back(std::move(tree));
        }
        // next combination
        int j = need - 1;
        while (j >= 0 && pick[j] == static_cast<int>(allowed.size()) - need + j) --j;
        if (j < 0) break;
        ++pick[j];
        for (int t = j + 1; t < need; ++t) pick[t] = pick[t - 1] + 1;
    }
    return out;
}

// A node of the tree under construction: the constraint set of the
// previous-level edge it came from, plus that edge's endpoints (node ids in
// the previous level) for the proximity test.
struct BuildNode {
    IntSet constraint;
    int prev1 = -1, prev2 = -1;
};

void enumerate_rec(int d, std::vector<BuildNode> nodes, std::vector<std::vector<VineEdge>> trees,
                   bool first_level, std::vector<VineStructure>& out) {
    if (nodes.size() == 1) {
        out.push_back(VineStructure{d, std::move(trees)});
        return;
    }
    std::vector<std::pair<int, int>> allowed;
    const int m = static_cast<int>(nodes.size());
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            if (first_level) {
                allowed.emplace_back(i, j);
            } else {
                // proximity: the two previous-level edges share a node
                const auto& a = nodes[i];
                const auto& b = nodes[j];
                if (a.prev1 == b.prev1 || a.prev1 == b.prev2 || a.prev2 == b.prev1 ||
                    a.prev2 == b.prev2)
                    allowed.emplace_back(i, j);
            }
        }
    for (const auto& tree : spanning_trees(m, allowed)) {
        std::vector<VineEdge> edges;
        std::vector<BuildNode> next;
        for (const auto& [i, j] : tree) {
            const IntSet u = set_union(nodes[i].constraint, nodes[j].constraint);
            const IntSet inter = set_intersection(nodes[i].constraint, nodes[j].constraint);
            IntSet conditioned = set_difference(u, inter);
            VineEdge e;
            e.a = conditioned[0];
            e.b = conditioned[1];
            e.cond = inter;
            edges.push_back(e);
            next.push_back(BuildNode{u, i, j});
        }
        auto trees2 = trees;
        trees2.push_back(std::move(edges));
        enumerate_rec(d, std::move(next), std::move(trees2), false, out);
    }
}

} // namespace

std::size_t vine_count_formula(int d) {
    std::size_t fact = 1;
    for (int i = 2; i <= d; ++i) fact *= i;
    const int e = (d - 2) * (d - 3) / 2;
    return fact / 2 * (std::size_t{1} << e);
}

std::vector<VineStructure> enumerate_vines(int d) {
    if (d < 2) throw InvalidArgument("enumerate_vines: d must be >= 2");
    if (d > 5) throw DimensionTooLarge("enumerate_vines: d capped at 5");
    std::vector<BuildNode> nodes(d);
    for (int i = 0; i < d; ++i) nodes[i].constraint = {i};
    std::vector<VineStructure> out;
    enumerate_rec(d, std::move(nodes), {}, true, out);
    for (const auto& v : out) {
        const std::string err = validate_vine(v);
        if (!err.empty()) throw NumericError("enumerate_vines: produced invalid vine: " + err);
    }
    return out;
}

std::string validate_vine(const VineStructure& v) {
    if (v.d < 2) return "d must be >= 2";
    if (static_cast<int>(v.trees.size()) != v.d - 1)
        return "expected " + std::to_string(v.d - 1) + " trees";

    // Constraint sets of the previous level's edges, with their endpoints
    // (ids meaningful inside that level) for the proximity check.
    std::vector<BuildNode> prev(v.d);
    for (int i = 0; i < v.d; ++i) prev[i].constraint = {i};

    for (int k = 0; k < v.d - 1; ++k) {
        const auto& tree = v.trees[k];
        const int m = static_cast<int>(prev.size());
        if (static_cast<int>(tree.size()) != m - 1)
            return "tree " + std::to_string(k + 1) + ": wrong edge count";

        std::vector<BuildNode> next;
        UnionFind uf(m);
        std::set<std::pair<int, int>> used;
        for (const auto& e : tree) {
            if (e.a == e.b || e.a < 0 || e.b < 0 || e.a >= v.d || e.b >= v.d)
                return "tree " + std::to_string(k + 1) + ": bad conditioned pair";
            if (static_cast<int>(e.cond.size()) != k)
                return "tree " + std::to_string(k + 1) + ": conditioning set must have " +
                       std::to_string(k) + " elements";
            IntSet pair = {std::min(e.a, e.b), std::max(e.a, e.b)};
            if (!set_intersection(pair, e.cond).empty())
                return "tree " + std::to_string(k + 1) + ": conditioned and conditioning overlap";
            const IntSet u = set_union(pair, e.cond);
            if (static_cast<int>(u.size()) != k + 2)
                return "tree " + std::to_string(k + 1) + ": constraint set has wrong size";

            // The edge must join two previous-level nodes: their constraint
            // sets union to u and intersect to the conditioning set, and
            // (beyond the first tree) they must share a previous-level node.
            int found_i = -1, found_j = -1;
            for (int i = 0; i < m && found_i < 0; ++i)
                for (int j = i + 1; j < m; ++j) {
                    if (set_union(prev[i].constraint, prev[j].constraint) != u) continue;
                    if (set_intersection(prev[i].constraint, prev[j].constraint) != e.cond)
                        continue;
                    if (k >= 1) {
                        const auto& a = prev[i];
                        const auto& b = prev[j];
                        const bool share = a.prev1 == b.prev1 || a.prev1 == b.prev2 ||
                                           a.prev2 == b.prev1 || a.prev2 == b.prev2;
                        if (!share) continue;
                    }
                    if (used.count({i, j})) continue;
                    found_i = i;
                    found_j = j;
                    break;
                }
            if (found_i < 0)
                return "tree " + std::to_string(k + 1) +
                       ": edge does not join two adjacent nodes of the previous tree";
            used.insert({found_i, found_j});
            if (!uf.unite(found_i, found_j))
                return "tree " + std::to_string(k + 1) + ": edges form a cycle";
            next.push_back(BuildNode{u, found_i, found_j});
        }
        prev = std::move(next);
    }
    return "";
}

bool EdgeMeasureCache::lookup(const VineEdge& e, double* out) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = map_.find(e);
    if (it == map_.end()) return false;
    *out = it->second;
    return true;
}

void EdgeMeasureCache::store(const VineEdge& e, double value) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(e, value); // idempotent: recomputation yields the same value
}

std::map<VineEdge, double> EdgeMeasureCache::snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_;
}

namespace {

VineEdge canonical_edge(const VineEdge& e) {
    VineEdge c;
    c.a = std::min(e.a, e.b);
    c.b = std::max(e.a, e.b);
    c.cond = e.cond;
    std::sort(c.cond.begin(), c.cond.end());
    return c;
}

double column_iqr(const Dataset& data, std::size_t col) {
    std::vector<double> v = data.x_column(col);
    std::sort(v.begin(), v.end());
    const auto at = [&](double q) {
        const std::size_t idx = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(v.size()) - 1e-9)) - 1;
        return v[std::min(idx, v.size() - 1)];
    };
    double iqr = at(0.75) - at(0.25);
    if (iqr <= 0.0) {
        double mean = 0.0;
        for (double t : v) mean += t;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double t : v) var += (t - mean) * (t - mean);
        iqr = 1.349 * std::sqrt(var / static_cast<double>(v.size()));
    }
    return iqr > 0.0 ? iqr : 1.0;
}

} // namespace

double edge_measure(const Dataset& data, const VineEdge& edge, const VineScoreSpec& spec,
                    EdgeMeasureCache* cache) {
    const VineEdge e = canonical_edge(edge);
    if (e.cond.empty())
        throw InvalidArgument("edge_measure: conditioning set must be nonempty (trees >= 2)");
    if (!is_ckt_measure(spec.estimator.measure))
        throw InvalidArgument("edge_measure: only the CKT-based measures are supported");
    if (e.b >= static_cast<int>(data.d) || e.cond.back() >= static_cast<int>(data.d))
        throw InvalidArgument("edge_measure: variable label outside the dataset");
    if (cache) {
        double hit;
        if (cache->lookup(e, &hit)) return hit;
    }

    const std::size_t p = e.cond.size();
    Dataset sub;
    sub.n = data.n;
    sub.d = 2;
    sub.p = p;
    sub.x.resize(2 * data.n);
    sub.z.resize(p * data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        sub.x[2 * i] = data.xv(i, e.a);
        sub.x[2 * i + 1] = data.xv(i, e.b);
        for (std::size_t j = 0; j < p; ++j) sub.z[i * p + j] = data.xv(i, e.cond[j]);
    }

    KernelSpec k = spec.kernel;
    k.scales.resize(p);
    for (std::size_t j = 0; j < p; ++j) k.scales[j] = column_iqr(data, e.cond[j]);
    if (k.h <= 0.0) {
        // Silverman-type plug-in with the Epanechnikov canonical factor,
        // expressed in IQR units: h * IQR_j = 2.214 (IQR_j / 1.349) n^(-1/(p+4)).
        k.h = (2.214 / 1.349) *
              std::pow(static_cast<double>(data.n), -1.0 / (static_cast<double>(p) + 4.0));
    }

    const double value = estimate_measure(sub, spec.estimator, k).value;
    if (cache) cache->store(e, value);
    return value;
}

double vine_measure(const Dataset& data, const VineStructure& v, const VineScoreSpec& spec,
                    EdgeMeasureCache* cache) {
    const std::string err = validate_vine(v);
    if (!err.empty()) throw InvalidArgument("vine_measure: invalid vine: " + err);
    std::vector<double> values;
    for (std::size_t k = 1; k < v.trees.size(); ++k)
        for (const auto& e : v.trees[k]) values.push_back(edge_measure(data, e, spec, cache));
    if (values.empty()) return 0.0;
    if (spec.aggregation == VineAggregation::Sum) {
        double total = 0.0;
        for (double t : values) total += t;
        return total;
    }
    if (std::isinf(spec.norm_q)) return *std::max_element(values.begin(), values.end());
    if (!(spec.norm_q >= 1.0)) throw InvalidArgument("vine_measure: norm exponent must be >= 1");
    double total = 0.0;
    for (double t : values) total += std::pow(t, spec.norm_q);
    return std::pow(total, 1.0 / spec.norm_q);
}

VineScoreReport vine_scores(const Dataset& data, int d, const VineScoreSpec& spec,
                            std::size_t threads) {
    if (static_cast<int>(data.d) < d)
        throw InvalidArgument("vine_scores: dataset has fewer than d columns");
    const auto vines = enumerate_vines(d);

    // Distinct conditioned edges across all vines, computed once each.
    std::set<VineEdge> edge_set;
    for (const auto& v : vines)
        for (std::size_t k = 1; k < v.trees.size(); ++k)
            for (const auto& e : v.trees[k]) edge_set.insert(canonical_edge(e));
    std::vector<VineEdge> edges(edge_set.begin(), edge_set.end());

    EdgeMeasureCache cache;
    parallel_for(edges.size(), threads,
                 [&](std::size_t i) { edge_measure(data, edges[i], spec, &cache); });

    VineScoreReport report;
    report.aggregation = spec.aggregation;
    report.per_vine.reserve(vines.size());
    double total = 0.0;
    for (const auto& v : vines) {
        const double m = vine_measure(data, v, spec, &cache);
        report.per_vine.emplace_back(v, m);
        total += m;
    }
    report.wcns = report.per_vine[0].second;
    report.bcns = report.per_vine[0].second;
    for (const auto& [v, m] : report.per_vine) {
        report.wcns = std::max(report.wcns, m);
        report.bcns = std::min(report.bcns, m);
    }
    report.acns = total / static_cast<double>(report.per_vine.size());
    report.edge_values = cache.snapshot();
    return report;
}

std::string vine_to_json(const VineStructure& v) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : v.trees) {
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& e : tree) {
            nlohmann::json cond = nlohmann::json::array();
            for (int c : e.cond) cond.push_back(c + 1);
            edges.push_back({{"conditioned", {e.a + 1, e.b + 1}}, {"conditioning", cond}});
        }
        trees.push_back(edges);
    }
    return nlohmann::json{{"d", v.d}, {"trees", trees}}.dump();
}

std::string vines_to_json(const std::vector<VineStructure>& vines) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : vines) arr.push_back(nlohmann::json::parse(vine_to_json(v)));
    nlohmann::json out{{"count", vines.size()}, {"vines", arr}};
    if (!vines.empty()) out["d"] = vines[0].d;
    return out.dump();
}

} // namespace nonsimplify
