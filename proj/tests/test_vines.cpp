#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "nonsimplify/errors.hpp"
#include "nonsimplify/model.hpp"
#include "nonsimplify/vines.hpp"

using namespace nonsimplify;

namespace {

// Independent brute force for d = 3: a vine is (spanning tree on {0,1,2},
// then the single possible second tree joining its two edges). Enumerate the
// first trees directly as 2-subsets of the 3 possible edges.
std::vector<VineStructure> brute_force_d3() {
    const std::vector<std::pair<int, int>> all_edges = {{0, 1}, {0, 2}, {1, 2}};
    std::vector<VineStructure> out;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) {
            // two distinct edges on 3 vertices always form a spanning tree
            const auto [a1, b1] = all_edges[i];
            const auto [a2, b2] = all_edges[j];
            VineStructure v;
            v.d = 3;
            v.trees.resize(2);
            v.trees[0].push_back(VineEdge{a1, b1, {}});
            v.trees[0].push_back(VineEdge{a2, b2, {}});
            // second tree: conditioned pair = symmetric difference,
            // conditioning = shared vertex
            std::set<int> s1 = {a1, b1}, s2 = {a2, b2};
            std::vector<int> inter, sym;
            std::set_intersection(s1.begin(), s1.end(), s2.begin(), s2.end(),
                                  std::back_inserter(inter));
            std::set_symmetric_difference(s1.begin(), s1.end(), s2.begin(), s2.end(),
                                          std::back_inserter(sym));
            v.trees[1].push_back(VineEdge{sym[0], sym[1], inter});
            out.push_back(std::move(v));
        }
    return out;
}

std::string canon(const VineStructure& v) { return vine_to_json(v); }

} // namespace

TEST_CASE("vine enumeration counts match the closed formula") {
    CHECK(vine_count_formula(2) == 1);
    CHECK(vine_count_formula(3) == 3);
    CHECK(vine_count_formula(4) == 24);
    CHECK(vine_count_formula(5) == 480);
    for (int d = 2; d <= 5; ++d) {
        const auto vines = enumerate_vines(d);
        CHECK(vines.size() == vine_count_formula(d));
        std::set<std::string> distinct;
        for (const auto& v : vines) {
            CHECK(validate_vine(v).empty());
            distinct.insert(canon(v));
        }
        CHECK(distinct.size() == vines.size());
    }
    CHECK_THROWS_AS(enumerate_vines(6), DimensionTooLarge);
    CHECK_THROWS_AS(enumerate_vines(1), InvalidArgument);
}

TEST_CASE("d = 3 enumeration agrees with an independent brute force") {
    const auto lib = enumerate_vines(3);
    const auto brute = brute_force_d3();
    CHECK(brute.size() == 3);
    std::set<std::string> a, b;
    for (const auto& v : lib) a.insert(canon(v));
    for (const auto& v : brute) {
        CHECK(validate_vine(v).empty());
        b.insert(canon(v));
    }
    CHECK(a == b);
}

TEST_CASE("validation rejects corrupted structures") {
    std::mt19937_64 gen(13);
    const auto pool4 = enumerate_vines(4);
    const auto pool5 = enumerate_vines(5);
    std::uniform_int_distribution<std::size_t> pick4(0, pool4.size() - 1);
    std::uniform_int_distribution<std::size_t> pick5(0, pool5.size() - 1);
    int rejected = 0;
    for (int t = 0; t < 100; ++t) {
        VineStructure v = (t % 2 == 0) ? pool4[pick4(gen)] : pool5[pick5(gen)];
        auto& trees = v.trees;
        std::uniform_int_distribution<std::size_t> tree_pick(1, trees.size() - 1);
        const std::size_t k = tree_pick(gen);
        auto& edge = trees[k][gen() % trees[k].size()];
        switch (t % 4) {
            case 0: // swap a conditioned label with one from the conditioning set
                std::swap(edge.a, edge.cond[gen() % edge.cond.size()]);
                std::sort(edge.cond.begin(), edge.cond.end());
                break;
            case 1: { // move one conditioning label to a different label
                const std::size_t j = gen() % edge.cond.size();
                edge.cond[j] = (edge.cond[j] + 1 +
                                static_cast<int>(gen() % (v.d - 1))) % v.d;
                std::sort(edge.cond.begin(), edge.cond.end());
                break;
            }
            case 2: // duplicate conditioned labels
                edge.b = edge.a;
                break;
            case 3: // drop an edge entirely
                trees[k].pop_back();
                break;
        }
        if (!validate_vine(v).empty()) ++rejected;
    }
    CHECK(rejected == 100);
}

TEST_CASE("vine measures: structure-level properties") {
    const Dataset data = sample_gaussian_copula(
        {1.0, 0.3, 0.2, 0.3, 1.0, 0.4, 0.2, 0.4, 1.0}, 3, 400, 5);
    VineScoreSpec spec;
    spec.estimator.n_design = 8;

    // d = 2: no conditioned edges
    const auto v2 = enumerate_vines(2)[0];
    CHECK(vine_measure(data, v2, spec) == 0.0);

    // d = 3: the measure equals the single second-tree edge measure
    const auto v3 = enumerate_vines(3)[0];
    EdgeMeasureCache cache;
    const double m3 = vine_measure(data, v3, spec, &cache);
    CHECK(m3 == doctest::Approx(edge_measure(data, v3.trees[1][0], spec, &cache)));

    // max-norm is bounded by the sum
    VineScoreSpec norm_spec = spec;
    norm_spec.aggregation = VineAggregation::Norm;
    norm_spec.norm_q = std::numeric_limits<double>::infinity();
    const auto v4pool = enumerate_vines(3);
    for (const auto& v : v4pool)
        CHECK(vine_measure(data, v, norm_spec, &cache) <=
              vine_measure(data, v, spec, &cache) + 1e-12);

    // first-tree (unconditioned) edges are rejected by edge_measure
    CHECK_THROWS_AS(edge_measure(data, v3.trees[0][0], spec), InvalidArgument);
}

TEST_CASE("vine scores: ordering, memoization, relabeling") {
    const Dataset data = sample_sign_mixture3(500, 17);
    VineScoreSpec spec;
    spec.estimator.n_design = 10;

    const auto report = vine_scores(data, 3, spec, 2);
    CHECK(report.per_vine.size() == 3);
    CHECK(report.bcns <= report.acns + 1e-12);
    CHECK(report.acns <= report.wcns + 1e-12);

    // memoization invariance: recompute without any cache
    for (const auto& [v, m] : report.per_vine)
        CHECK(m == doctest::Approx(vine_measure(data, v, spec, nullptr)).epsilon(1e-15));

    // relabeling equivariance: permuting columns permutes per-vine values
    // but leaves the three scores unchanged
    Dataset perm = data;
    for (std::size_t i = 0; i < data.n; ++i) {
        perm.x[3 * i] = data.xv(i, 2);
        perm.x[3 * i + 1] = data.xv(i, 0);
        perm.x[3 * i + 2] = data.xv(i, 1);
    }
    const auto report2 = vine_scores(perm, 3, spec, 2);
    CHECK(report2.wcns == doctest::Approx(report.wcns).epsilon(1e-12));
    CHECK(report2.bcns == doctest::Approx(report.bcns).epsilon(1e-12));
    CHECK(report2.acns == doctest::Approx(report.acns).epsilon(1e-12));
    std::multiset<double> a, b;
    for (const auto& [v, m] : report.per_vine) a.insert(m);
    for (const auto& [v, m] : report2.per_vine) b.insert(m);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end(),
                     [](double x, double y) { return std::abs(x - y) < 1e-12; }));
}

TEST_CASE("gaussian data has small conditioned-edge measures") {
    const Dataset gauss = sample_gaussian_copula(
        {1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0}, 3, 2000, 23);
    VineScoreSpec spec;
    const auto vines = enumerate_vines(3);
    for (const auto& v : vines)
        CHECK(edge_measure(gauss, v.trees[1][0], spec) < 0.35);

    // the sign-modulated mixture has a strongly varying conditional tau
    const Dataset mix = sample_sign_mixture3(2000, 23);
    VineEdge e{1, 2, {0}};
    CHECK(edge_measure(mix, e, spec) > 0.5);

    // independent data: every score near zero
    const Dataset indep = sample_gaussian_copula(
        {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0}, 3, 2000, 29);
    const auto report = vine_scores(indep, 3, spec, 2);
    CHECK(report.wcns < 0.3);
}

TEST_CASE("vine JSON serialization shape") {
    const auto vines = enumerate_vines(3);
    const std::string js = vines_to_json(vines);
    CHECK(js.find("\"count\":3") != std::string::npos);
    CHECK(js.find("\"conditioned\"") != std::string::npos);
    CHECK(js.find("\"conditioning\"") != std::string::npos);
}
