#include <set>

#include "doctest.h"
#include "nonsimplify/errors.hpp"
#include "nonsimplify/sim.hpp"

using namespace nonsimplify;

namespace {

SimConfig tiny_config() {
    SimConfig cfg;
    cfg.n = 300;
    cfg.replications = 2;
    cfg.h_grid = {0.2, 0.4};
    cfg.measures = {{EstMeasure::Psi1CvM, AveVariant::Cs3}, {EstMeasure::CKTSupPairwise, AveVariant::Cs3}};
    cfg.u_grid = 16;
    cfg.n_design = 8;
    cfg.base_seed = 123;
    return cfg;
}

} // namespace

TEST_CASE("run_study cardinality") {
    SimConfig cfg = tiny_config();
    cfg.replications = 1;
    cfg.h_grid = {0.3};
    cfg.measures = {{EstMeasure::CKTSupPairwise, AveVariant::Cs3}};
    const auto rows = run_study(cfg, 1);
    CHECK(rows.size() == cfg.dgps.size());
    std::set<std::string> dgps;
    for (const auto& r : rows) {
        dgps.insert(r.dgp);
        CHECK(r.estimate.has_value());
        CHECK(*r.estimate >= 0.0);
        CHECK(r.elapsed_ms == 0); // timing disabled by default
    }
    CHECK(dgps.size() == 3);
}

TEST_CASE("run_study determinism across runs and worker counts") {
    const SimConfig cfg = tiny_config();
    const auto a = run_study(cfg, 1);
    const auto b = run_study(cfg, 4);
    const auto c = run_study(cfg, 1);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].dgp == b[i].dgp);
        CHECK(a[i].h == b[i].h);
        CHECK(a[i].rep == b[i].rep);
        REQUIRE(a[i].estimate.has_value() == b[i].estimate.has_value());
        if (a[i].estimate) {
            CHECK(*a[i].estimate == *b[i].estimate);
            CHECK(*a[i].estimate == *c[i].estimate);
        }
        CHECK(a[i].true_value == b[i].true_value);
    }
    CHECK(rows_to_csv(a) == rows_to_csv(b));
}

TEST_CASE("summarize") {
    SimConfig cfg = tiny_config();
    cfg.replications = 1;
    cfg.h_grid = {0.3};
    const auto rows = run_study(cfg, 2);
    const auto summary = summarize(rows);
    for (const auto& s : summary) {
        CHECK(s.n_ok == 1);
        CHECK(s.median == s.q25);
        CHECK(s.median == s.q75);
    }
    // median of a single estimate is that estimate
    for (const auto& r : rows) {
        for (const auto& s : summary) {
            if (s.dgp == r.dgp && s.measure == r.measure && s.h == r.h &&
                (est_measure_name(r.measure) != "psi1_cvm" || s.ave_variant == r.ave_variant))
                if (r.estimate) CHECK(s.median == *r.estimate);
        }
    }
}

TEST_CASE("quantiles") {
    CHECK(sample_quantile({1.0, 2.0, 3.0}, 0.5) == 2.0);
    CHECK(sample_quantile({4.0, 4.0, 4.0}, 0.25) == 4.0);
    CHECK(sample_quantile({1.0, 3.0}, 0.5) == doctest::Approx(2.0));
    CHECK_THROWS_AS(sample_quantile({}, 0.5), InvalidArgument);
}

TEST_CASE("csv shapes") {
    SimConfig cfg = tiny_config();
    cfg.replications = 1;
    cfg.h_grid = {0.3};
    const auto rows = run_study(cfg, 2);
    const std::string rcsv = rows_to_csv(rows);
    CHECK(rcsv.rfind("dgp,measure,ave_variant,h,rep,estimate,true_value,elapsed_ms\n", 0) == 0);
    const std::string scsv = summary_to_csv(summarize(rows));
    CHECK(scsv.rfind("dgp,measure,ave_variant,h,median,q25,q75,true_value\n", 0) == 0);
    // deterministic re-render
    CHECK(rcsv == rows_to_csv(run_study(cfg, 1)));
}

TEST_CASE("config validation") {
    SimConfig bad = tiny_config();
    bad.replications = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    SimConfig bad2 = tiny_config();
    bad2.h_grid = {0.1, -0.2};
    CHECK_THROWS_AS(bad2.validate(), InvalidArgument);
    SimConfig bad3 = tiny_config();
    bad3.dgps = {"unknown"};
    CHECK_THROWS_AS(bad3.validate(), InvalidArgument);
    CHECK(SimConfig::default_h_grid().size() == 10);
    CHECK(SimConfig::default_measures().size() == 6);
}
