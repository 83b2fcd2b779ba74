#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nonsimplify.h"

using nlohmann::json;

namespace {

struct Str {
    char* p = nullptr;
    ~Str() { ns_string_free(p); }
};

struct Data {
    ns_dataset* p = nullptr;
    ~Data() { ns_dataset_free(p); }
};

std::string tmp_path(const char* name) {
    return std::string("capi_") + name;
}

} // namespace

TEST_CASE("version and error reporting") {
    CHECK(std::string(ns_version()) == "0.1.0");
    Str out;
    CHECK(ns_oracle("no_such_model", "psi1_cvm", nullptr, &out.p) == NS_ERR_INVALID);
    CHECK(std::string(ns_last_error()).find("unknown model") != std::string::npos);
    CHECK(ns_oracle("indep", "no_such_measure", nullptr, &out.p) == NS_ERR_INVALID);
    CHECK(ns_oracle(nullptr, "psi1_cvm", nullptr, &out.p) == NS_ERR_INVALID);
}

TEST_CASE("oracle through the C API") {
    Str out;
    const char* opts = "{\"u_grid\":41,\"z_grid\":81}";
    REQUIRE(ns_oracle("gauss_0.8z", "param_sup", opts, &out.p) == NS_OK);
    const json j = json::parse(out.p);
    CHECK(j.at("value").get<double>() == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(j.at("model") == "gauss_0.8z");
    CHECK(j.at("evaluations").get<long long>() > 0);

    Str out2;
    REQUIRE(ns_oracle("indep", "psi0_ks", opts, &out2.p) == NS_OK);
    CHECK(json::parse(out2.p).at("value").get<double>() <= 1e-8);

    Str bad;
    CHECK(ns_oracle("indep", "psi1_cvm", "{\"u_grid\":1}", &bad.p) == NS_ERR_INVALID);
    CHECK(ns_oracle("indep", "psi1_cvm", "not json", &bad.p) == NS_ERR_INVALID);
}

TEST_CASE("dataset sampling, CSV round trip, estimation") {
    Data d;
    REQUIRE(ns_dataset_sample("gauss_0.8z", 500, 7, &d.p) == NS_OK);
    CHECK(ns_dataset_rows(d.p) == 500);
    CHECK(ns_dataset_xdim(d.p) == 2);
    CHECK(ns_dataset_zdim(d.p) == 1);

    const std::string path = tmp_path("roundtrip.csv");
    REQUIRE(ns_dataset_write_csv(d.p, path.c_str()) == NS_OK);
    Data d2;
    REQUIRE(ns_dataset_from_csv(path.c_str(), &d2.p) == NS_OK);
    CHECK(ns_dataset_rows(d2.p) == 500);
    CHECK(ns_dataset_zdim(d2.p) == 1);

    Str est;
    const char* opts = "{\"measure\":\"ckt_sup\",\"h\":0.25,\"n_design\":10}";
    REQUIRE(ns_estimate(d2.p, opts, &est.p) == NS_OK);
    const json j = json::parse(est.p);
    CHECK(j.at("value").get<double>() >= 0.0);
    CHECK(j.at("measure") == "ckt_sup");
    CHECK(j.at("pseudo_z") == "raw");
    CHECK(j.at("n") == 500);

    // identical options on the same data give identical results
    Str est2;
    REQUIRE(ns_estimate(d2.p, opts, &est2.p) == NS_OK);
    CHECK(std::string(est.p) == est2.p);

    // degenerate bandwidth surfaces as NS_ERR_DEGENERATE
    Str bad;
    CHECK(ns_estimate(d2.p, "{\"measure\":\"ckt_sup\",\"h\":1e-7}", &bad.p) == NS_ERR_DEGENERATE);

    std::remove(path.c_str());
}

TEST_CASE("csv errors carry diagnostics") {
    const std::string path = tmp_path("bad.csv");
    {
        std::ofstream f(path);
        f << "x1,x2,zz\n0.1,0.2,0.3\n";
    }
    Data d;
    CHECK(ns_dataset_from_csv(path.c_str(), &d.p) == NS_ERR_INVALID);
    CHECK(std::string(ns_last_error()).find("zz") != std::string::npos);
    std::remove(path.c_str());

    {
        std::ofstream f(path);
        f << "x1,x2,z1\n0.1,oops,0.3\n";
    }
    Data d2;
    CHECK(ns_dataset_from_csv(path.c_str(), &d2.p) == NS_ERR_INVALID);
    const std::string msg = ns_last_error();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("x2") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("vines through the C API") {
    Str out;
    REQUIRE(ns_enumerate_vines(3, &out.p) == NS_OK);
    const json j = json::parse(out.p);
    CHECK(j.at("count") == 3);
    CHECK(j.at("vines").size() == 3);

    Str bad;
    CHECK(ns_enumerate_vines(6, &bad.p) == NS_ERR_INVALID);
    CHECK(ns_enumerate_vines(1, &bad.p) == NS_ERR_INVALID);

    Data d;
    REQUIRE(ns_dataset_sample_sign_mixture3(400, 3, &d.p) == NS_OK);
    Str score;
    REQUIRE(ns_vine_score(d.p, "{\"n_design\":8}", &score.p) == NS_OK);
    const json s = json::parse(score.p);
    CHECK(s.at("vine_count") == 3);
    CHECK(s.at("bcns").get<double>() <= s.at("acns").get<double>() + 1e-12);
    CHECK(s.at("acns").get<double>() <= s.at("wcns").get<double>() + 1e-12);
    CHECK(s.at("edges").size() == 3);
}

TEST_CASE("simulate through the C API") {
    const std::string rows = tmp_path("rows.csv");
    const std::string summary = tmp_path("summary.csv");
    const char* cfg =
        "{\"n\":200,\"replications\":2,\"h_grid\":[0.3],"
        "\"measures\":[\"ckt_sup\"],\"u_grid\":12,\"n_design\":6,\"base_seed\":5}";
    Str out;
    REQUIRE(ns_simulate(cfg, rows.c_str(), summary.c_str(), &out.p) == NS_OK);
    const json j = json::parse(out.p);
    CHECK(j.at("rows").get<int>() == 3 * 2);
    std::ifstream rf(rows);
    std::string header;
    std::getline(rf, header);
    CHECK(header == "dgp,measure,ave_variant,h,rep,estimate,true_value,elapsed_ms");

    Str bad;
    CHECK(ns_simulate("{\"unknown_key\":1}", rows.c_str(), summary.c_str(), &bad.p) ==
          NS_ERR_INVALID);
    std::remove(rows.c_str());
    std::remove(summary.c_str());
}

TEST_CASE("gaussian copula sampler via C API") {
    const double corr[16] = {1.0, 0.5, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5,
                             0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 0.5, 1.0};
    Data d;
    REQUIRE(ns_dataset_sample_gaussian(corr, 4, 100, 11, &d.p) == NS_OK);
    CHECK(ns_dataset_rows(d.p) == 100);
    CHECK(ns_dataset_xdim(d.p) == 4);
    CHECK(ns_dataset_zdim(d.p) == 0);
}
