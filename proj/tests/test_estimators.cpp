#include <cmath>
#include <random>

#include "doctest.h"
#include "nonsimplify/errors.hpp"
#include "nonsimplify/estimators.hpp"
#include "nonsimplify/model.hpp"

using namespace nonsimplify;

namespace {

Dataset make_data(std::vector<double> x1, std::vector<double> x2, std::vector<double> z) {
    Dataset d;
    d.n = x1.size();
    d.d = 2;
    d.p = 1;
    d.x.resize(2 * d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        d.x[2 * i] = x1[i];
        d.x[2 * i + 1] = x2[i];
    }
    d.z = std::move(z);
    return d;
}

Dataset rand_dataset(std::mt19937_64& gen, std::size_t n) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x1(n), x2(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = unif(gen);
        x2[i] = unif(gen);
        z[i] = unif(gen);
    }
    return make_data(std::move(x1), std::move(x2), std::move(z));
}

// O(n^2) classical sample Kendall tau (sign statistic, ties contribute 0).
double classical_tau(const Dataset& d) {
    long long acc = 0;
    for (std::size_t i = 0; i < d.n; ++i)
        for (std::size_t j = i + 1; j < d.n; ++j) {
            const double s = (d.xv(i, 0) - d.xv(j, 0)) * (d.xv(i, 1) - d.xv(j, 1));
            acc += (s > 0) - (s < 0);
        }
    const double n = static_cast<double>(d.n);
    return 2.0 * static_cast<double>(acc) / (n * n - n);
}

KernelSpec wide_uniform(const Dataset& d) {
    double lo = d.z[0], hi = d.z[0];
    for (double v : d.z) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return KernelSpec{Kernel::Uniform, std::max(1.0, 2.0 * (hi - lo)), {}};
}

} // namespace

TEST_CASE("kernel_weights basics") {
    const auto d = make_data({0.1, 0.5, 0.9}, {0.2, 0.6, 0.7}, {0.1, 0.5, 0.9});
    const auto w = kernel_weights(d, {0.5}, wide_uniform(d));
    for (double v : w) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto single = make_data({0.3}, {0.4}, {0.5});
    const auto w1 = kernel_weights(single, {0.5}, KernelSpec{Kernel::Epanechnikov, 0.2, {}});
    CHECK(w1[0] == 1.0);

    CHECK_THROWS_AS(kernel_weights(d, {5.0}, KernelSpec{Kernel::Epanechnikov, 0.1, {}}),
                    DegenerateNeighborhood);

    std::mt19937_64 gen(1);
    const auto rd = rand_dataset(gen, 200);
    for (double h : {0.05, 0.2, 0.7}) {
        const auto wr = kernel_weights(rd, {0.5}, KernelSpec{Kernel::Epanechnikov, h, {}}, true);
        double sum = 0.0;
        for (double v : wr) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cond_ecdf and cond_quantile") {
    const auto d = make_data({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {0.2, 0.5, 0.8});
    const auto F = cond_ecdf(d, {0.5}, wide_uniform(d), 0);
    CHECK(F(0.5) == 0.0);
    CHECK(F(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(F(2.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(F(3.0) == 1.0);
    CHECK(cond_quantile(F, 0.5) == 2.0);
    CHECK(cond_quantile(F, 1.0) == 3.0);
    CHECK(cond_quantile(F, 0.0) == 1.0);

    // weighted: point mass concentrated near z shifts the median
    const auto dw = make_data({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {0.5, 0.5, 0.9});
    const auto Fw = cond_ecdf(dw, {0.5}, KernelSpec{Kernel::Epanechnikov, 0.25, {}}, 0);
    CHECK(Fw(2.0) == doctest::Approx(1.0).epsilon(1e-12)); // third point out of window
    CHECK(cond_quantile(Fw, 0.9) == 2.0);

    // F(F^-(u)) >= u
    std::mt19937_64 gen(2);
    const auto rd = rand_dataset(gen, 50);
    const auto Fr = cond_ecdf(rd, {0.4}, KernelSpec{Kernel::Epanechnikov, 0.3, {}}, 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const double u = unif(gen);
        CHECK(Fr(Fr.quantile(u)) >= u - 1e-12);
    }
}

TEST_CASE("cond_empirical_copula examples") {
    const auto d = make_data({1.0, 2.0, 3.0}, {10.0, 20.0, 30.0}, {0.2, 0.5, 0.8});
    const auto k = wide_uniform(d);
    CHECK(cond_empirical_copula(d, {0.5}, k, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cond_empirical_copula(d, {0.5}, k, 0.0, 0.7) == 0.0);
    CHECK(cond_empirical_copula(d, {0.5}, k, 2.0 / 3.0, 2.0 / 3.0) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("average copula estimators") {
    const auto d = make_data({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {0.2, 0.5, 0.8});
    const auto k = wide_uniform(d);
    CHECK(ave_copula_cs3(d, k, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ave_copula_cs4(d, k, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ave_copula_cs4(d, k, 0.0, 0.0) == 0.0);
    // pseudo-observations reduce to scaled ranks under uniform weights
    CHECK(ave_copula_cs4(d, k, 2.0 / 3.0, 2.0 / 3.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const auto one = make_data({0.4}, {0.6}, {0.5});
    const auto k1 = wide_uniform(one);
    CHECK(ave_copula_cs3(one, k1, 0.5, 0.5) ==
          doctest::Approx(cond_empirical_copula(one, {0.5}, k1, 0.5, 0.5)).epsilon(1e-14));

    // consistency on simplified data: close to the single true copula
    const auto& model = builtin_model("gauss_0_5");
    const Dataset big = sample(model, 3000, 11);
    const KernelSpec kb{Kernel::Epanechnikov, 0.3, {}};
    for (double u : {0.25, 0.5, 0.75}) {
        const double truth = copula_cdf(model.family_at(0.0), u, u);
        CHECK(std::abs(ave_copula_cs3(big, kb, u, u) - truth) < 0.05);
        CHECK(std::abs(ave_copula_cs4(big, kb, u, u) - truth) < 0.05);
    }
}

TEST_CASE("conditional Kendall tau: comonotone and uniform-weight reduction") {
    const auto co = make_data({1.0, 2.0, 3.0, 4.0}, {2.0, 4.0, 5.0, 9.0}, {0.1, 0.4, 0.6, 0.9});
    CHECK(cond_kendall_tau(co, {0.5}, wide_uniform(co)) == doctest::Approx(1.0).epsilon(1e-15));

    std::mt19937_64 gen(3);
    std::uniform_int_distribution<std::size_t> nsize(5, 200);
    for (int t = 0; t < 25; ++t) {
        const auto d = rand_dataset(gen, nsize(gen));
        const double tau_w = cond_kendall_tau(d, {0.5}, wide_uniform(d));
        CHECK(std::abs(tau_w - classical_tau(d)) <= 1e-14);
    }

    // concentrated weights: denominator guard
    const auto d = rand_dataset(gen, 100);
    std::vector<double> z = d.z;
    std::sort(z.begin(), z.end());
    CHECK_THROWS_AS(cond_kendall_tau(d, {z[50]}, KernelSpec{Kernel::Epanechnikov, 1e-7, {}}),
                    EffectiveSampleTooSmall);
}

TEST_CASE("estimate_measure on independent data is near zero") {
    const Dataset data = sample(builtin_model("indep"), 4000, 21);
    EstimatorSpec spec;
    spec.measure = EstMeasure::CKTSupPairwise;
    const KernelSpec k{Kernel::Epanechnikov, 0.25, {}};
    const auto est = estimate_measure(data, spec, k);
    CHECK(est.value >= 0.0);
    CHECK(est.value < 0.2);
    CHECK(est.ranks == false); // CKT measures default to raw Z
}

TEST_CASE("duplicate design points leave the sup measure unchanged") {
    const Dataset data = sample(builtin_model("gauss_0.8z"), 600, 31);
    const KernelSpec k{Kernel::Epanechnikov, 0.2, {}};
    EstimatorSpec spec;
    spec.measure = EstMeasure::CKTSupPairwise;
    spec.z_design = {{0.2}, {0.5}, {0.8}};
    const double a = estimate_measure(data, spec, k).value;
    spec.z_design = {{0.2}, {0.5}, {0.8}, {0.5}, {0.2}};
    const double b = estimate_measure(data, spec, k).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("copula measures: grounded, nondecreasing, psi0 vs psi1 coherence") {
    const Dataset data = sample(builtin_model("gauss_0.8z"), 500, 41);
    const KernelSpec k{Kernel::Epanechnikov, 0.25, {}};

    // componentwise monotone and grounded on the evaluation grid
    for (double z : {0.2, 0.7}) {
        double prev = -1.0;
        for (int i = 1; i <= 8; ++i) {
            const double u = static_cast<double>(i) / 9.0;
            const double c = cond_empirical_copula(data, {z}, k, u, 0.6);
            CHECK(c >= prev - 1e-14);
            prev = c;
        }
        CHECK(cond_empirical_copula(data, {z}, k, 0.0, 0.6) == 0.0);
    }

    EstimatorSpec spec;
    spec.measure = EstMeasure::Psi0TildeKS;
    const double psi0ks = estimate_measure(data, spec, k).value;
    spec.measure = EstMeasure::Psi1KS;
    spec.ave_variant = AveVariant::Cs3;
    const double psi1ks = estimate_measure(data, spec, k).value;
    CHECK(psi0ks >= 0.0);
    CHECK(psi1ks >= 0.0);
    // estimates use ranks by default for the copula measures
    CHECK(estimate_measure(data, spec, k).ranks == true);
}

TEST_CASE("batch estimation equals per-measure estimation") {
    const Dataset data = sample(builtin_model("gauss_0.8z"), 800, 51);
    const KernelSpec k{Kernel::Epanechnikov, 0.15, {}};
    EstimatorSpec base;
    const std::vector<std::pair<EstMeasure, AveVariant>> ms = {
        {EstMeasure::Psi1CvM, AveVariant::Cs3}, {EstMeasure::Psi1CvM, AveVariant::Cs4},
        {EstMeasure::Psi1KS, AveVariant::Cs3},  {EstMeasure::Psi0TildeCvM, AveVariant::Cs3},
        {EstMeasure::Psi0TildeKS, AveVariant::Cs3}, {EstMeasure::CKTSupPairwise, AveVariant::Cs3}};
    const auto batch = estimate_measures(data, base, ms, k, 4);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        EstimatorSpec single = base;
        single.measure = ms[i].first;
        single.ave_variant = ms[i].second;
        const auto est = estimate_measure(data, single, k);
        CHECK(est.value == doctest::Approx(batch[i].value).epsilon(1e-15));
    }
}

TEST_CASE("degenerate bandwidth reports failed design points") {
    const Dataset data = sample(builtin_model("indep"), 100, 61);
    EstimatorSpec spec;
    spec.measure = EstMeasure::CKTSupPairwise;
    const KernelSpec k{Kernel::Epanechnikov, 1e-6, {}};
    try {
        estimate_measure(data, spec, k);
        FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
        CHECK(!e.failed_design_points.empty());
        CHECK(e.degenerate);
        CHECK(std::string(e.what()).find("design points") != std::string::npos);
    }
}

TEST_CASE("design points must stay inside the observed range") {
    const Dataset data = sample(builtin_model("indep"), 50, 71);
    EstimatorSpec spec;
    spec.z_design = {{-3.0}, {0.5}};
    CHECK_THROWS_AS(estimate_measure(data, spec, KernelSpec{Kernel::Epanechnikov, 0.3, {}}),
                    InvalidArgument);
}

TEST_CASE("marginal transforms leave rank/sign estimators unchanged") {
    std::mt19937_64 gen(9);
    for (int t = 0; t < 3; ++t) {
        const Dataset data = sample(builtin_model("gauss_0.8z"), 300, 80 + t);
        const KernelSpec k{Kernel::Epanechnikov, 0.3, {}};
        CHECK(marginal_transform_check(
            data, {[](double v) { return std::exp(v); }, [](double v) { return v * v * v + 2.0; }},
            k));
        CHECK(marginal_transform_check(
            data, {[](double v) { return v; }, [](double v) { return v; }}, k));
        CHECK_THROWS_AS(
            marginal_transform_check(
                data, {[](double v) { return -v; }, [](double v) { return v; }}, k),
            InvalidArgument);
    }
}
