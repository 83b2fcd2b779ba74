#include "nonsimplify/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <tuple>

#include "nonsimplify/errors.hpp"
#include "nonsimplify/model.hpp"
#include "nonsimplify/oracle.hpp"
#include "nonsimplify/threading.hpp"

namespace nonsimplify {

std::size_t resolve_threads(long requested) {
    if (requested > 0) return static_cast<std::size_t>(requested);
    if (const char* env = std::getenv("NONSIMPLIFY_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void SimConfig::validate() const {
    if (replications < 1) throw InvalidArgument("sim: replications must be >= 1");
    if (n < 2) throw InvalidArgument("sim: n must be >= 2");
    if (dgps.empty()) throw InvalidArgument("sim: at least one dgp required");
    for (const auto& name : dgps) (void)builtin_model(name);
    for (double h : h_grid)
        if (!(h > 0.0)) throw InvalidArgument("sim: every h must be > 0");
    if (u_grid < 3) throw InvalidArgument("sim: u_grid must be >= 3");
    if (n_design < 2) throw InvalidArgument("sim: n_design must be >= 2");
}

std::vector<double> SimConfig::default_h_grid() {
    // 10 log-spaced bandwidths bracketing n^(-1/5) at n = 2000.
    std::vector<double> h(10);
    const double lo = std::log(0.03), hi = std::log(0.5);
    for (int i = 0; i < 10; ++i) h[i] = std::exp(lo + (hi - lo) * i / 9.0);
    return h;
}

std::vector<std::pair<EstMeasure, AveVariant>> SimConfig::default_measures() {
    return {{EstMeasure::Psi1CvM, AveVariant::Cs3},      {EstMeasure::Psi1CvM, AveVariant::Cs4},
            {EstMeasure::Psi1KS, AveVariant::Cs3},       {EstMeasure::Psi1KS, AveVariant::Cs4},
            {EstMeasure::Psi0TildeCvM, AveVariant::Cs3}, {EstMeasure::Psi0TildeKS, AveVariant::Cs3}};
}

namespace {

constexpr double kPi = 3.141592653589793238462643;

// Population value of the measured quantity, used as the reference column.
double true_value_for(const std::string& dgp, EstMeasure m, std::size_t n_design) {
    if (dgp != "gauss_0.8z") return 0.0; // simplified models
    const ConditionalCopulaModel& model = builtin_model(dgp);

    static std::mutex mu;
    static std::map<std::pair<std::string, int>, double> cache;
    const std::pair<std::string, int> key{dgp + "/" + est_measure_name(m),
                                          is_ckt_measure(m) ? static_cast<int>(n_design) : 0};
    {
        std::lock_guard<std::mutex> lock(mu);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    double value = 0.0;
    switch (m) {
        case EstMeasure::Psi1CvM: value = true_psi1_cvm(model, OracleSpec{}).value; break;
        case EstMeasure::Psi1KS: value = true_psi1_ks(model, OracleSpec{}).value; break;
        case EstMeasure::Psi0TildeCvM: value = true_psi0_cvm(model, OracleSpec{}).value; break;
        case EstMeasure::Psi0TildeKS: value = true_psi0_ks(model, OracleSpec{}).value; break;
        case EstMeasure::CKTSupPairwise:
            value = kendall_tau(model.family_at(1.0)) - kendall_tau(model.family_at(0.0));
            break;
        case EstMeasure::CKTDistToAverage: {
            // tau(z) = 2 asin(0.8 z)/pi, mean over U[0,1] by fine trapezoid.
            const int g = 20001;
            double mean = 0.0;
            for (int i = 0; i < g; ++i) {
                const double z = static_cast<double>(i) / (g - 1);
                const double w = (i == 0 || i == g - 1) ? 0.5 : 1.0;
                mean += w * kendall_tau(model.family_at(z));
            }
            mean /= (g - 1);
            value = std::max(std::abs(kendall_tau(model.family_at(1.0)) - mean),
                             std::abs(kendall_tau(model.family_at(0.0)) - mean));
            break;
        }
        case EstMeasure::CKTSumPairwise: {
            // Population analog over the design quantile levels (i-0.5)/n'.
            std::vector<double> taus(n_design);
            for (std::size_t i = 0; i < n_design; ++i)
                taus[i] = kendall_tau(
                    model.family_at((static_cast<double>(i) + 0.5) / static_cast<double>(n_design)));
            for (std::size_t i = 0; i < n_design; ++i)
                for (std::size_t j = 0; j < n_design; ++j)
                    value += std::abs(taus[i] - taus[j]);
            break;
        }
    }
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, value);
    return value;
}

std::string ave_label(EstMeasure m, AveVariant v) {
    if (m == EstMeasure::Psi1CvM || m == EstMeasure::Psi1KS) return ave_variant_name(v);
    return "none";
}

} // namespace

std::vector<SimResultRow> run_study(const SimConfig& cfg, std::size_t threads) {
    cfg.validate();
    const auto h_grid = cfg.h_grid.empty() ? SimConfig::default_h_grid() : cfg.h_grid;
    const auto measures = cfg.measures.empty() ? SimConfig::default_measures() : cfg.measures;

    // Pre-compute reference values (also warms the process-level cache).
    std::map<std::pair<std::string, std::string>, double> truth;
    for (const auto& dgp : cfg.dgps)
        for (const auto& [m, v] : measures)
            truth[{dgp, est_measure_name(m)}] = true_value_for(dgp, m, cfg.n_design);

    std::vector<std::pair<EstMeasure, AveVariant>> copula_ms, ckt_ms;
    for (const auto& mv : measures)
        (is_ckt_measure(mv.first) ? ckt_ms : copula_ms).push_back(mv);

    const std::size_t tasks = cfg.dgps.size() * cfg.replications;
    std::vector<std::vector<SimResultRow>> slots(tasks);

    parallel_for(tasks, threads, [&](std::size_t t) {
        const std::string& dgp = cfg.dgps[t / cfg.replications];
        const std::size_t rep = t % cfg.replications;
        const Dataset data = sample(builtin_model(dgp), cfg.n,
                                    cfg.base_seed ^ static_cast<std::uint64_t>(rep));
        auto& rows = slots[t];
        for (const double h : h_grid) {
            EstimatorSpec base;
            base.u_grid = cfg.u_grid;
            base.n_design = cfg.n_design;
            KernelSpec k{cfg.kernel, h, {}};

            auto run_group = [&](const std::vector<std::pair<EstMeasure, AveVariant>>& group) {
                if (group.empty()) return;
                const auto t0 = std::chrono::steady_clock::now();
                std::vector<MeasureEstimate> ests;
                std::string error;
                try {
                    ests = estimate_measures(data, base, group, k);
                } catch (const std::exception& e) {
                    error = e.what();
                }
                const auto t1 = std::chrono::steady_clock::now();
                const std::int64_t ms =
                    cfg.record_timing
                        ? std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
                        : 0;
                for (std::size_t i = 0; i < group.size(); ++i) {
                    SimResultRow row;
                    row.dgp = dgp;
                    row.measure = group[i].first;
                    row.ave_variant = group[i].second;
                    row.h = h;
                    row.rep = rep;
                    if (error.empty())
                        row.estimate = ests[i].value;
                    else
                        row.error = error;
                    row.true_value = truth.at({dgp, est_measure_name(group[i].first)});
                    row.elapsed_ms = ms;
                    rows.push_back(std::move(row));
                }
            };
            run_group(copula_ms);
            run_group(ckt_ms);
        }
    });

    std::vector<SimResultRow> out;
    for (auto& s : slots)
        for (auto& r : s) out.push_back(std::move(r));
    return out;
}

double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("quantile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<SimSummaryRow> summarize(const std::vector<SimResultRow>& rows) {
    if (rows.empty()) throw InvalidArgument("summarize: no rows");
    using Key = std::tuple<std::string, std::string, std::string, double>;
    std::map<Key, std::vector<const SimResultRow*>> groups;
    for (const auto& r : rows)
        groups[{r.dgp, est_measure_name(r.measure), ave_label(r.measure, r.ave_variant), r.h}]
            .push_back(&r);

    std::vector<SimSummaryRow> out;
    for (const auto& [key, members] : groups) {
        std::vector<double> vals;
        for (const auto* r : members)
            if (r->estimate) vals.push_back(*r->estimate);
        if (vals.empty())
            throw InvalidArgument("summarize: group '" + std::get<0>(key) + "/" +
                                  std::get<1>(key) + "' has no successful estimates");
        SimSummaryRow s;
        s.dgp = std::get<0>(key);
        s.measure = members[0]->measure;
        s.ave_variant = members[0]->ave_variant;
        s.h = std::get<3>(key);
        s.median = sample_quantile(vals, 0.5);
        s.q25 = sample_quantile(vals, 0.25);
        s.q75 = sample_quantile(vals, 0.75);
        s.true_value = members[0]->true_value;
        s.n_ok = vals.size();
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

std::string rows_to_csv(const std::vector<SimResultRow>& rows) {
    std::string out = "dgp,measure,ave_variant,h,rep,estimate,true_value,elapsed_ms\n";
    for (const auto& r : rows) {
        out += r.dgp + "," + est_measure_name(r.measure) + "," +
               ave_label(r.measure, r.ave_variant) + "," + fmt(r.h) + "," +
               std::to_string(r.rep) + ",";
        out += r.estimate ? fmt(*r.estimate) : std::string("NA");
        out += "," + fmt(r.true_value) + "," + std::to_string(r.elapsed_ms) + "\n";
    }
    return out;
}

std::string summary_to_csv(const std::vector<SimSummaryRow>& rows) {
    std::string out = "dgp,measure,ave_variant,h,median,q25,q75,true_value\n";
    for (const auto& r : rows) {
        out += r.dgp + "," + est_measure_name(r.measure) + "," +
               ave_label(r.measure, r.ave_variant) + "," + fmt(r.h) + "," + fmt(r.median) + "," +
               fmt(r.q25) + "," + fmt(r.q75) + "," + fmt(r.true_value) + "\n";
    }
    return out;
}

} // namespace nonsimplify
