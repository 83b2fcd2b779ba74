#include "nonsimplify.h"

#include <algorithm>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <fstream>
#include <string>

#include "json.hpp"
#include "nonsimplify/dataset.hpp"
#include "nonsimplify/errors.hpp"
#include "nonsimplify/estimators.hpp"
#include "nonsimplify/model.hpp"
#include "nonsimplify/oracle.hpp"
#include "nonsimplify/sim.hpp"
#include "nonsimplify/vines.hpp"

#define NS_EXPORT __attribute__((visibility("default")))

using nlohmann::json;
namespace ns = nonsimplify;

struct ns_dataset {
    ns::Dataset data;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class Fn>
ns_status guarded(Fn&& fn) {
    try {
        fn();
        return NS_OK;
    } catch (const ns::DegenerateNeighborhood& e) {
        g_last_error = e.what();
        return NS_ERR_DEGENERATE;
    } catch (const ns::EffectiveSampleTooSmall& e) {
        g_last_error = e.what();
        return NS_ERR_DEGENERATE;
    } catch (const ns::EstimationError& e) {
        g_last_error = e.what();
        return e.degenerate ? NS_ERR_DEGENERATE : NS_ERR_NUMERIC;
    } catch (const ns::InvalidArgument& e) {
        g_last_error = e.what();
        return NS_ERR_INVALID;
    } catch (const json::exception& e) {
        g_last_error = std::string("json: ") + e.what();
        return NS_ERR_INVALID;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return NS_ERR_NUMERIC;
    }
}

json parse_options(const char* options_json) {
    if (!options_json || !*options_json) return json::object();
    const json j = json::parse(options_json);
    if (!j.is_object()) throw ns::InvalidArgument("options must be a JSON object");
    return j;
}

ns::OracleSpec oracle_spec_from(const json& j) {
    ns::OracleSpec spec;
    if (j.contains("u_grid")) spec.u_grid = j.at("u_grid").get<int>();
    if (j.contains("z_grid")) spec.z_grid = j.at("z_grid").get<int>();
    if (j.contains("quad")) {
        const std::string q = j.at("quad").get<std::string>();
        if (q == "trapezoid")
            spec.quad = ns::QuadRule::Trapezoid;
        else if (q == "gl" || q == "gauss_legendre")
            spec.quad = ns::QuadRule::GaussLegendre;
        else
            throw ns::InvalidArgument("quad must be 'trapezoid' or 'gl'");
    }
    if (j.contains("refine_passes")) spec.refine.passes = j.at("refine_passes").get<int>();
    if (j.contains("refine_shrink")) spec.refine.shrink = j.at("refine_shrink").get<double>();
    spec.validate();
    return spec;
}

ns::PseudoZ pseudo_z_from(const std::string& s) {
    if (s == "auto") return ns::PseudoZ::Auto;
    if (s == "raw") return ns::PseudoZ::Raw;
    if (s == "rank") return ns::PseudoZ::RankTransformed;
    throw ns::InvalidArgument("pseudo_z must be 'auto', 'raw' or 'rank'");
}

std::pair<ns::EstMeasure, ns::AveVariant> measure_pair_from(const std::string& s) {
    const auto colon = s.find(':');
    const std::string m = s.substr(0, colon);
    ns::AveVariant v = ns::AveVariant::Cs3;
    if (colon != std::string::npos) v = ns::parse_ave_variant(s.substr(colon + 1));
    return {ns::parse_est_measure(m), v};
}

ns::SimConfig sim_config_from(const json& j) {
    ns::SimConfig cfg;
    static const std::set<std::string> known = {
        "dgps", "dgp", "n", "replications", "h_grid", "measures", "base_seed",
        "n_design", "u_grid", "kernel", "timing", "threads"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key))
            throw ns::InvalidArgument("simulate config: unknown key '" + key + "'");
    }
    if (j.contains("dgp")) cfg.dgps = {j.at("dgp").get<std::string>()};
    if (j.contains("dgps")) cfg.dgps = j.at("dgps").get<std::vector<std::string>>();
    if (j.contains("n")) cfg.n = j.at("n").get<std::size_t>();
    if (j.contains("replications")) cfg.replications = j.at("replications").get<std::size_t>();
    if (j.contains("h_grid")) cfg.h_grid = j.at("h_grid").get<std::vector<double>>();
    if (j.contains("measures")) {
        cfg.measures.clear();
        for (const auto& item : j.at("measures")) {
            if (item.is_string()) {
                cfg.measures.push_back(measure_pair_from(item.get<std::string>()));
            } else {
                const auto pair = item.get<std::vector<std::string>>();
                if (pair.empty() || pair.size() > 2)
                    throw ns::InvalidArgument("simulate config: bad measure entry");
                ns::AveVariant v = pair.size() == 2 ? ns::parse_ave_variant(pair[1])
                                                    : ns::AveVariant::Cs3;
                cfg.measures.emplace_back(ns::parse_est_measure(pair[0]), v);
            }
        }
    }
    if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("n_design")) cfg.n_design = j.at("n_design").get<std::size_t>();
    if (j.contains("u_grid")) cfg.u_grid = j.at("u_grid").get<int>();
    if (j.contains("kernel")) cfg.kernel = ns::parse_kernel(j.at("kernel").get<std::string>());
    if (j.contains("timing")) {
        const std::string t = j.at("timing").get<std::string>();
        if (t == "wall")
            cfg.record_timing = true;
        else if (t != "none")
            throw ns::InvalidArgument("timing must be 'none' or 'wall'");
    }
    cfg.validate();
    return cfg;
}

// One-line separation report: non-simplified vs simplified medians over the
// middle third of the bandwidth grid.
std::string separation_line(const std::vector<ns::SimSummaryRow>& summary) {
    std::vector<double> hs;
    for (const auto& s : summary)
        if (std::find(hs.begin(), hs.end(), s.h) == hs.end()) hs.push_back(s.h);
    std::sort(hs.begin(), hs.end());
    const std::size_t nh = hs.size();
    if (nh == 0) return "separation: no data";
    const std::size_t lo = nh / 3, hi = nh - nh / 3;
    std::set<double> mid(hs.begin() + lo, hs.begin() + hi);

    int cells = 0, separated = 0;
    std::map<std::pair<std::string, double>, std::map<std::string, double>> medians;
    for (const auto& s : summary)
        medians[{ns::est_measure_name(s.measure) + "/" + ns::ave_variant_name(s.ave_variant),
                 s.h}][s.dgp] = s.median;
    for (const auto& [key, by_dgp] : medians) {
        if (!mid.count(key.second)) continue;
        const auto it = by_dgp.find("gauss_0.8z");
        if (it == by_dgp.end()) continue;
        bool any = false, ok = true;
        for (const auto& [dgp, med] : by_dgp) {
            if (dgp == "gauss_0.8z") continue;
            any = true;
            ok = ok && it->second > med;
        }
        if (!any) continue;
        ++cells;
        if (ok) ++separated;
    }
    if (cells == 0) return "separation: not applicable (needs gauss_0.8z plus a simplified dgp)";
    return "separation: gauss_0.8z median exceeds both simplified medians in " +
           std::to_string(separated) + "/" + std::to_string(cells) +
           " mid-bandwidth cells";
}

} // namespace

extern "C" {

NS_EXPORT const char* ns_version(void) { return "0.1.0"; }

NS_EXPORT const char* ns_last_error(void) { return g_last_error.c_str(); }

NS_EXPORT void ns_string_free(char* s) { delete[] s; }

NS_EXPORT ns_status ns_oracle(const char* model, const char* measure, const char* options_json,
                              char** out_json) {
    return guarded([&] {
        if (!model || !measure || !out_json)
            throw ns::InvalidArgument("ns_oracle: null argument");
        const auto& m = ns::builtin_model(model);
        const auto id = ns::parse_oracle_measure(measure);
        const auto spec = oracle_spec_from(parse_options(options_json));
        const ns::MeasureValue v = ns::compute_oracle(m, id, spec);
        const json out{{"model", model},
                       {"measure", measure},
                       {"value", v.value},
                       {"abs_err_estimate", v.abs_err_estimate},
                       {"evaluations", v.evaluations}};
        *out_json = dup_string(out.dump());
    });
}

NS_EXPORT ns_status ns_dataset_from_csv(const char* path, ns_dataset** out) {
    return guarded([&] {
        if (!path || !out) throw ns::InvalidArgument("ns_dataset_from_csv: null argument");
        *out = new ns_dataset{ns::read_csv(path)};
    });
}

NS_EXPORT ns_status ns_dataset_sample(const char* model, int64_t n, uint64_t seed,
                                      ns_dataset** out) {
    return guarded([&] {
        if (!model || !out) throw ns::InvalidArgument("ns_dataset_sample: null argument");
        if (n < 1) throw ns::InvalidArgument("ns_dataset_sample: n must be >= 1");
        *out = new ns_dataset{
            ns::sample(ns::builtin_model(model), static_cast<std::size_t>(n), seed)};
    });
}

NS_EXPORT ns_status ns_dataset_sample_gaussian(const double* corr, int32_t dim, int64_t n,
                                               uint64_t seed, ns_dataset** out) {
    return guarded([&] {
        if (!corr || !out) throw ns::InvalidArgument("ns_dataset_sample_gaussian: null argument");
        if (dim < 2 || n < 1) throw ns::InvalidArgument("ns_dataset_sample_gaussian: bad sizes");
        std::vector<double> c(corr, corr + static_cast<std::size_t>(dim) * dim);
        *out = new ns_dataset{ns::sample_gaussian_copula(c, static_cast<std::size_t>(dim),
                                                         static_cast<std::size_t>(n), seed)};
    });
}

NS_EXPORT ns_status ns_dataset_sample_sign_mixture3(int64_t n, uint64_t seed, ns_dataset** out) {
    return guarded([&] {
        if (!out || n < 1) throw ns::InvalidArgument("ns_dataset_sample_sign_mixture3: bad args");
        *out = new ns_dataset{ns::sample_sign_mixture3(static_cast<std::size_t>(n), seed)};
    });
}

NS_EXPORT ns_status ns_dataset_write_csv(const ns_dataset* data, const char* path) {
    return guarded([&] {
        if (!data || !path) throw ns::InvalidArgument("ns_dataset_write_csv: null argument");
        ns::write_csv(data->data, path);
    });
}

NS_EXPORT int64_t ns_dataset_rows(const ns_dataset* data) {
    return data ? static_cast<int64_t>(data->data.n) : -1;
}

NS_EXPORT int32_t ns_dataset_xdim(const ns_dataset* data) {
    return data ? static_cast<int32_t>(data->data.d) : -1;
}

NS_EXPORT int32_t ns_dataset_zdim(const ns_dataset* data) {
    return data ? static_cast<int32_t>(data->data.p) : -1;
}

NS_EXPORT void ns_dataset_free(ns_dataset* data) { delete data; }

NS_EXPORT ns_status ns_estimate(const ns_dataset* data, const char* options_json,
                                char** out_json) {
    return guarded([&] {
        if (!data || !out_json) throw ns::InvalidArgument("ns_estimate: null argument");
        const json j = parse_options(options_json);
        ns::EstimatorSpec spec;
        if (j.contains("measure"))
            spec.measure = ns::parse_est_measure(j.at("measure").get<std::string>());
        if (j.contains("ave_variant"))
            spec.ave_variant = ns::parse_ave_variant(j.at("ave_variant").get<std::string>());
        if (j.contains("u_grid")) spec.u_grid = j.at("u_grid").get<int>();
        if (j.contains("n_design")) spec.n_design = j.at("n_design").get<std::size_t>();
        if (j.contains("pseudo_z"))
            spec.pseudo_z = pseudo_z_from(j.at("pseudo_z").get<std::string>());
        ns::KernelSpec k;
        if (j.contains("kernel")) k.kernel = ns::parse_kernel(j.at("kernel").get<std::string>());
        if (j.contains("h")) k.h = j.at("h").get<double>();
        const std::size_t threads =
            ns::resolve_threads(j.contains("threads") ? j.at("threads").get<long>() : 0);

        const ns::MeasureEstimate est = ns::estimate_measure(data->data, spec, k, threads);
        const json out{{"value", est.value},
                       {"measure", ns::est_measure_name(est.measure)},
                       {"ave_variant", ns::ave_variant_name(est.ave_variant)},
                       {"h", est.h},
                       {"kernel", ns::kernel_name(est.kernel)},
                       {"pseudo_z", est.ranks ? "rank" : "raw"},
                       {"n", est.n},
                       {"n_design", est.n_design},
                       {"u_grid", est.u_grid}};
        *out_json = dup_string(out.dump());
    });
}

NS_EXPORT ns_status ns_simulate(const char* config_json, const char* rows_csv_path,
                                const char* summary_csv_path, char** out_json) {
    return guarded([&] {
        if (!rows_csv_path || !summary_csv_path || !out_json)
            throw ns::InvalidArgument("ns_simulate: null argument");
        const json j = parse_options(config_json);
        const ns::SimConfig cfg = sim_config_from(j);
        const std::size_t threads =
            ns::resolve_threads(j.contains("threads") ? j.at("threads").get<long>() : 0);

        const auto rows = ns::run_study(cfg, threads);
        const auto summary = ns::summarize(rows);
        {
            std::ofstream out(rows_csv_path, std::ios::binary);
            if (!out) throw ns::InvalidArgument(std::string("cannot write ") + rows_csv_path);
            out << ns::rows_to_csv(rows);
        }
        {
            std::ofstream out(summary_csv_path, std::ios::binary);
            if (!out) throw ns::InvalidArgument(std::string("cannot write ") + summary_csv_path);
            out << ns::summary_to_csv(summary);
        }
        const json out{{"rows", rows.size()},
                       {"summary_rows", summary.size()},
                       {"separation", separation_line(summary)}};
        *out_json = dup_string(out.dump());
    });
}

NS_EXPORT ns_status ns_enumerate_vines(int32_t d, char** out_json) {
    return guarded([&] {
        if (!out_json) throw ns::InvalidArgument("ns_enumerate_vines: null argument");
        *out_json = dup_string(ns::vines_to_json(ns::enumerate_vines(d)));
    });
}

NS_EXPORT ns_status ns_vine_score(const ns_dataset* data, const char* options_json,
                                  char** out_json) {
    return guarded([&] {
        if (!data || !out_json) throw ns::InvalidArgument("ns_vine_score: null argument");
        const json j = parse_options(options_json);
        int d = static_cast<int>(data->data.d);
        if (j.contains("d")) d = j.at("d").get<int>();
        ns::VineScoreSpec spec;
        if (j.contains("aggregation")) {
            const std::string a = j.at("aggregation").get<std::string>();
            if (a == "sum")
                spec.aggregation = ns::VineAggregation::Sum;
            else if (a == "norm")
                spec.aggregation = ns::VineAggregation::Norm;
            else
                throw ns::InvalidArgument("aggregation must be 'sum' or 'norm'");
        }
        if (j.contains("norm_q")) {
            if (j.at("norm_q").is_string() && j.at("norm_q").get<std::string>() == "inf")
                spec.norm_q = std::numeric_limits<double>::infinity();
            else
                spec.norm_q = j.at("norm_q").get<double>();
        }
        if (j.contains("measure"))
            spec.estimator.measure = ns::parse_est_measure(j.at("measure").get<std::string>());
        if (j.contains("n_design")) spec.estimator.n_design = j.at("n_design").get<std::size_t>();
        if (j.contains("h")) spec.kernel.h = j.at("h").get<double>();
        const std::size_t threads =
            ns::resolve_threads(j.contains("threads") ? j.at("threads").get<long>() : 0);

        const ns::VineScoreReport report = ns::vine_scores(data->data, d, spec, threads);
        json per_vine = json::array();
        for (const auto& [v, m] : report.per_vine)
            per_vine.push_back({{"vine", json::parse(ns::vine_to_json(v))}, {"value", m}});
        json edges = json::object();
        for (const auto& [e, m] : report.edge_values) {
            std::string key = std::to_string(e.a + 1) + "," + std::to_string(e.b + 1) + "|";
            for (std::size_t i = 0; i < e.cond.size(); ++i)
                key += (i ? "," : "") + std::to_string(e.cond[i] + 1);
            edges[key] = m;
        }
        const json out{{"d", d},
                       {"aggregation", report.aggregation == ns::VineAggregation::Sum ? "sum" : "norm"},
                       {"wcns", report.wcns},
                       {"bcns", report.bcns},
                       {"acns", report.acns},
                       {"vine_count", report.per_vine.size()},
                       {"per_vine", per_vine},
                       {"edges", edges}};
        *out_json = dup_string(out.dump());
    });
}

} // extern "C"
