// Command-line front end for the nonsimplify shared library.
// Talks to the library exclusively through the C API in nonsimplify.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nonsimplify.h"

using nlohmann::json;

namespace {

int fail(ns_status status) {
    std::cerr << "error: " << ns_last_error() << "\n";
    return static_cast<int>(status);
}

int emit(const char* payload, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << payload << "\n";
    } else {
        std::ofstream out(output_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << output_path << "\n";
            return 2;
        }
        out << payload << "\n";
    }
    return 0;
}

json parse_override_value(const std::string& key, const std::string& value) {
    try {
        return json::parse(value);
    } catch (const json::exception&) {
    }
    // comma list convenience for array-valued keys
    if (key == "h_grid" || key == "dgps" || key == "measures") {
        json arr = json::array();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                arr.push_back(json::parse(item));
            } catch (const json::exception&) {
                arr.push_back(item);
            }
        }
        return arr;
    }
    return value;
}

struct DatasetHandle {
    ns_dataset* ptr = nullptr;
    ~DatasetHandle() { ns_dataset_free(ptr); }
};

struct StringHandle {
    char* ptr = nullptr;
    ~StringHandle() { ns_string_free(ptr); }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measures of non-simplifyingness for conditional copulas and vines"};
    app.set_help_flag("--help", "Print help");
    app.require_subcommand(1);
    auto sub = [&](const char* name, const char* desc) {
        auto* s = app.add_subcommand(name, desc);
        s->set_help_flag("--help", "Print help");
        return s;
    };
    long threads = 0;
    app.add_option("--threads", threads, "Worker threads (0: NONSIMPLIFY_THREADS or all cores)");

    // oracle
    auto* oracle = sub("oracle", "Population measure of a built-in model");
    std::string model, measure = "psi1_cvm", output;
    int u_grid = 0, z_grid = 0, refine_passes = -1;
    double refine_shrink = 0.0;
    std::string quad;
    oracle->add_option("--model", model, "indep, gauss_0_5, gauss_0.8z")->required();
    oracle->add_option("--measure", measure,
                       "psi1_cvm, psi1_ks, psi0_cvm, psi0_ks, param_sup, param_int");
    oracle->add_option("--u-grid", u_grid, "u nodes per axis (default 101)");
    oracle->add_option("--z-grid", z_grid, "z nodes (default 201)");
    oracle->add_option("--quad", quad, "trapezoid or gl");
    oracle->add_option("--refine-passes", refine_passes, "sup refinement passes (default 3)");
    oracle->add_option("--refine-shrink", refine_shrink, "per-pass window shrink (default 0.5)");
    oracle->add_option("-o,--output", output, "Write JSON here instead of stdout");

    // estimate
    auto* estimate = sub("estimate", "Plug-in estimate from a CSV dataset");
    std::string data_path, ave_variant, kernel, pseudo_z;
    std::string est_measure = "ckt_sup";
    double h = 0.1;
    int est_u_grid = 0;
    long n_design = 0;
    estimate->add_option("--data", data_path, "CSV with header x1,..,xd,z1,..,zp")->required();
    estimate->add_option("--measure", est_measure,
                         "psi1_cvm, psi1_ks, psi0_cvm, psi0_ks, ckt_sup, ckt_sum, ckt_avg");
    estimate->add_option("--ave-variant", ave_variant, "cs3 or cs4 (for psi1_*)");
    estimate->add_option("--h", h, "bandwidth")->required();
    estimate->add_option("--kernel", kernel, "epanechnikov, gaussian, uniform");
    estimate->add_option("--u-grid", est_u_grid, "u grid per axis (default 50)");
    estimate->add_option("--n-design", n_design, "design points (default 20)");
    estimate->add_option("--pseudo-z", pseudo_z, "auto, raw or rank");
    estimate->add_option("-o,--output", output, "Write JSON here instead of stdout");

    // simulate
    auto* simulate = sub("simulate", "Replication study over bandwidths");
    std::string config_path, rows_out = "rows.csv", summary_out = "summary.csv", timing;
    std::vector<std::string> overrides;
    long replications = 0, sim_n = 0;
    simulate->add_option("--config", config_path, "JSON config file");
    simulate->add_option("--set", overrides, "key=value config overrides (repeatable)");
    simulate->add_option("--replications", replications, "override replication count");
    simulate->add_option("--n", sim_n, "override sample size");
    simulate->add_option("--timing", timing, "none (default, deterministic) or wall");
    simulate->add_option("--rows-out", rows_out, "per-replication CSV (default rows.csv)");
    simulate->add_option("--summary-out", summary_out, "summary CSV (default summary.csv)");

    // vine-score
    auto* vine = sub("vine-score", "WCNS/BCNS/ACNS over all d-dimensional vines");
    std::string vine_data, aggregation, vine_measure_name, norm_q;
    int vine_d = 0;
    double vine_h = -1.0;
    long vine_n_design = 0;
    vine->add_option("--data", vine_data, "CSV with columns x1..xd")->required();
    vine->add_option("--d", vine_d, "dimension (default: all columns, max 5)");
    vine->add_option("--aggregation", aggregation, "sum or norm");
    vine->add_option("--norm-q", norm_q, "norm exponent (number or 'inf')");
    vine->add_option("--measure", vine_measure_name, "ckt_sup, ckt_sum, ckt_avg");
    vine->add_option("--h", vine_h, "bandwidth in IQR units (<= 0: plug-in rule)");
    vine->add_option("--n-design", vine_n_design, "design points per edge (default 20)");
    vine->add_option("-o,--output", output, "Write JSON here instead of stdout");

    // enumerate-vines
    auto* enumerate = sub("enumerate-vines", "List all labeled regular vines");
    int enum_d = 0;
    enumerate->add_option("--d", enum_d, "dimension, 2..5")->required();
    enumerate->add_option("-o,--output", output, "Write JSON here instead of stdout");

    // sample
    auto* sample = sub("sample", "Draw a dataset from a built-in model");
    std::string sample_model = "gauss_0.8z", sample_out = "sample.csv";
    long sample_n = 2000;
    std::uint64_t sample_seed = 1;
    sample->add_option("--model", sample_model, "indep, gauss_0_5, gauss_0.8z");
    sample->add_option("--n", sample_n, "rows");
    sample->add_option("--seed", sample_seed, "RNG seed");
    sample->add_option("-o,--output", sample_out, "CSV path (default sample.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    if (oracle->parsed()) {
        json opts = json::object();
        if (u_grid > 0) opts["u_grid"] = u_grid;
        if (z_grid > 0) opts["z_grid"] = z_grid;
        if (!quad.empty()) opts["quad"] = quad;
        if (refine_passes >= 0) opts["refine_passes"] = refine_passes;
        if (refine_shrink > 0.0) opts["refine_shrink"] = refine_shrink;
        StringHandle out;
        const ns_status st =
            ns_oracle(model.c_str(), measure.c_str(), opts.dump().c_str(), &out.ptr);
        if (st != NS_OK) return fail(st);
        return emit(out.ptr, output);
    }

    if (estimate->parsed()) {
        DatasetHandle data;
        ns_status st = ns_dataset_from_csv(data_path.c_str(), &data.ptr);
        if (st != NS_OK) return fail(st);
        json opts{{"measure", est_measure}, {"h", h}};
        if (!ave_variant.empty()) opts["ave_variant"] = ave_variant;
        if (!kernel.empty()) opts["kernel"] = kernel;
        if (est_u_grid > 0) opts["u_grid"] = est_u_grid;
        if (n_design > 0) opts["n_design"] = n_design;
        if (!pseudo_z.empty()) opts["pseudo_z"] = pseudo_z;
        if (threads > 0) opts["threads"] = threads;
        StringHandle out;
        st = ns_estimate(data.ptr, opts.dump().c_str(), &out.ptr);
        if (st != NS_OK) {
            if (st == NS_ERR_DEGENERATE)
                std::cerr << "hint: the kernel window is too narrow; raise --h\n";
            return fail(st);
        }
        return emit(out.ptr, output);
    }

    if (simulate->parsed()) {
        json cfg = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "error: cannot open config " << config_path << "\n";
                return 2;
            }
            try {
                in >> cfg;
            } catch (const json::exception& e) {
                std::cerr << "error: config parse: " << e.what() << "\n";
                return 2;
            }
        }
        static const std::set<std::string> known = {
            "dgps", "dgp", "n", "replications", "h_grid", "measures", "base_seed",
            "n_design", "u_grid", "kernel", "timing", "threads"};
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                std::cerr << "error: override '" << kv << "' is not key=value\n";
                return 2;
            }
            const std::string key = kv.substr(0, eq);
            if (!known.count(key)) {
                std::cerr << "error: override names unknown config key '" << key << "'\n";
                return 2;
            }
            cfg[key] = parse_override_value(key, kv.substr(eq + 1));
        }
        if (replications > 0) cfg["replications"] = replications;
        if (sim_n > 0) cfg["n"] = sim_n;
        if (!timing.empty()) cfg["timing"] = timing;
        if (threads > 0) cfg["threads"] = threads;
        StringHandle out;
        const ns_status st =
            ns_simulate(cfg.dump().c_str(), rows_out.c_str(), summary_out.c_str(), &out.ptr);
        if (st != NS_OK) return fail(st);
        const json result = json::parse(out.ptr);
        std::cout << result.at("separation").get<std::string>() << "\n";
        std::cout << "rows: " << rows_out << " (" << result.at("rows") << " rows), summary: "
                  << summary_out << " (" << result.at("summary_rows") << " rows)\n";
        return 0;
    }

    if (vine->parsed()) {
        DatasetHandle data;
        ns_status st = ns_dataset_from_csv(vine_data.c_str(), &data.ptr);
        if (st != NS_OK) return fail(st);
        json opts = json::object();
        if (vine_d > 0) opts["d"] = vine_d;
        if (!aggregation.empty()) opts["aggregation"] = aggregation;
        if (!norm_q.empty()) {
            if (norm_q == "inf")
                opts["norm_q"] = "inf";
            else
                opts["norm_q"] = std::stod(norm_q);
        }
        if (!vine_measure_name.empty()) opts["measure"] = vine_measure_name;
        opts["h"] = vine_h;
        if (vine_n_design > 0) opts["n_design"] = vine_n_design;
        if (threads > 0) opts["threads"] = threads;
        StringHandle out;
        st = ns_vine_score(data.ptr, opts.dump().c_str(), &out.ptr);
        if (st != NS_OK) return fail(st);
        return emit(out.ptr, output);
    }

    if (enumerate->parsed()) {
        StringHandle out;
        const ns_status st = ns_enumerate_vines(enum_d, &out.ptr);
        if (st != NS_OK) return fail(st);
        return emit(out.ptr, output);
    }

    if (sample->parsed()) {
        DatasetHandle data;
        ns_status st = ns_dataset_sample(sample_model.c_str(), sample_n, sample_seed, &data.ptr);
        if (st != NS_OK) return fail(st);
        st = ns_dataset_write_csv(data.ptr, sample_out.c_str());
        if (st != NS_OK) return fail(st);
        std::cout << "wrote " << ns_dataset_rows(data.ptr) << " rows to " << sample_out << "\n";
        return 0;
    }

    return 2;
}
