/*
 * nonsimplify C API: measures of non-simplifyingness for conditional
 * copulas and vines.
 *
 * All functions return NS_OK (0) on success or an error status:
 *   NS_ERR_INVALID (2)     bad arguments, unknown names, malformed files
 *   NS_ERR_NUMERIC (3)     numeric failure
 *   NS_ERR_DEGENERATE (4)  degenerate data (empty kernel windows, CKT
 *                          denominator guard); widen the bandwidth
 * ns_last_error() describes the most recent failure on this thread.
 *
 * Strings returned through char** out parameters are heap-allocated JSON;
 * release them with ns_string_free(). Datasets are opaque handles released
 * with ns_dataset_free().
 */
#ifndef NONSIMPLIFY_H
#define NONSIMPLIFY_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define NS_OK 0
#define NS_ERR_INVALID 2
#define NS_ERR_NUMERIC 3
#define NS_ERR_DEGENERATE 4

typedef int32_t ns_status;
typedef struct ns_dataset ns_dataset;

const char* ns_version(void);

/* Message for the last failing call on the calling thread. */
const char* ns_last_error(void);

void ns_string_free(char* s);

/*
 * Population (oracle) measures for a built-in model.
 *   model:   "indep", "gauss_0_5", "gauss_0.8z"
 *   measure: "psi1_cvm", "psi1_ks", "psi0_cvm", "psi0_ks",
 *            "param_sup", "param_int"
 *   options_json (optional, may be NULL): {"u_grid":101, "z_grid":201,
 *     "quad":"trapezoid"|"gl", "refine_passes":3, "refine_shrink":0.5}
 * Output: {"model":..., "measure":..., "value":..., "abs_err_estimate":...,
 *          "evaluations":...}
 */
ns_status ns_oracle(const char* model, const char* measure, const char* options_json,
                    char** out_json);

/* Datasets: CSV format is a header `x1,...,xd[,z1,...,zp]` plus numeric rows. */
ns_status ns_dataset_from_csv(const char* path, ns_dataset** out);
ns_status ns_dataset_sample(const char* model, int64_t n, uint64_t seed, ns_dataset** out);
ns_status ns_dataset_sample_gaussian(const double* corr, int32_t dim, int64_t n, uint64_t seed,
                                     ns_dataset** out);
ns_status ns_dataset_sample_sign_mixture3(int64_t n, uint64_t seed, ns_dataset** out);
ns_status ns_dataset_write_csv(const ns_dataset* data, const char* path);
int64_t ns_dataset_rows(const ns_dataset* data);
int32_t ns_dataset_xdim(const ns_dataset* data);
int32_t ns_dataset_zdim(const ns_dataset* data);
void ns_dataset_free(ns_dataset* data);

/*
 * Plug-in estimate of one measure on a dataset.
 *   options_json: {"measure":"psi1_cvm", "ave_variant":"cs3", "h":0.1,
 *     "kernel":"epanechnikov", "u_grid":50, "n_design":20,
 *     "pseudo_z":"auto"|"raw"|"rank", "threads":0}
 * Output echoes the resolved spec together with the value.
 */
ns_status ns_estimate(const ns_dataset* data, const char* options_json, char** out_json);

/*
 * Simulation study. config_json (may be NULL for the defaults):
 *   {"dgps":["indep","gauss_0_5","gauss_0.8z"], "n":2000, "replications":50,
 *    "h_grid":[...], "measures":["psi1_cvm:cs3", ...], "base_seed":...,
 *    "n_design":20, "u_grid":50, "kernel":"epanechnikov",
 *    "timing":"none"|"wall", "threads":0}
 * Writes the per-replication rows and the summary as CSV, and reports
 * {"rows":..., "summary_rows":..., "separation":"..."}.
 */
ns_status ns_simulate(const char* config_json, const char* rows_csv_path,
                      const char* summary_csv_path, char** out_json);

/* All labeled regular vines on d variables (2 <= d <= 5), as JSON. */
ns_status ns_enumerate_vines(int32_t d, char** out_json);

/*
 * WCNS/BCNS/ACNS vine scores of a dataset (X columns only).
 *   options_json: {"d":4, "aggregation":"sum"|"norm", "norm_q":2.0,
 *     "measure":"ckt_sup", "h":-1.0, "n_design":20, "threads":0}
 * h <= 0 selects the per-edge plug-in bandwidth rule.
 */
ns_status ns_vine_score(const ns_dataset* data, const char* options_json, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* NONSIMPLIFY_H */
