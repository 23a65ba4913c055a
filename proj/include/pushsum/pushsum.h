/* pushsum — distributed non-Bayesian learning over time-varying directed
 * graphs: C API.
 *
 * All functions return a psl_status; on failure psl_last_error() describes
 * what went wrong (thread-local). Objects returned through out-parameters are
 * owned by the caller and released with the matching *_free function.
 * Status values double as the CLI exit codes.
 */
#ifndef PUSHSUM_H
#define PUSHSUM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psl_status {
  PSL_OK = 0,
  PSL_ERR_RUNTIME = 1,      /* internal or I/O failure */
  PSL_ERR_VALIDATION = 2,   /* bad file, argument, or invariant violation */
  PSL_ERR_VERIFICATION = 3, /* a verification check failed */
  PSL_ERR_HORIZON = 4       /* horizon shorter than the transient time */
} psl_status;

const char *psl_last_error(void);
const char *psl_version(void);

typedef struct psl_model psl_model;
typedef struct psl_graph psl_graph;
typedef struct psl_trace psl_trace;

/* ---- models ---- */

psl_status psl_model_load(const char *path, psl_model **out);
void psl_model_free(psl_model *model);
int32_t psl_model_agents(const psl_model *model);
int32_t psl_model_hypotheses(const psl_model *model);
psl_status psl_model_group_confidence(const psl_model *model, int32_t theta,
                                      double *out);
/* Writes up to `cap` optimal hypothesis indices in ascending order. */
psl_status psl_model_optimal_set(const psl_model *model, double rel_tol,
                                 int32_t *buf, int32_t cap, int32_t *count);
psl_status psl_model_alpha(const psl_model *model, double *out);
psl_status psl_model_gamma2(const psl_model *model, double *out);

/* ---- graph sequences ---- */

psl_status psl_graph_load(const char *path, psl_graph **out);
void psl_graph_free(psl_graph *graph);
int32_t psl_graph_nodes(const psl_graph *graph);
int32_t psl_graph_window(const psl_graph *graph); /* B */

/* PSL_OK when every window's edge union is strongly connected; on failure
 * PSL_ERR_VERIFICATION with *first_bad set to the failing window index. */
psl_status psl_graph_audit(const psl_graph *graph, int32_t window_b,
                           int64_t windows, int64_t *first_bad);
/* regular_case is 1 when the regular B=1 constants apply. */
psl_status psl_graph_constants(const psl_graph *graph, double *big_c,
                               double *lambda, double *log_delta_floor,
                               int32_t *regular_case);
psl_status psl_graph_empirical_delta(const psl_graph *graph, int64_t horizon,
                                     double *out);
/* Max excess of the geometric ergodicity bound over [0, horizon]
 * (negative: bound held everywhere). */
psl_status psl_graph_ergodicity(const psl_graph *graph, int64_t horizon,
                                double *max_excess);
/* Full audit report (connectivity, regularity, delta, ergodicity, constants)
 * written to report_path. PSL_ERR_VERIFICATION when connectivity fails. */
psl_status psl_graph_audit_report(const psl_graph *graph, int32_t window_b,
                                  int64_t windows, int64_t horizon,
                                  const char *report_path, int64_t *first_bad);

/* ---- simulation ---- */

typedef struct psl_sim_options {
  int32_t variant;  /* 0 push-sum, 1 plain */
  int64_t horizon;  /* >= 1 */
  uint64_t master_seed;
  int32_t runs;           /* >= 1 */
  int32_t summary_record; /* 0 full, 1 every 10th step plus endpoints */
  int32_t threads;        /* 0 = hardware concurrency */
} psl_sim_options;

/* Writes trace_<run>.trace per run plus manifest.txt into out_dir.
 * json_traces additionally writes trace_<run>.json; stamp adds a timestamp
 * line to the manifest (default off so reruns are byte-identical). */
psl_status psl_simulate(const psl_model *model, const psl_graph *graph,
                        const psl_sim_options *options, const char *out_dir,
                        int32_t json_traces, int32_t stamp);

/* One in-memory trajectory. */
psl_status psl_trace_run(const psl_model *model, const psl_graph *graph,
                         const psl_sim_options *options, int32_t run_index,
                         psl_trace **out);
psl_status psl_trace_load(const char *path, psl_trace **out);
void psl_trace_free(psl_trace *trace);
int64_t psl_trace_records(const psl_trace *trace);
/* record is an index into the recorded steps, not a step number. */
psl_status psl_trace_step(const psl_trace *trace, int64_t record, int64_t *k);
psl_status psl_trace_log_belief(const psl_trace *trace, int64_t record,
                                int32_t agent, int32_t theta, double *out);
psl_status psl_trace_weight(const psl_trace *trace, int64_t record,
                            int32_t agent, double *out);

/* ---- verification ---- */

typedef struct psl_verify_options {
  double rho;                /* in (0,1) */
  int32_t analytic_delta;    /* 1: use the analytic delta floor */
  int64_t delta_horizon;     /* 0: use the simulation horizon */
  /* NaN = no override. */
  double override_alpha;
  double override_delta;
  double override_gamma2;
  double override_big_c;
  double override_lambda;
} psl_verify_options;

void psl_verify_options_init(psl_verify_options *options, double rho);

typedef struct psl_verify_summary {
  double alpha, delta, big_c, lambda, gamma2;
  int64_t n_rho;
  int32_t regular_case;
  int64_t runs, violating_runs;
  double violating_fraction;
} psl_verify_summary;

/* Computes every rate constant, runs the Monte Carlo batch, checks each run
 * against the belief bound, and writes a key/value report to report_path
 * (pass NULL to skip the file). Returns PSL_OK when the violating fraction
 * is <= rho, PSL_ERR_VERIFICATION when it exceeds rho, PSL_ERR_HORIZON when
 * the horizon is shorter than the transient time N(rho). */
psl_status psl_verify(const psl_model *model, const psl_graph *graph,
                      const psl_sim_options *sim,
                      const psl_verify_options *options,
                      const char *report_path, psl_verify_summary *out);

/* ---- slopes ---- */

/* Decay slopes per (trace, agent, non-optimal hypothesis) with theoretical
 * reference rates, written as CSV. burn_in < 0 selects the default window
 * start (10% of the horizon). graph may be NULL; influence references are
 * emitted for static graphs only. */
psl_status psl_slopes(const psl_model *model, const psl_graph *graph,
                      const char *const *trace_paths, int32_t n_traces,
                      int64_t burn_in, const char *csv_path);

#ifdef __cplusplus
}
#endif

#endif /* PUSHSUM_H */
