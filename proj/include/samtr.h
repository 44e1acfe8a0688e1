/*
 * samtr — derivative-free stochastic trust-region optimization for expensive
 * finite-sum objectives, with bandit-mixed subset sampling.
 *
 * C boundary of the shared library: opaque handles, status codes, and JSON
 * strings for structured data.  Every function that can fail returns a
 * samtr_status; on failure samtr_last_error() holds a thread-local message.
 * Strings returned through char** are heap-allocated and must be released
 * with samtr_string_free().
 */
#ifndef SAMTR_H
#define SAMTR_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum samtr_status {
  SAMTR_OK = 0,
  SAMTR_ERR_INVALID_ARGUMENT = 1,
  SAMTR_ERR_UNKNOWN_SPEC = 2,
  SAMTR_ERR_INDEX_OUT_OF_RANGE = 3,
  SAMTR_ERR_BUDGET_EXHAUSTED = 4,
  SAMTR_ERR_CALIBRATION_FAILURE = 5,
  SAMTR_ERR_DEGENERATE_GEOMETRY = 6,
  SAMTR_ERR_SINGULAR_SYSTEM = 7,
  SAMTR_ERR_INVALID_BATCH = 8,
  SAMTR_ERR_EMPTY_ADVICE = 9,
  SAMTR_ERR_MISSING_REWARD = 10,
  SAMTR_ERR_SURROGATE_UNAVAILABLE = 11,
  SAMTR_ERR_PARSE = 12,
  SAMTR_ERR_IO = 13,
  SAMTR_ERR_INTERNAL = 14
} samtr_status;

/* An instantiated objective: p expensive components combined as a plain sum
 * or a sum of squares. */
typedef struct samtr_problem samtr_problem;

/* A finished optimization run: final point plus the per-round trace. */
typedef struct samtr_result samtr_result;

/* Library version, e.g. "1.0.0".  Static storage; do not free. */
const char* samtr_version(void);

/* Message describing this thread's most recent failure ("" if none).
 * Valid until the next failing call on the same thread; do not free. */
const char* samtr_last_error(void);

/* Releases any string returned through a char** out parameter. */
void samtr_string_free(char* s);

/* ------------------------------------------------------------------ *
 * Problems                                                            *
 * ------------------------------------------------------------------ */

/* Instantiates a built-in problem family by name: "synthetic-quad",
 * "oscillator", "ext-rosenbrock", "powell-singular", "trigonometric",
 * "brown-almost-linear".  options_json may be NULL or a JSON object
 * {"dim": int, "p": int, "noise": bool, "x0": [dim floats]} (all optional;
 * zero/absent means the family default).  The seed drives synthetic data
 * generation (e.g. observation noise), not the solver. */
samtr_status samtr_problem_builtin(const char* name, uint64_t seed,
                                   const char* options_json,
                                   samtr_problem** out);

void samtr_problem_free(samtr_problem* prob);

/* Negative on a NULL handle. */
int samtr_problem_dim(const samtr_problem* prob);
int samtr_problem_num_components(const samtr_problem* prob);

/* Writes the standard start point into out[0..dim). */
samtr_status samtr_problem_start_point(const samtr_problem* prob, double* out);

/* One raw component value F_j(x), uncached and unmetered. */
samtr_status samtr_problem_component(const samtr_problem* prob, int j,
                                     const double* x, double* out);

/* Full objective h(F(x)). */
samtr_status samtr_problem_objective(const samtr_problem* prob,
                                     const double* x, double* out);

/* ------------------------------------------------------------------ *
 * Solver                                                              *
 * ------------------------------------------------------------------ */

/* Runs the stochastic trust-region solver.  config_json is a JSON object:
 *   {"experts": ["uniform", "lipschitz",
 *                {"kind": "external", "command": "...", "timeout_ms": 30000},
 *                {"kind": "surrogate", "training_points": 500}],
 *    "b": 1, "budget": 2000, "seed": 1,
 *    "rho_mode": "estimated" | "exact",
 *    "deterministic": false, "taylor_mode": false,
 *    "delta0": 0, "delta_max": 0, "gamma_inc": 2, "eta1": 0.1, "eta2": 10,
 *    "scale_ema": 0.8, "gamma_override": 0, "max_rounds": 100000}
 * Every field is optional except "budget" (use -1 for unlimited).  An empty
 * expert list gets the uniform expert. */
samtr_status samtr_solve(const samtr_problem* prob, const char* config_json,
                         samtr_result** out);

void samtr_result_free(samtr_result* result);

int samtr_result_dim(const samtr_result* result);
int64_t samtr_result_num_rounds(const samtr_result* result);
int64_t samtr_result_total_evals(const samtr_result* result);
double samtr_result_final_value(const samtr_result* result);

/* Writes the final point into out[0..dim). */
samtr_status samtr_result_final_point(const samtr_result* result, double* out);

/* Round k (0-based, k < num_rounds) as one JSON run-log line. */
samtr_status samtr_result_record_json(const samtr_result* result, int64_t k,
                                      char** out);

/* {"final_x", "final_f", "final_f_estimated", "total_evals", "rounds"}. */
samtr_status samtr_result_summary_json(const samtr_result* result, char** out);

/* ------------------------------------------------------------------ *
 * Harness                                                             *
 * ------------------------------------------------------------------ */

/* Runs a full experiment grid (or, when config_json carries a "regret" key,
 * the bandit regret lab) and writes run logs, profile CSVs and summaries
 * into out_dir.  summary_json (optional) receives the machine-readable
 * summary. */
samtr_status samtr_experiment_run(const char* config_json, const char* out_dir,
                                  char** summary_json);

/* Canonical experiment config by name: "failure-repro", "oscillator",
 * "regret". */
samtr_status samtr_preset_config(const char* name, char** out_json);

/* Recomputes performance profiles from the *.jsonl run logs in runs_dir
 * at tolerance tau; returns CSV (columns solver,ratio,fraction). */
samtr_status samtr_profile_runs(const char* runs_dir, double tau,
                                char** out_csv);

/* Bandit regret lab.  config_json: {"p", "b", "n_experts", "horizon",
 * "seeds", "table": "phased"|csv-path, "checkpoints": [ints]} (all optional
 * but the defaults run the standard cell).  Returns the report as CSV. */
samtr_status samtr_regret_lab(const char* config_json, char** out_csv);

/* Conditional-Poisson sampler spot check; returns CSV (columns
 * j,target,exact,exact_err,freq,z). */
samtr_status samtr_sample_check(int p, int b, int64_t trials, uint64_t seed,
                                char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* SAMTR_H */
