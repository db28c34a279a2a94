/* C interface to the composition-optimization library.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions return COMPOPT_OK (0) on success or a nonzero status code;
 * compopt_last_error() describes the most recent failure on the calling
 * thread. Strings returned as const char* are owned by the handle they were
 * obtained from and remain valid until it is destroyed.
 */
#ifndef COMPOPT_C_API_H
#define COMPOPT_C_API_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COMPOPT_API __declspec(dllexport)
#else
#define COMPOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct compopt_problem compopt_problem;
typedef struct compopt_schedule compopt_schedule;
typedef struct compopt_result compopt_result;
typedef struct compopt_report compopt_report;

enum {
  COMPOPT_OK = 0,
  COMPOPT_ERR_ARGUMENT = 1,
  COMPOPT_ERR_DIVERGED = 2,
  COMPOPT_ERR_UNKNOWN = 3,
};

enum {
  COMPOPT_ALG_SCSCG = 0,
  COMPOPT_ALG_SCSCG_MINIBATCH = 1,
  COMPOPT_ALG_FULL_ANCHOR = 2,
};

COMPOPT_API const char* compopt_version(void);

/* Message of the last failure on this thread; empty string if none. */
COMPOPT_API const char* compopt_last_error(void);

/* ------------------------------------------------------------------ */
/* Problems.                                                           */

/* spec_text is the flat one-line form, e.g.
 *   "lcq n=10 N=3 M=3 seed=7 region=10"
 *   "lcq_ref"
 *   "mean_variance n=5 N=3 lambda=0.5 seed=3 region=10"
 *   "nonconvex n=32 N=4 M=4 beta=0.5 seed=11 region=10"
 */
COMPOPT_API int compopt_problem_create(const char* spec_text, compopt_problem** out);
COMPOPT_API void compopt_problem_destroy(compopt_problem* p);

/* Round-trip text form; regenerates bit-identical oracles. */
COMPOPT_API const char* compopt_problem_spec(const compopt_problem* p);

COMPOPT_API int compopt_problem_counts(const compopt_problem* p, int64_t* n, int64_t* dim_x,
                                       int64_t* dim_w);

typedef struct compopt_constants {
  double mu;
  double B_G;
  double L_G;
  double B_F;
  double L_F;
  double L_f;
  double H1;
  double H2;
  /* bit i set => field i is an empirical estimate (order as above) */
  uint32_t estimated_mask;
} compopt_constants;

COMPOPT_API int compopt_problem_constants(const compopt_problem* p, compopt_constants* out);
/* Replaces the stored constants (e.g. externally estimated ones). */
COMPOPT_API int compopt_problem_set_constants(compopt_problem* p, const compopt_constants* c);

/* COMPOPT_ERR_ARGUMENT when the optimum is not analytically known. */
COMPOPT_API int compopt_problem_optimum(const compopt_problem* p, double* x, size_t cap,
                                        double* f_star);

/* Exact composite value / gradient (evaluation oracles). x has dim_x entries,
 * grad is written with dim_x entries. */
COMPOPT_API int compopt_problem_value(const compopt_problem* p, const double* x, double* value);
COMPOPT_API int compopt_problem_gradient(const compopt_problem* p, const double* x, double* grad);

/* ------------------------------------------------------------------ */
/* Schedules.                                                          */

COMPOPT_API int compopt_schedule_convex(const compopt_problem* p, double epsilon, int64_t b,
                                        double x0_gap, compopt_schedule** out);
COMPOPT_API int compopt_schedule_nonconvex(const compopt_problem* p, double epsilon, int64_t b,
                                           double c_A, double c_D, double c_T,
                                           compopt_schedule** out);
COMPOPT_API void compopt_schedule_destroy(compopt_schedule* s);

/* 0 = convex, 1 = nonconvex */
COMPOPT_API int compopt_schedule_mode(const compopt_schedule* s);

/* field is one of "A","D","K","S","b","eta","h","epsilon". overridden (if
 * non-NULL) receives 1 when the field was user-set rather than derived. */
COMPOPT_API int compopt_schedule_get(const compopt_schedule* s, const char* field, double* value,
                                     int* overridden);
COMPOPT_API int compopt_schedule_set(compopt_schedule* s, const char* field, double value);

/* Derivation notes and warnings, one per line. */
COMPOPT_API const char* compopt_schedule_notes(const compopt_schedule* s);

/* ------------------------------------------------------------------ */
/* Runs.                                                               */

typedef struct compopt_trace_row {
  int64_t s;
  double f_value;
  double grad_norm_sq;
  double dist_sq_opt; /* NaN when the optimum is unknown */
  uint64_t paper_queries;
  uint64_t paper_queries_corollary;
  uint64_t raw_queries;
} compopt_trace_row;

typedef struct compopt_ledger {
  uint64_t paper_queries;
  uint64_t raw_inner_values;
  uint64_t raw_inner_jacobians;
  uint64_t raw_outer_values;
  uint64_t raw_outer_gradients;
  uint64_t evaluation_queries;
} compopt_ledger;

/* x0 may be NULL for the zero vector. Returns COMPOPT_ERR_DIVERGED when the
 * iterate guard trips. */
COMPOPT_API int compopt_run(const compopt_problem* p, const compopt_schedule* s, int algorithm,
                            uint64_t seed, const double* x0, int verbose, compopt_result** out);
COMPOPT_API void compopt_result_destroy(compopt_result* r);

COMPOPT_API size_t compopt_result_rows(const compopt_result* r);
COMPOPT_API int compopt_result_row(const compopt_result* r, size_t index, compopt_trace_row* out);
/* Reservoir-selected output iterate (uniform over all (s,k)). */
COMPOPT_API int compopt_result_output(const compopt_result* r, double* x, size_t cap);
COMPOPT_API int compopt_result_final(const compopt_result* r, double* x, size_t cap);
COMPOPT_API int compopt_result_ledger(const compopt_result* r, compopt_ledger* out);

/* Epoch trace as CSV, '#'-prefixed header echoing every effective parameter.
 * Byte-stable under fixed seed and configuration. */
COMPOPT_API const char* compopt_result_csv(const compopt_result* r);
/* Per-iteration rows (verbose runs); empty string otherwise. */
COMPOPT_API const char* compopt_result_iterations_csv(const compopt_result* r);

/* ------------------------------------------------------------------ */
/* Lemma verification.                                                 */

typedef struct compopt_verify_options {
  uint64_t mc_seed;          /* 0 => default */
  int mc_samples;            /* 0 => default (20000) */
  int64_t enumeration_guard; /* 0 => default (1e6) */
  int without_replacement;   /* nonzero => subset mode */
} compopt_verify_options;

COMPOPT_API int compopt_verify(const compopt_problem* p, const compopt_verify_options* options,
                               compopt_report** out);
COMPOPT_API void compopt_report_destroy(compopt_report* r);
COMPOPT_API size_t compopt_report_rows(const compopt_report* r);
COMPOPT_API int compopt_report_all_pass(const compopt_report* r);
COMPOPT_API const char* compopt_report_csv(const compopt_report* r);

/* ------------------------------------------------------------------ */
/* Analysis.                                                           */

/* Convex contraction quantities; valid=0 flags rho1 <= 0. */
COMPOPT_API int compopt_convex_rates(const compopt_problem* p, const compopt_schedule* s,
                                     double* rho, double* rho1, double* rho2, double* rho3,
                                     int* valid);
/* Non-convex Lyapunov outputs; valid=0 flags u0 <= 0. */
COMPOPT_API int compopt_nonconvex_sequence(const compopt_problem* p, const compopt_schedule* s,
                                           double* u0, double* j0, double* c0, int* valid);

/* Paper-convention epoch cost D + K(A + 4b). */
COMPOPT_API uint64_t compopt_epoch_cost(uint64_t D, uint64_t K, uint64_t A, uint64_t b);

#ifdef __cplusplus
}
#endif

#endif /* COMPOPT_C_API_H */
