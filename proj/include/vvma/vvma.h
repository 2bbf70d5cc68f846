/*
 * C interface to the VVMA library: shared-matrix ("vector-vector-matrix")
 * weight parametrization, fitting against low-rank baselines, closed-form
 * accelerator clock models and a cycle-level systolic array simulator.
 *
 * Conventions:
 *  - Every fallible call returns a vvma_status; on failure the message is
 *    available from vvma_last_error() on the calling thread.
 *  - Objects are opaque handles released with the matching _free call.
 *    Freeing NULL is a no-op.
 *  - Strings returned through char** are heap-allocated; release them with
 *    vvma_string_free.
 *  - Matrices are row-major doubles.
 */
#ifndef VVMA_VVMA_H
#define VVMA_VVMA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(VVMA_BUILDING_LIBRARY)
#define VVMA_API __declspec(dllexport)
#else
#define VVMA_API __declspec(dllimport)
#endif
#else
#define VVMA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vvma_status {
  VVMA_OK = 0,
  VVMA_ERR_INVALID_ARGUMENT = 1,
  VVMA_ERR_SHAPE_MISMATCH = 2,
  VVMA_ERR_NUMERICAL = 3,
  VVMA_ERR_IO = 4,
  VVMA_ERR_PARSE = 5,
  VVMA_ERR_BUDGET_EXCEEDED = 6,
  VVMA_ERR_INTERNAL = 7
} vvma_status;

VVMA_API const char* vvma_last_error(void);
VVMA_API const char* vvma_status_name(vvma_status status);
VVMA_API const char* vvma_version(void);
/* Name of the seeded generator behind every random draw. */
VVMA_API const char* vvma_rng_name(void);
VVMA_API void vvma_string_free(char* str);

/* ---- dense matrices ------------------------------------------------------ */

typedef struct vvma_matrix vvma_matrix;

typedef enum vvma_distribution { VVMA_DIST_GAUSSIAN = 0, VVMA_DIST_UNIFORM = 1 } vvma_distribution;

typedef struct vvma_random_spec {
  vvma_distribution distribution;
  double a; /* gaussian: mean; uniform: lo */
  double b; /* gaussian: stddev; uniform: hi */
  uint64_t seed;
} vvma_random_spec;

/* data may be NULL for a zero matrix. */
VVMA_API vvma_status vvma_matrix_create(size_t rows, size_t cols, const double* data, vvma_matrix** out);
VVMA_API vvma_status vvma_matrix_random(size_t rows, size_t cols, const vvma_random_spec* spec, vvma_matrix** out);
VVMA_API void vvma_matrix_free(vvma_matrix* m);
VVMA_API size_t vvma_matrix_rows(const vvma_matrix* m);
VVMA_API size_t vvma_matrix_cols(const vvma_matrix* m);
/* Borrowed pointer, valid until the matrix is freed. */
VVMA_API const double* vvma_matrix_data(const vvma_matrix* m);
VVMA_API vvma_status vvma_matrix_multiply(const vvma_matrix* a, const vvma_matrix* b, vvma_matrix** out);
VVMA_API vvma_status vvma_matrix_frob_norm(const vvma_matrix* m, double* out);
VVMA_API vvma_status vvma_matrix_frob_dist(const vvma_matrix* a, const vvma_matrix* b, double* out);
VVMA_API vvma_status vvma_matrix_max_abs_diff(const vvma_matrix* a, const vvma_matrix* b, double* out);

/* Nonincreasing singular values; `len` must equal min(rows, cols). */
VVMA_API vvma_status vvma_singular_values(const vvma_matrix* m, double* out, size_t len);
/* Frobenius error of the best rank-p approximation (truncated SVD). */
VVMA_API vvma_status vvma_optimal_lowrank_error(const vvma_matrix* m, size_t p, double* out);

/* ---- VVMA parameters ----------------------------------------------------- */

typedef struct vvma_param vvma_param;

typedef enum vvma_init {
  VVMA_INIT_FAN_UNIFORM = 0, /* M ~ U[-sqrt(6/2k), sqrt(6/2k)], diagonals = 1 */
  VVMA_INIT_ZEROS = 1,
  VVMA_INIT_ONES = 2
} vvma_init;

VVMA_API vvma_status vvma_pad_shape(size_t m, size_t n, size_t k, size_t* r, size_t* c);
/* diag_enabled == 0 drops the diagonals and fixes m_scale at 0.1. */
VVMA_API vvma_status vvma_param_create(size_t k, size_t r, size_t c, vvma_init init, int diag_enabled, uint64_t seed,
                                       vvma_param** out);
VVMA_API void vvma_param_free(vvma_param* p);
VVMA_API size_t vvma_param_k(const vvma_param* p);
VVMA_API size_t vvma_param_row_blocks(const vvma_param* p);
VVMA_API size_t vvma_param_col_blocks(const vvma_param* p);
VVMA_API int vvma_param_diag_enabled(const vvma_param* p);
VVMA_API double vvma_param_m_scale(const vvma_param* p);
VVMA_API size_t vvma_param_count(const vvma_param* p);
VVMA_API vvma_status vvma_param_expand(const vvma_param* p, vvma_matrix** out);
/* x has c*k entries, y receives r*k entries. */
VVMA_API vvma_status vvma_param_matvec(const vvma_param* p, const double* x, size_t x_len, double* y, size_t y_len);
VVMA_API vvma_status vvma_param_to_json(const vvma_param* p, char** out);
VVMA_API vvma_status vvma_param_from_json(const char* json, vvma_param** out);

/* ---- fitting ------------------------------------------------------------- */

typedef struct vvma_fit_config {
  double learning_rate;
  size_t steps;
  uint64_t seed;
  double adam_beta1;
  double adam_beta2;
  double adam_epsilon;
  size_t log_every;
  int diag_enabled;
} vvma_fit_config;

typedef struct vvma_fit_report vvma_fit_report;

/* lr 1e-4, 30000 steps, Adam (0.9, 0.999, 1e-8), log every 100, diagonals on. */
VVMA_API void vvma_fit_config_default(vvma_fit_config* cfg);
VVMA_API size_t vvma_matched_rank(size_t m, size_t n, size_t k);
/* out_param may be NULL. */
VVMA_API vvma_status vvma_fit_vvma(const vvma_matrix* target, size_t k, const vvma_fit_config* cfg,
                                   vvma_param** out_param, vvma_fit_report** out_report);
/* out_u / out_v may be NULL. */
VVMA_API vvma_status vvma_fit_lowrank(const vvma_matrix* target, size_t p, const vvma_fit_config* cfg,
                                      vvma_matrix** out_u, vvma_matrix** out_v, vvma_fit_report** out_report);
VVMA_API void vvma_fit_report_free(vvma_fit_report* r);
VVMA_API double vvma_fit_report_final_loss(const vvma_fit_report* r);
VVMA_API size_t vvma_fit_report_params_fitted(const vvma_fit_report* r);
VVMA_API double vvma_fit_report_wall_seconds(const vvma_fit_report* r);
VVMA_API size_t vvma_fit_report_curve_length(const vvma_fit_report* r);
VVMA_API vvma_status vvma_fit_report_curve_point(const vvma_fit_report* r, size_t index, size_t* step, double* loss);
/* CSV with columns step,loss. */
VVMA_API vvma_status vvma_fit_report_to_csv(const vvma_fit_report* r, char** out);
/* JSON summary with a config echo; wall_seconds only when include_timing. */
VVMA_API vvma_status vvma_fit_report_to_json(const vvma_fit_report* r, int include_timing, char** out);

/* ---- clock and FLOP model ------------------------------------------------ */

typedef struct vvma_clock_params {
  uint64_t k;
  uint64_t t;
} vvma_clock_params;

typedef struct vvma_cost_report {
  uint64_t clocks_baseline;
  uint64_t clocks_vvma;
  uint64_t flops_baseline;
  uint64_t flops_vvma;
  uint64_t params_baseline;
  uint64_t params_vvma;
  double speedup;
} vvma_cost_report;

typedef enum vvma_exec_mode { VVMA_EXEC_BASELINE = 0, VVMA_EXEC_VVMA = 1 } vvma_exec_mode;

VVMA_API vvma_status vvma_clocks(uint64_t m, uint64_t n, uint64_t repeats, const vvma_clock_params* cp,
                                 vvma_exec_mode mode, uint64_t* out);
VVMA_API vvma_status vvma_flops(uint64_t m, uint64_t n, uint64_t repeats, const vvma_clock_params* cp,
                                vvma_exec_mode mode, uint64_t* out);
/* shapes_json: array of {name, m, n, repeats[, structured]}. json_out and
   csv_out may be NULL. */
VVMA_API vvma_status vvma_cost_evaluate(const char* shapes_json, const vvma_clock_params* cp, vvma_cost_report* total,
                                        char** json_out, char** csv_out);

/* ---- systolic simulator -------------------------------------------------- */

typedef enum vvma_sim_mode { VVMA_SIM_BASELINE = 0, VVMA_SIM_VVMA = 1 } vvma_sim_mode;

typedef enum vvma_event_kind {
  VVMA_EVENT_LOAD_ROW = 0,
  VVMA_EVENT_FILL = 1,
  VVMA_EVENT_STREAM_IN = 2,
  VVMA_EVENT_STREAM_OUT = 3,
  VVMA_EVENT_VV_MUL = 4
} vvma_event_kind;

typedef struct vvma_sim_config {
  size_t k;
  vvma_sim_mode mode;
  int record_trace;
  int vv_unit_enabled;
  size_t trace_limit;
} vvma_sim_config;

typedef struct vvma_sim_result vvma_sim_result;

/* k = 8, baseline, no trace, vector unit on, trace limit 1e6 events. */
VVMA_API void vvma_sim_config_default(vvma_sim_config* cfg);
VVMA_API vvma_status vvma_simulate_baseline(const vvma_matrix* w, const vvma_matrix* x, const vvma_sim_config* cfg,
                                            vvma_sim_result** out);
VVMA_API vvma_status vvma_simulate_vvma(const vvma_param* p, const vvma_matrix* x, const vvma_sim_config* cfg,
                                        vvma_sim_result** out);
/* Runs cfg->mode on the weights of p; the baseline sees the dense expansion.
   The two calls above ignore cfg->mode. */
VVMA_API vvma_status vvma_simulate(const vvma_param* p, const vvma_matrix* x, const vvma_sim_config* cfg,
                                   vvma_sim_result** out);
VVMA_API void vvma_sim_result_free(vvma_sim_result* r);
VVMA_API uint64_t vvma_sim_result_cycles(const vvma_sim_result* r);
VVMA_API uint64_t vvma_sim_result_weight_row_loads(const vvma_sim_result* r);
/* Borrowed; valid until the result is freed. */
VVMA_API const vvma_matrix* vvma_sim_result_output(const vvma_sim_result* r);
VVMA_API int vvma_sim_result_has_trace(const vvma_sim_result* r);
VVMA_API size_t vvma_sim_result_event_count(const vvma_sim_result* r, vvma_event_kind kind);
/* CSV with columns cycle,kind,block_i,block_j. */
VVMA_API vvma_status vvma_sim_result_trace_csv(const vvma_sim_result* r, char** out);

/* ---- training ------------------------------------------------------------ */

typedef enum vvma_optimizer { VVMA_OPT_SGD = 0, VVMA_OPT_ADAM = 1 } vvma_optimizer;

typedef struct vvma_train_config {
  double clip_norm;
  double learning_rate;
  size_t steps;
  size_t batch; /* 0 = full batch */
  uint64_t seed;
  vvma_optimizer optimizer;
  size_t log_every;
} vvma_train_config;

typedef struct vvma_train_report vvma_train_report;

/* clip 1.0, Adam lr 1e-2, 2000 steps, full batch, log every 10. */
VVMA_API void vvma_train_config_default(vvma_train_config* cfg);
/* arch: "IN,LAYER,..." with LAYER one of dense:OUT, vvma:OUT, relu, tanh.
   The teacher mirrors the architecture with diagonals always enabled. */
VVMA_API vvma_status vvma_train_teacher(const char* arch, size_t k, int diag_enabled, const vvma_train_config* cfg,
                                        uint64_t task_seed, vvma_train_report** out);
/* Built-in stress task: large-step SGD that needs gradient clipping. */
VVMA_API vvma_status vvma_train_stress(double clip_norm, uint64_t seed, vvma_train_report** out);
VVMA_API void vvma_train_report_free(vvma_train_report* r);
VVMA_API int vvma_train_report_diverged(const vvma_train_report* r);
VVMA_API double vvma_train_report_initial_loss(const vvma_train_report* r);
VVMA_API double vvma_train_report_final_loss(const vvma_train_report* r);
VVMA_API size_t vvma_train_report_steps_run(const vvma_train_report* r);
VVMA_API vvma_status vvma_train_report_to_csv(const vvma_train_report* r, char** out);
VVMA_API vvma_status vvma_train_report_to_json(const vvma_train_report* r, char** out);

#ifdef __cplusplus
}
#endif

#endif /* VVMA_VVMA_H */
