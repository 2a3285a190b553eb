/* Copyright (c) 2026, The replaylab Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to replaylab. Objects are opaque handles created and released
 * through this header; every fallible call returns an rl_status and leaves a
 * message for rl_last_error() on failure.
 */

#ifndef REPLAYLAB_H
#define REPLAYLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(REPLAYLAB_BUILDING)
#define RL_API __attribute__((visibility("default")))
#else
#define RL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
    RL_OK = 0,
    RL_ERR_NULL_ARG = 1,
    RL_ERR_CONFIG = 2,
    RL_ERR_INPUT = 3,
    RL_ERR_IO = 4,
    RL_ERR_BUFFER_TOO_SMALL = 5,
    RL_ERR_INTERNAL = 6
} rl_status;

typedef struct rl_experiment rl_experiment;
typedef struct rl_report rl_report;
typedef struct rl_model rl_model;

/* Message of the most recent failure on the calling thread; "" if none. */
RL_API const char* rl_last_error(void);
RL_API const char* rl_version(void);
RL_API const char* rl_status_name(rl_status status);

/* ---- experiments ------------------------------------------------------ */

/* Built-in configurations: "default" (reference sizes) or "ci" (small). */
RL_API rl_status rl_experiment_preset(const char* name, rl_experiment** out);
RL_API rl_status rl_experiment_load(const char* path, rl_experiment** out);
RL_API rl_status rl_experiment_from_json(const char* text, rl_experiment** out);
RL_API void rl_experiment_free(rl_experiment* exp);

/* Replaces the seed list with a single seed. */
RL_API rl_status rl_experiment_set_seed(rl_experiment* exp, int64_t seed);
RL_API rl_status rl_experiment_set_seeds(rl_experiment* exp, const int64_t* seeds, size_t count);
RL_API rl_status rl_experiment_set_output_dir(rl_experiment* exp, const char* dir);
RL_API rl_status rl_experiment_set_threads(rl_experiment* exp, size_t threads);
/* Keeps only the named strategy, at its default hyperparameters unless the
 * config already lists it. */
RL_API rl_status rl_experiment_select_strategy(rl_experiment* exp, const char* name);

/* Writes the effective configuration as JSON. With buf == NULL only *needed
 * is set; it always includes the terminating NUL. */
RL_API rl_status rl_experiment_to_json(const rl_experiment* exp, char* buf, size_t cap, size_t* needed);

typedef void (*rl_progress_fn)(const char* message, void* user);
RL_API rl_status rl_experiment_set_progress(rl_experiment* exp, rl_progress_fn fn, void* user);

/* Writes the six split files for every seed, into <out>/data/seed-N. */
RL_API rl_status rl_gen_data(const rl_experiment* exp);

/* Each of these writes report.json, report.txt and timing.json under the
 * output directory and, when `out` is not NULL, returns the report. */
RL_API rl_status rl_pretrain(const rl_experiment* exp, rl_report** out);
RL_API rl_status rl_finetune(const rl_experiment* exp, rl_report** out);
RL_API rl_status rl_run(const rl_experiment* exp, rl_report** out);
RL_API rl_status rl_sweep(const rl_experiment* exp, rl_report** out);

/* ---- reports ---------------------------------------------------------- */

typedef struct rl_report_row {
    const char* label; /* valid while the report lives */
    int is_scratch;
    int64_t seed;
    int has_grid_value;
    double grid_value;
    double old_metric;
    double new_metric;
    double mean_metric;
    int has_transfer;
    double bwt;
    double fwt;
    uint64_t train_steps;
    uint64_t scoring_grad_evals;
    uint64_t resample_events;
    uint64_t total_work;
} rl_report_row;

RL_API rl_status rl_report_load(const char* path, rl_report** out);
RL_API void rl_report_free(rl_report* report);
RL_API size_t rl_report_row_count(const rl_report* report);
RL_API rl_status rl_report_row_at(const rl_report* report, size_t index, rl_report_row* row);
RL_API rl_status rl_report_render_table(const rl_report* report, char* buf, size_t cap, size_t* needed);
RL_API rl_status rl_report_to_json(const rl_report* report, char* buf, size_t cap, size_t* needed);

/* ---- models ----------------------------------------------------------- */

/* activation: "relu" or "tanh". */
RL_API rl_status rl_model_create(size_t input_dim, const size_t* hidden, size_t n_hidden, size_t num_classes,
                                 const char* activation, rl_model** out);
RL_API rl_status rl_model_load(const char* path, rl_model** out);
RL_API void rl_model_free(rl_model* model);
RL_API size_t rl_model_param_count(const rl_model* model);
RL_API rl_status rl_model_init(rl_model* model, uint64_t seed);
RL_API rl_status rl_model_get_params(const rl_model* model, double* out, size_t n);
RL_API rl_status rl_model_set_params(rl_model* model, const double* values, size_t n);
/* logits must hold num_classes values. */
RL_API rl_status rl_model_forward(const rl_model* model, const double* features, size_t dim, double* logits,
                                  size_t n_logits);
/* Gradient of the cross-entropy of one labelled sample; writes the loss too. */
RL_API rl_status rl_model_sample_gradient(const rl_model* model, const double* features, size_t dim, size_t label,
                                          double* grad, size_t n, double* loss);
RL_API rl_status rl_model_save(const rl_model* model, const char* path);

/* ---- numerics --------------------------------------------------------- */

/* Negative cosine of g and g_i. *defined is 0 and *score is -1 when either
 * gradient has near-zero norm. */
RL_API rl_status rl_interference_score(const double* g, const double* g_i, size_t n, double* score, int* defined);
/* Projects g against g_ref into out (which may alias g). *projected reports
 * whether the projection changed anything. */
RL_API rl_status rl_agem_project(const double* g, const double* g_ref, size_t n, double* out, int* projected);
RL_API rl_status rl_transfer_metrics(double old_metric, double new_metric, double lb_old, double lb_new, double* bwt,
                                     double* fwt, double* mean);
RL_API rl_status rl_time_reduction(double baseline, double method, double* percent);

#ifdef __cplusplus
}
#endif

#endif /* REPLAYLAB_H */
