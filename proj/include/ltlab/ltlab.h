/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the long-tail classification lab.
 *
 * Objects are opaque handles created by *_create / *_load / *_generate and
 * released by the matching *_destroy. Every fallible call returns an
 * ltlab_status; on failure ltlab_last_error() describes the problem (the
 * message is per thread and valid until the next failing call on that
 * thread). Strings returned through char** are heap allocated and must be
 * released with ltlab_string_free.
 */
#ifndef LTLAB_LTLAB_H_
#define LTLAB_LTLAB_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LTLAB_API __declspec(dllexport)
#else
#define LTLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ltlab_status {
  LTLAB_OK = 0,
  LTLAB_ERR_INVALID_ARGUMENT = 1,
  LTLAB_ERR_IO = 2,
  LTLAB_ERR_PARSE = 3,
  LTLAB_ERR_NUMERIC = 4,
  LTLAB_ERR_STATE = 5,
  LTLAB_ERR_INTERNAL = 6
} ltlab_status;

typedef enum ltlab_format { LTLAB_FORMAT_TEXT = 0, LTLAB_FORMAT_CSV = 1 } ltlab_format;

typedef struct ltlab_config ltlab_config;
typedef struct ltlab_dataset ltlab_dataset;
typedef struct ltlab_model ltlab_model;
typedef struct ltlab_report ltlab_report;

typedef struct ltlab_synthetic_spec {
  uint32_t num_classes;
  uint32_t feature_dim;
  uint64_t head_count;
  double imbalance_factor;
  double class_separation;
  double noise_sigma;
  uint64_t seed;
} ltlab_synthetic_spec;

LTLAB_API const char* ltlab_version(void);
LTLAB_API const char* ltlab_last_error(void);
LTLAB_API const char* ltlab_status_string(ltlab_status status);
LTLAB_API void ltlab_string_free(char* s);

/* Experiment configuration (JSON document with nested sections). */
LTLAB_API ltlab_status ltlab_config_create(ltlab_config** out);
LTLAB_API ltlab_status ltlab_config_load(const char* path, ltlab_config** out);
LTLAB_API ltlab_status ltlab_config_parse(const char* json, ltlab_config** out);
/* Dotted key override, e.g. ("stage1.epochs", "5"). Unknown keys fail. */
LTLAB_API ltlab_status ltlab_config_set(ltlab_config* config, const char* key, const char* value);
LTLAB_API ltlab_status ltlab_config_to_json(const ltlab_config* config, char** out);
LTLAB_API ltlab_status ltlab_config_digest(const ltlab_config* config, char** out);
LTLAB_API void ltlab_config_destroy(ltlab_config* config);

/* Runs every configured method; writes artifacts under output_dir and
 * returns the manifest JSON (may be NULL if not wanted). */
LTLAB_API ltlab_status ltlab_run_experiment(const ltlab_config* config, char** manifest_json);

/* Datasets. */
LTLAB_API void ltlab_synthetic_spec_default(ltlab_synthetic_spec* spec);
LTLAB_API ltlab_status ltlab_dataset_generate(const ltlab_synthetic_spec* spec,
                                              ltlab_dataset** out);
LTLAB_API ltlab_status ltlab_dataset_load(const char* path, ltlab_dataset** out);
LTLAB_API ltlab_status ltlab_dataset_save(const ltlab_dataset* dataset, const char* path);
LTLAB_API ltlab_status ltlab_dataset_shape(const ltlab_dataset* dataset, size_t* rows,
                                           size_t* dim, size_t* classes);
/* Writes min(capacity, C) class counts. */
LTLAB_API ltlab_status ltlab_dataset_class_counts(const ltlab_dataset* dataset, uint64_t* counts,
                                                  size_t capacity);
LTLAB_API void ltlab_dataset_destroy(ltlab_dataset* dataset);

/* Checkpoints. */
LTLAB_API ltlab_status ltlab_model_load(const char* path, ltlab_model** out);
LTLAB_API ltlab_status ltlab_model_save(const ltlab_model* model, const char* path);
LTLAB_API const char* ltlab_model_method(const ltlab_model* model);
LTLAB_API size_t ltlab_model_num_classes(const ltlab_model* model);
/* labels must hold `rows` entries; scores (optional) rows * C entries. */
LTLAB_API ltlab_status ltlab_model_predict(const ltlab_model* model,
                                           const ltlab_dataset* dataset, int32_t* labels,
                                           double* scores, size_t rows);
LTLAB_API void ltlab_model_destroy(ltlab_model* model);

/* Evaluation reports. */
LTLAB_API ltlab_status ltlab_report_load(const char* path, ltlab_report** out);
LTLAB_API ltlab_status ltlab_report_metric(const ltlab_report* report, const char* name,
                                           double* value);
LTLAB_API ltlab_status ltlab_reports_render(const ltlab_report* const* reports, size_t count,
                                            ltlab_format format, char** out);
LTLAB_API ltlab_status ltlab_f1_delta(const ltlab_report* baseline, const ltlab_report* method,
                                      char** csv_out);
LTLAB_API void ltlab_report_destroy(ltlab_report* report);

/* Formula entry points. */
LTLAB_API ltlab_status ltlab_sampling_weights(const uint64_t* counts, size_t n, double q,
                                              double* out);
LTLAB_API ltlab_status ltlab_focal_loss(double p, double gamma, double* out);
LTLAB_API ltlab_status ltlab_cb_weight(uint64_t n, double beta, double* out);
LTLAB_API ltlab_status ltlab_lr_at(uint64_t step, uint64_t total_steps, uint64_t warmup_steps,
                                   double lr_init, double* out);

#ifdef __cplusplus
}
#endif

#endif /* LTLAB_LTLAB_H_ */
