/*
 * Copyright 2026 The sysid Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SYSID_SYSID_H_
#define SYSID_SYSID_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SYSID_BUILDING_LIBRARY)
#define SYSID_API __attribute__((visibility("default")))
#else
#define SYSID_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sysid_status {
  SYSID_OK = 0,
  SYSID_ERR_DIMENSION = 1,
  SYSID_ERR_PARAMETER = 2,
  SYSID_ERR_CONFIG = 3,
  SYSID_ERR_DATA = 4,
  SYSID_ERR_PARSE = 5,
  SYSID_ERR_SCHEMA = 6,
  SYSID_ERR_IO = 7,
  SYSID_ERR_DEGENERATE = 8,
  SYSID_ERR_UNSUPPORTED = 9,
  SYSID_ERR_NUMERIC = 10,
  SYSID_ERR_INTERNAL = 11
} sysid_status;

typedef struct sysid_dataset sysid_dataset;
typedef struct sysid_model sysid_model;
typedef struct sysid_kernels sysid_kernels;
typedef struct sysid_grid sysid_grid;

typedef struct sysid_epoch {
  size_t epoch;
  double train_loss;
  double valid_loss; /* NaN without a validation set */
  double lr;
  double seconds;
} sysid_epoch;

typedef void (*sysid_epoch_fn)(const sysid_epoch* epoch, void* user);

/* Library version, "major.minor.patch". */
SYSID_API const char* sysid_version(void);
/* Message of the last failed call on this thread; empty if none. */
SYSID_API const char* sysid_last_error(void);
SYSID_API const char* sysid_status_name(sysid_status status);
/* Frees any char* returned through an out parameter. */
SYSID_API void sysid_string_free(char* s);
/* Deterministic child seed; used to give related datasets distinct streams. */
SYSID_API uint64_t sysid_derive_seed(uint64_t seed, uint64_t stream);

/* ---- datasets ---- */

/* Chen toy system records driven by held Gaussian input. */
SYSID_API sysid_status sysid_dataset_chen(size_t records, size_t length, double sigma_v, double sigma_w,
                                          uint64_t seed, size_t hold, sysid_dataset** out);
/* inputs/outputs are comma-separated column names; NULL selects u1.., y1... */
SYSID_API sysid_status sysid_dataset_load_csv(const char* path, const char* inputs, const char* outputs,
                                              sysid_dataset** out);
SYSID_API sysid_status sysid_dataset_save_csv(const sysid_dataset* dataset, const char* path);
SYSID_API size_t sysid_dataset_records(const sysid_dataset* dataset);
SYSID_API size_t sysid_dataset_inputs(const sysid_dataset* dataset);
SYSID_API size_t sysid_dataset_outputs(const sysid_dataset* dataset);
SYSID_API size_t sysid_dataset_samples(const sysid_dataset* dataset);
/* Per-channel mean and scale of a training set, as JSON. */
SYSID_API sysid_status sysid_dataset_normalization(const sysid_dataset* training, char** json_out);
SYSID_API void sysid_dataset_free(sysid_dataset* dataset);

/* ---- models ---- */

SYSID_API sysid_status sysid_model_create(const char* config_json, uint64_t seed, sysid_model** out);
/* Checkpoints carry the normalization constants, if any. */
SYSID_API sysid_status sysid_model_load(const char* path, sysid_model** out);
SYSID_API sysid_status sysid_model_save(const sysid_model* model, const char* path);
SYSID_API sysid_status sysid_model_config(const sysid_model* model, char** json_out);
SYSID_API sysid_status sysid_model_receptive_field(const sysid_model* model, size_t* out);
SYSID_API size_t sysid_model_parameter_count(const sysid_model* model);
/* Data passed to train/evaluate is mapped through these constants first.
   NULL clears them. */
SYSID_API sysid_status sysid_model_set_normalization(sysid_model* model, const char* json);
/* "null" when the model works in physical units. */
SYSID_API sysid_status sysid_model_normalization(const sysid_model* model, char** json_out);
SYSID_API void sysid_model_free(sysid_model* model);

/* ---- training ---- */

/* validation may be NULL. history_csv_out may be NULL; on divergence it still
   receives the partial history and SYSID_ERR_NUMERIC is returned. */
SYSID_API sysid_status sysid_train(sysid_model* model, const sysid_dataset* training,
                                   const sysid_dataset* validation, const char* train_config_json,
                                   sysid_epoch_fn on_epoch, void* user, char** history_csv_out);

/* ---- analysis ---- */

/* mode is "one-step" or "free-run". predictions_csv_out may be NULL; its
   columns are record, sample, yhat1.., y1... */
SYSID_API sysid_status sysid_evaluate(const sysid_model* model, const sysid_dataset* dataset, const char* mode,
                                      size_t skip, char** report_json_out, char** predictions_csv_out);
/* Magnitude spectrum of the prediction error per record and output. With
   use_band set only bins in [f_lo, f_hi] are kept. */
SYSID_API sysid_status sysid_error_spectrum(const sysid_model* model, const sysid_dataset* dataset,
                                            const char* mode, int use_band, double f_lo, double f_hi,
                                            char** csv_out);

SYSID_API sysid_status sysid_volterra_extract(const sysid_model* model, int degree, int expand_at_zero,
                                              sysid_kernels** out);
SYSID_API sysid_status sysid_volterra_oracle(const sysid_model* model, int degree, double amplitude,
                                             sysid_kernels** out);
/* order 0, 1 or 2 selects h0, h1 or h2. */
SYSID_API sysid_status sysid_kernels_csv(const sysid_kernels* kernels, int order, char** csv_out);
SYSID_API size_t sysid_kernels_memory(const sysid_kernels* kernels);
SYSID_API double sysid_kernels_max_magnitude(const sysid_kernels* kernels);
SYSID_API sysid_status sysid_kernels_max_difference(const sysid_kernels* a, const sysid_kernels* b, double* out);
SYSID_API void sysid_kernels_free(sysid_kernels* kernels);

/* ---- grid search ---- */

/* Number of runs (configs times repetitions) of a grid document. */
SYSID_API sysid_status sysid_grid_size(const char* grid_json, size_t* out);
/* journal_path may be NULL. With normalize set, both datasets are mapped
   through the training constants and RMSEs are reported in physical units. */
SYSID_API sysid_status sysid_grid_run(const char* grid_json, const sysid_dataset* training,
                                      const sysid_dataset* validation, size_t jobs, uint64_t seed,
                                      const char* journal_path, int normalize, sysid_grid** out);
SYSID_API sysid_status sysid_grid_csv(const sysid_grid* grid, char** csv_out);
/* metric is "one-step" or "free-run". */
SYSID_API sysid_status sysid_grid_best(const sysid_grid* grid, const char* metric, char** row_json_out);
SYSID_API sysid_status sysid_grid_boxplot(const sysid_grid* grid, const char* axis, const char* metric,
                                          char** csv_out);
SYSID_API void sysid_grid_free(sysid_grid* grid);

/* ---- files ---- */

SYSID_API sysid_status sysid_file_sha256(const char* path, char** hex_out);

#ifdef __cplusplus
}
#endif

#endif /* SYSID_SYSID_H_ */
