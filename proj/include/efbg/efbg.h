// Copyright 2026 The edgefbg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the edgefbg toolkit: synthetic FBG spectra, shape
 * reconstruction baselines, the 1D CNN, hyperparameter search, saliency
 * maps and evaluation. All objects are opaque handles released with their
 * matching *_free function. Functions return EFBG_OK or an error status;
 * efbg_last_error() describes the most recent failure on the calling thread.
 */

#ifndef EFBG_EFBG_H_
#define EFBG_EFBG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EFBG_API __declspec(dllexport)
#else
#define EFBG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum efbg_status {
  EFBG_OK = 0,
  EFBG_ERR_INVALID_INPUT = 1,
  EFBG_ERR_CONFIG = 2,
  EFBG_ERR_IO = 3,
  EFBG_ERR_DIVERGED = 4,
  EFBG_ERR_OUT_OF_RANGE = 5,
  EFBG_ERR_STATE = 6,
  EFBG_ERR_INSUFFICIENT_EXCITATION = 7,
  EFBG_ERR_CALIBRATION_DEGENERATE = 8,
  EFBG_ERR_BATCH_TOO_SMALL = 9,
  EFBG_ERR_SEARCH_FAILED = 10,
  EFBG_ERR_INTERNAL = 11
} efbg_status;

enum {
  EFBG_GRID_SIZE = 190,
  EFBG_SCAN_COUNT = 3,
  EFBG_FEATURE_SIZE = 570,
  EFBG_MARKER_COUNT = 20,
  EFBG_TARGET_SIZE = 60,
  EFBG_PLANE_COUNT = 5
};

typedef enum efbg_scenario { EFBG_RANDOM = 0, EFBG_TRAJECTORY = 1, EFBG_TEMPLATE = 2 } efbg_scenario;

typedef struct efbg_config efbg_config;
typedef struct efbg_dataset efbg_dataset;
typedef struct efbg_calibration efbg_calibration;
typedef struct efbg_model efbg_model;
typedef struct efbg_dictionary efbg_dictionary;

typedef struct efbg_summary {
  double median;
  double q1;
  double q3;
  double iqr;
  double mean;
  size_t count;
} efbg_summary;

/* Message of the last failed call on this thread; empty after success. */
EFBG_API const char* efbg_last_error(void);
EFBG_API const char* efbg_status_name(int status);
EFBG_API const char* efbg_version(void);
/* Releases strings returned through char** out-parameters. */
EFBG_API void efbg_string_free(char* s);

/* ---- configuration ---- */
EFBG_API efbg_status efbg_config_default(efbg_config** out);
EFBG_API efbg_status efbg_config_parse(const char* json_text, efbg_config** out);
EFBG_API efbg_status efbg_config_load(const char* path, efbg_config** out);
/* Fully resolved document. */
EFBG_API efbg_status efbg_config_json(const efbg_config* cfg, char** out);
/* 16 hex digits identifying the resolved document. */
EFBG_API efbg_status efbg_config_hash(const efbg_config* cfg, char** out);
EFBG_API void efbg_config_free(efbg_config* cfg);

/* ---- datasets ---- */
/* Template datasets ignore count (their size is fixed by the segment list). */
EFBG_API efbg_status efbg_dataset_generate(const efbg_config* cfg, efbg_scenario kind, size_t count,
                                           uint64_t seed, efbg_dataset** out);
EFBG_API efbg_status efbg_dataset_load(const char* path, efbg_dataset** out);
EFBG_API efbg_status efbg_dataset_save(const efbg_dataset* ds, const char* path);
EFBG_API efbg_status efbg_dataset_save_csv(const efbg_dataset* ds, const char* path);
/* Seeded shuffle split with the config's fractions; seed overrides the config's. */
EFBG_API efbg_status efbg_dataset_split(const efbg_dataset* ds, const efbg_config* cfg, uint64_t seed,
                                        efbg_dataset** train, efbg_dataset** val, efbg_dataset** test);
EFBG_API size_t efbg_dataset_size(const efbg_dataset* ds);
EFBG_API uint64_t efbg_dataset_seed(const efbg_dataset* ds);
EFBG_API efbg_scenario efbg_dataset_kind(const efbg_dataset* ds);
/* spectra: EFBG_FEATURE_SIZE floats (scan-major); shape_mm: EFBG_TARGET_SIZE floats. Either may be NULL. */
EFBG_API efbg_status efbg_dataset_sample(const efbg_dataset* ds, size_t index, float* spectra, float* shape_mm,
                                         uint32_t* group);
/* Wavelength grid of the dataset's layout, EFBG_GRID_SIZE doubles in nm. */
EFBG_API efbg_status efbg_dataset_grid(const efbg_dataset* ds, double* out);
EFBG_API void efbg_dataset_free(efbg_dataset* ds);

/* ---- baseline (BL) ---- */
EFBG_API efbg_status efbg_calibrate(const efbg_dataset* ds, efbg_calibration** out);
EFBG_API efbg_status efbg_calibration_load(const char* path, efbg_calibration** out);
EFBG_API efbg_status efbg_calibration_save(const efbg_calibration* calib, const char* path);
/* out: size(ds) * EFBG_TARGET_SIZE floats. */
EFBG_API efbg_status efbg_calibration_json(const efbg_calibration* calib, char** out);
EFBG_API efbg_status efbg_predict_bl(const efbg_calibration* calib, const efbg_dataset* ds, float* out);
EFBG_API void efbg_calibration_free(efbg_calibration* calib);

/* ---- dictionary ---- */
EFBG_API efbg_status efbg_dictionary_build(const efbg_dataset* ds, efbg_dictionary** out);
EFBG_API efbg_status efbg_dictionary_load(const char* path, efbg_dictionary** out);
EFBG_API efbg_status efbg_dictionary_save(const efbg_dictionary* dict, const char* path);
EFBG_API size_t efbg_dictionary_size(const efbg_dictionary* dict);
EFBG_API efbg_status efbg_predict_dict(const efbg_dictionary* dict, const efbg_dataset* ds, float* out);
EFBG_API void efbg_dictionary_free(efbg_dictionary* dict);

/* ---- network ---- */
typedef void (*efbg_epoch_callback)(size_t epoch, double train_loss, double val_loss, double val_rmse_mm,
                                    void* user);

/* Architecture, initialization and precision come from the config. */
EFBG_API efbg_status efbg_model_create(const efbg_config* cfg, efbg_model** out);
/* Trains for the config's epochs and keeps the best-validation weights. */
EFBG_API efbg_status efbg_model_train(efbg_model* model, const efbg_config* cfg, const efbg_dataset* train,
                                      const efbg_dataset* val, efbg_epoch_callback on_epoch, void* user);
EFBG_API efbg_status efbg_model_load(const char* path, efbg_model** out);
EFBG_API efbg_status efbg_model_save(const efbg_model* model, const char* path);
EFBG_API size_t efbg_model_parameter_count(const efbg_model* model);
EFBG_API double efbg_model_best_val_rmse(const efbg_model* model);
/* Config hash recorded at training time (empty for untrained models). */
EFBG_API const char* efbg_model_config_hash(const efbg_model* model);
EFBG_API efbg_status efbg_predict_dl(efbg_model* model, const efbg_dataset* ds, float* out);
EFBG_API void efbg_model_free(efbg_model* model);

/* ---- evaluation ---- */
/* pred: size(ds) * EFBG_TARGET_SIZE floats compared against the dataset's shapes. */
EFBG_API efbg_status efbg_error_summary(const float* pred, const efbg_dataset* ds, efbg_summary* tip,
                                        efbg_summary* rmse);
/* Per-sample tip errors, size(ds) doubles. */
EFBG_API efbg_status efbg_tip_errors(const float* pred, const efbg_dataset* ds, double* out);
/* Mean tip scatter over repeated poses (grouped by the sample group id). */
EFBG_API efbg_status efbg_precision(const float* pred, const efbg_dataset* ds, double* out);
EFBG_API efbg_status efbg_similarity_census(const efbg_dataset* test, const efbg_dataset* train,
                                            double rmse_thresh_mm, size_t count_thresh, double* out);
/* Plane-spacing ablation on `count` random shapes from the config's sampler.
 * medians, q1, q3 (each n_spacings doubles) and planes may be NULL. */
EFBG_API efbg_status efbg_ablation(const efbg_config* cfg, const double* spacings_mm, size_t n_spacings,
                                   size_t count, uint64_t seed, double* medians, double* q1, double* q3,
                                   size_t* planes);

/* ---- saliency ---- */
/* loss_map: EFBG_GRID_SIZE doubles. marker_map: EFBG_GRID_SIZE * EFBG_MARKER_COUNT doubles, element-major. */
EFBG_API efbg_status efbg_explain(efbg_model* model, const efbg_dataset* ds, size_t index, double beta,
                                  double step, double* loss_map, double* marker_map);
/* Mean magnitude near Bragg flanks over mean magnitude away from every peak. */
EFBG_API efbg_status efbg_bragg_contrast(const efbg_config* cfg, const double* magnitude, double* ratio);

/* ---- hyperparameter search ---- */
/* Successive halving over the config's search space. log_path (may be NULL)
 * receives one JSON line per trial; best_json receives the winning trial. */
EFBG_API efbg_status efbg_tune(const efbg_config* cfg, const efbg_dataset* train, const efbg_dataset* val,
                               const char* log_path, char** best_json);

#ifdef __cplusplus
}
#endif

#endif  // EFBG_EFBG_H_
