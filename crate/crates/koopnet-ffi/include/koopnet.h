#ifndef KOOPNET_H
#define KOOPNET_H

/* Generated by cbindgen from the koopnet-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum KoopStatus {
  Ok = 0,
  NullPointer = 1,
  InvalidArgument = 2,
  IoError = 3,
  FormatError = 4,
  NumericError = 5,
  Panic = 6,
} KoopStatus;

/**
 * Opaque trained-model handle.
 */
typedef struct KoopModel {
  uint8_t _private[0];
} KoopModel;

/**
 * Opaque trajectory-dataset handle.
 */
typedef struct KoopDataset {
  uint8_t _private[0];
} KoopDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *koop_version(void);

/**
 * Message for the most recent error on this thread, or NULL. The caller
 * owns the returned string and must release it with `koop_string_free`.
 */
char *koop_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a koopnet function and not yet freed.
 */
void koop_string_free(char *s);

/**
 * Load a KPM1 checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
 */
enum KoopStatus koop_model_load(const char *path, struct KoopModel **out);

/**
 * Write the model to a KPM1 checkpoint.
 *
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum KoopStatus koop_model_save(const struct KoopModel *model, const char *path);

/**
 * Release a model handle.
 *
 * # Safety
 * `model` must come from this library and not be freed twice.
 */
void koop_model_free(struct KoopModel *model);

/**
 * State width n of the model.
 *
 * # Safety
 * `model` live handle, `out` valid pointer.
 */
enum KoopStatus koop_model_state_width(const struct KoopModel *model, uintptr_t *out);

/**
 * Latent rank r of the model.
 *
 * # Safety
 * `model` live handle, `out` valid pointer.
 */
enum KoopStatus koop_model_latent_rank(const struct KoopModel *model, uintptr_t *out);

/**
 * Encode one state (length n) into latent coordinates (length r).
 *
 * # Safety
 * Buffers must be valid for the stated lengths.
 */
enum KoopStatus koop_model_encode(const struct KoopModel *model,
                                  const double *state,
                                  uintptr_t state_len,
                                  double *latent,
                                  uintptr_t latent_len);

/**
 * Decode latent coordinates (length r) back to a state (length n).
 *
 * # Safety
 * Buffers must be valid for the stated lengths.
 */
enum KoopStatus koop_model_decode(const struct KoopModel *model,
                                  const double *latent,
                                  uintptr_t latent_len,
                                  double *state,
                                  uintptr_t state_len);

/**
 * Predict `steps` snapshots ahead from one initial state (both length n).
 * The latent state advances by repeated multiplication by the dynamics
 * matrix; nothing re-encodes between steps.
 *
 * # Safety
 * Buffers must be valid for the stated lengths.
 */
enum KoopStatus koop_model_predict(const struct KoopModel *model,
                                   const double *state,
                                   uintptr_t state_len,
                                   uintptr_t steps,
                                   double *out,
                                   uintptr_t out_len);

/**
 * Eigenvalues of the dynamics matrix and the transformed spectrum
 * -log|lambda| / dt, sorted ascending by the transformed value. All three
 * output buffers must hold r values.
 *
 * # Safety
 * Buffers must be valid for r values each.
 */
enum KoopStatus koop_model_spectrum(const struct KoopModel *model,
                                    double dt,
                                    double *out_re,
                                    double *out_im,
                                    double *out_transformed,
                                    uintptr_t out_len);

/**
 * Load a KPD1 dataset file.
 *
 * # Safety
 * `path` NUL-terminated, `out` valid.
 */
enum KoopStatus koop_dataset_load(const char *path, struct KoopDataset **out);

/**
 * Generate a dataset from configuration text (same `key = value` format as
 * the CLI config files).
 *
 * # Safety
 * `config_text` NUL-terminated, `out` valid.
 */
enum KoopStatus koop_dataset_generate(const char *config_text,
                                      uintptr_t threads,
                                      struct KoopDataset **out);

/**
 * Write a dataset to a KPD1 file.
 *
 * # Safety
 * `dataset` live handle, `path` NUL-terminated.
 */
enum KoopStatus koop_dataset_save(const struct KoopDataset *dataset, const char *path);

/**
 * Release a dataset handle.
 *
 * # Safety
 * `dataset` must come from this library and not be freed twice.
 */
void koop_dataset_free(struct KoopDataset *dataset);

/**
 * Basic dataset geometry: grid size, snapshots per trajectory, trajectory
 * count, snapshot spacing.
 *
 * # Safety
 * All pointers valid; `dataset` a live handle.
 */
enum KoopStatus koop_dataset_info(const struct KoopDataset *dataset,
                                  uintptr_t *out_n,
                                  uintptr_t *out_t_len,
                                  uintptr_t *out_count,
                                  double *out_dt);

/**
 * Copy the state of trajectory `traj` at snapshot `t` into `out` (length n).
 *
 * # Safety
 * `out` must hold n values.
 */
enum KoopStatus koop_dataset_state(const struct KoopDataset *dataset,
                                   uintptr_t traj,
                                   uintptr_t t,
                                   double *out,
                                   uintptr_t out_len);

/**
 * Train a model from configuration text on the given datasets; returns the
 * best-validation model.
 *
 * # Safety
 * Handles live; `config_text` NUL-terminated; `out` valid.
 */
enum KoopStatus koop_train(const char *config_text,
                           const struct KoopDataset *train_data,
                           const struct KoopDataset *val_data,
                           uintptr_t threads,
                           struct KoopModel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KOOPNET_H */
