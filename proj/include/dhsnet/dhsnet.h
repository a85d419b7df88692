/* Copyright 2026 The DHSNet Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the DHSNet library: run configuration, the train / eval /
 * infer / gradcheck / bench commands, and model handles for embedding.
 *
 * Every function returns a dhs_status. On failure the message is available
 * from dhs_last_error() on the calling thread until the next failing call.
 * Handles are opaque; each *_new / *_load / *_build is paired with a *_free.
 * Tensors cross the boundary as row-major NCHW float buffers.
 */
#ifndef DHSNET_DHSNET_H_
#define DHSNET_DHSNET_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DHS_API __declspec(dllexport)
#else
#define DHS_API __attribute__((visibility("default")))
#endif

typedef enum dhs_status {
  DHS_OK = 0,
  DHS_ERR_USAGE = 1,        /* bad argument to the C API itself */
  DHS_ERR_CONFIG = 2,       /* invalid or mismatched configuration */
  DHS_ERR_DATA = 3,         /* unreadable or inconsistent input data */
  DHS_ERR_FORMAT = 4,       /* malformed checkpoint */
  DHS_ERR_SHAPE = 5,        /* tensor dimension mismatch */
  DHS_ERR_NUMERIC = 6,      /* non-finite value, undefined metric */
  DHS_ERR_CHECK_FAILED = 7, /* gradcheck ran and found a mismatch */
  DHS_ERR_INTERNAL = 8
} dhs_status;

typedef struct dhs_config dhs_config;
typedef struct dhs_model dhs_model;

DHS_API const char* dhs_version(void);
DHS_API const char* dhs_last_error(void);
DHS_API const char* dhs_status_name(dhs_status status);

/* Process exit code for a status: 0 success, 1 usage/config, 2 data/format,
 * 3 numeric, shape, check failure or internal. */
DHS_API int dhs_exit_code(dhs_status status);

/* ---- run configuration ---- */

DHS_API dhs_status dhs_config_new(dhs_config** out);
/* Parses a file of `key = value` lines; unknown keys are rejected. */
DHS_API dhs_status dhs_config_load(const char* path, dhs_config** out);
DHS_API dhs_status dhs_config_set(dhs_config* config, const char* key, const char* value);
/* Copies the resolved configuration text into buf (NUL-terminated, truncated
 * to capacity); *needed receives the full length including the NUL. */
DHS_API dhs_status dhs_config_text(const dhs_config* config, char* buf, size_t capacity, size_t* needed);
DHS_API void dhs_config_free(dhs_config* config);

/* ---- commands; progress goes to stdout, artifacts to output_dir ---- */

DHS_API dhs_status dhs_train(const dhs_config* config);
DHS_API dhs_status dhs_eval(const dhs_config* config);
DHS_API dhs_status dhs_infer(const dhs_config* config);
/* DHS_ERR_CHECK_FAILED when any operator or end-to-end check fails. */
DHS_API dhs_status dhs_gradcheck(const dhs_config* config);
DHS_API dhs_status dhs_bench(const dhs_config* config);
/* Dispatches on "train", "eval", "infer", "gradcheck" or "bench". */
DHS_API dhs_status dhs_run(const char* command, const dhs_config* config);

/* ---- model handles ---- */

/* Fresh model of the config's kind, network settings and seed. */
DHS_API dhs_status dhs_model_build(const dhs_config* config, dhs_model** out);
DHS_API dhs_status dhs_model_load(const char* path, dhs_model** out);
DHS_API dhs_status dhs_model_save(const dhs_model* model, const char* path);
DHS_API void dhs_model_free(dhs_model* model);

/* "unet" or "dhsnet"; valid while the handle lives. */
DHS_API const char* dhs_model_kind(const dhs_model* model);
DHS_API dhs_status dhs_model_param_count(const dhs_model* model, uint64_t* count);

/* Output dims for an input of [n, c, h, w]: seg_dims = [n, classes, h, w];
 * heat_dims = [n, heat_classes, h/R, w/R] and *has_heat = 1 for DHSNet,
 * zeros and *has_heat = 0 for UNet. */
DHS_API dhs_status dhs_model_output_dims(const dhs_model* model, const size_t input_dims[4], size_t seg_dims[4],
                                         size_t heat_dims[4], int* has_heat);

/* Forward pass. heat may be NULL; otherwise it must hold the heat_dims
 * element count (ignored for UNet). Capacities are element counts. */
DHS_API dhs_status dhs_model_forward(const dhs_model* model, const float* images, const size_t input_dims[4],
                                     float* seg, size_t seg_capacity, float* heat, size_t heat_capacity);

#ifdef __cplusplus
}
#endif

#endif /* DHSNET_DHSNET_H_ */
