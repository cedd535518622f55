/* SPDX-License-Identifier: Apache-2.0 */
#ifndef LMIMO_LMIMO_H
#define LMIMO_LMIMO_H

#include <stddef.h>
#include <stdint.h>

#if defined(LMIMO_BUILDING_LIBRARY)
#define LMIMO_API __attribute__((visibility("default")))
#else
#define LMIMO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lmimo_status {
    LMIMO_OK = 0,
    LMIMO_ERR_ARGUMENT = 1,   /* null handle, bad length, out-of-range value */
    LMIMO_ERR_VALIDATION = 2, /* config rejected; see lmimo_last_error() */
    LMIMO_ERR_RUNTIME = 3,    /* failure while running */
    LMIMO_ERR_IO = 4,         /* file could not be read or written */
    LMIMO_ERR_CONDITION = 5   /* recovery condition violated */
} lmimo_status;

typedef struct lmimo_config lmimo_config;
typedef struct lmimo_run_result lmimo_run_result;

LMIMO_API const char* lmimo_version(void);

/* Message of the last failing call on this thread. Validation failures list
 * one diagnostic per line. Never NULL. */
LMIMO_API const char* lmimo_last_error(void);

/* Strings returned through char** are owned by the caller. */
LMIMO_API void lmimo_string_free(char* s);

LMIMO_API size_t lmimo_recipe_count(void);
/* NULL when index is out of range. The pointer stays valid for the process. */
LMIMO_API const char* lmimo_recipe_name(size_t index);

LMIMO_API lmimo_status lmimo_config_from_recipe(const char* name, lmimo_config** out);
/* A recipe name or a path to a JSON config file. */
LMIMO_API lmimo_status lmimo_config_load(const char* recipe_or_path, lmimo_config** out);
LMIMO_API lmimo_status lmimo_config_from_json(const char* json_text, lmimo_config** out);
LMIMO_API void lmimo_config_free(lmimo_config* cfg);

LMIMO_API lmimo_status lmimo_config_set_seed(lmimo_config* cfg, uint64_t seed);
LMIMO_API lmimo_status lmimo_config_set_trials(lmimo_config* cfg, int trials);
/* 0 selects the number of hardware threads. */
LMIMO_API lmimo_status lmimo_config_set_jobs(lmimo_config* cfg, int jobs);
LMIMO_API lmimo_status lmimo_config_set_output(lmimo_config* cfg, const char* dir);
LMIMO_API lmimo_status lmimo_config_set_raw_rows(lmimo_config* cfg, int enabled);
/* Deep-merges a JSON object into the config document. */
LMIMO_API lmimo_status lmimo_config_merge_json(lmimo_config* cfg, const char* json_patch);

LMIMO_API lmimo_status lmimo_config_validate(const lmimo_config* cfg);
/* Resolved document (recipe defaults filled in), pretty-printed. */
LMIMO_API lmimo_status lmimo_config_resolved_json(const lmimo_config* cfg, char** out);
/* 16 hex digits plus NUL. */
LMIMO_API lmimo_status lmimo_config_hash(const lmimo_config* cfg, char out[17]);
LMIMO_API lmimo_status lmimo_config_output(const lmimo_config* cfg, char** out);

LMIMO_API lmimo_status lmimo_run(const lmimo_config* cfg, lmimo_run_result** out);
LMIMO_API void lmimo_run_free(lmimo_run_result* res);
LMIMO_API lmimo_status lmimo_run_write(const lmimo_run_result* res, const char* dir);
LMIMO_API size_t lmimo_run_row_count(const lmimo_run_result* res);
LMIMO_API size_t lmimo_run_warning_count(const lmimo_run_result* res);
LMIMO_API lmimo_status lmimo_run_metrics_csv(const lmimo_run_result* res, char** out);
LMIMO_API lmimo_status lmimo_run_manifest(const lmimo_run_result* res, char** out);

/* Recovers a folded capture (`index,I,Q` CSV plus JSON sidecar) and writes
 * recovered.csv and manifest.json into out_dir. */
LMIMO_API lmimo_status lmimo_replay(const char* csv_path, const char* sidecar_path, const char* out_dir);

/* Centered modulo of n samples into [-lambda, lambda), quantized to `bits`
 * when bits > 0. `out` may alias `x`. */
LMIMO_API lmimo_status lmimo_fold(const double* x, size_t n, double lambda, int bits, double* out);

/* Unfolds one real branch of n folded samples without anchoring. order <= 0
 * picks the order from the recovery rule; bits > 0 marks the samples as
 * quantized. Writes n samples to out and the applied order to order_out
 * (may be NULL). */
LMIMO_API lmimo_status lmimo_recover_branch(const double* folded, size_t n, double lambda, double beta,
                                            double sample_interval, double bandwidth, int order, int bits,
                                            double* out, int* order_out);

#ifdef __cplusplus
}
#endif

#endif
