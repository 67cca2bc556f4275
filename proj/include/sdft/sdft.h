/* Copyright (C) 2026 The sdft Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef SDFT_SDFT_H_
#define SDFT_SDFT_H_

/* C interface to libsdft.
 *
 * Every fallible call returns an sdft_status. On failure the message is
 * available from sdft_last_error() on the same thread until the next call.
 * Handles are opaque; release them with the matching *_free function.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SDFT_API __declspec(dllexport)
#else
#define SDFT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdft_status {
    SDFT_OK = 0,
    SDFT_ERR_INVALID_ARGUMENT = 1,
    SDFT_ERR_IO = 2,
    SDFT_ERR_BAD_MAGIC = 3,
    SDFT_ERR_VERSION_MISMATCH = 4,
    SDFT_ERR_TRUNCATED = 5,
    SDFT_ERR_NON_FINITE = 6,
    SDFT_ERR_DIMENSION = 7,
    SDFT_ERR_DEGENERATE_VECTOR = 8,
    SDFT_ERR_EMPTY_GROUP = 9,
    SDFT_ERR_CANNOT_SAMPLE_NEGATIVES = 10,
    SDFT_ERR_MISSING_EMBEDDING = 11,
    SDFT_ERR_SOFT_LABEL = 12,
    SDFT_ERR_DIVERGED = 13,
    SDFT_ERR_COLLAPSED_EMBEDDING = 14,
    SDFT_ERR_PARSE = 15,
    SDFT_ERR_EMPTY_INPUT = 16,
    SDFT_ERR_INTERNAL = 99
} sdft_status;

SDFT_API const char* sdft_version(void);
SDFT_API const char* sdft_status_name(sdft_status status);
/* Message of the last failed call on this thread, "" if none. */
SDFT_API const char* sdft_last_error(void);
/* 1 for file, format and parse failures, 0 otherwise. */
SDFT_API int sdft_status_is_io(sdft_status status);

/* ------------------------------------------------------------------ */
/* Embedding matrices                                                  */

typedef struct sdft_matrix sdft_matrix;

SDFT_API sdft_status sdft_matrix_create(const char* model_id, size_t dim, sdft_matrix** out);
SDFT_API sdft_status sdft_matrix_load(const char* path, sdft_matrix** out);
SDFT_API sdft_status sdft_matrix_save(const sdft_matrix* m, const char* path);
SDFT_API void sdft_matrix_free(sdft_matrix* m);
SDFT_API sdft_status sdft_matrix_add_row(sdft_matrix* m, const char* text_id, const float* values,
                                         size_t len);
SDFT_API size_t sdft_matrix_dim(const sdft_matrix* m);
SDFT_API size_t sdft_matrix_rows(const sdft_matrix* m);
/* Pointer valid until the matrix is modified or freed. */
SDFT_API const char* sdft_matrix_row_id(const sdft_matrix* m, size_t index);
/* Copies the row for `text_id` into `out` (capacity `len` >= dim). */
SDFT_API sdft_status sdft_matrix_row(const sdft_matrix* m, const char* text_id, float* out,
                                     size_t len);

/* ------------------------------------------------------------------ */
/* Scalar operations                                                   */

SDFT_API sdft_status sdft_cosine(const float* u, const float* v, size_t len, double* out);
SDFT_API sdft_status sdft_soft1(const double* scores, size_t k, int hard_label, double* out);
SDFT_API sdft_status sdft_soft2(const double* scores, size_t k, double* out);
SDFT_API sdft_status sdft_soft3(const double* scores, size_t k, int hard_label, double* out);
/* Symmetric KL of two strictly positive mass vectors of equal length. */
SDFT_API sdft_status sdft_symmetric_kl(const double* p, const double* q, size_t bins, double* out);
/* AUPRC of n (score, label) samples; labels are 0/1. */
SDFT_API sdft_status sdft_auprc(const double* scores, const int* labels, size_t n, double* out);

/* ------------------------------------------------------------------ */
/* Stages                                                              */

typedef struct sdft_world {
    size_t groups;
    size_t train;
    size_t heldout;
    size_t dim;
    size_t experts;
    double question_jitter;
    double passage_jitter;
    double expert_noise;
    double base_noise;
    double base_anisotropy;
    uint64_t seed;
} sdft_world;

typedef struct sdft_train_config {
    double lr;
    size_t batch;
    size_t epochs;
    uint64_t seed;
    const char* target;    /* hard | soft1 | soft2 | soft3 */
    const char* optimizer; /* adam | sgd */
    int normalize_output;
    size_t out_dim;        /* 0 keeps the base dimension */
    double init_noise;
} sdft_train_config;

typedef struct sdft_pair_counts {
    uint64_t direct;
    uint64_t concat_left;
    uint64_t concat_right;
    uint64_t negative;
    uint64_t total;
} sdft_pair_counts;

typedef struct sdft_train_summary {
    double initial_loss;
    double final_loss;
    uint64_t steps;
} sdft_train_summary;

SDFT_API void sdft_world_defaults(sdft_world* world);
SDFT_API void sdft_train_config_defaults(sdft_train_config* config);

SDFT_API sdft_status sdft_synth(const sdft_world* world, const char* out_dir);
/* `collection_out` may be NULL to skip writing the augmented collection. */
SDFT_API sdft_status sdft_pairgen(const char* collection, const char* split, uint64_t seed,
                                  const char* out, const char* collection_out,
                                  sdft_pair_counts* counts);
/* `active_sets_out` may be NULL. */
SDFT_API sdft_status sdft_label(const char* pairs, const char* const* experts, size_t n_experts,
                                const char* out, const char* active_sets_out);
SDFT_API sdft_status sdft_train(const char* base, const char* labeled,
                                const sdft_train_config* config, const char* out,
                                sdft_train_summary* summary);
/* Held-out evaluation of `base`, optionally through `adapter` (may be NULL).
 * Writes metrics.csv, pr_curve_<model>.csv, heldout_qrels.trec and
 * heldout_run_<model>.trec under out_dir. */
SDFT_API sdft_status sdft_eval_heldout(const char* base, const char* adapter, const char* split,
                                       const char* model_name, size_t k, const char* out_dir);
/* Retrieval metrics for n runs against one qrels file (TREC or JSONL),
 * written to out_dir/metrics.csv. */
SDFT_API sdft_status sdft_eval_retrieval(const char* qrels, const char* const* run_paths,
                                         const char* const* model_names, size_t n,
                                         const char* dataset, size_t k, const char* out_dir);
/* Mean/std/win-rate summary of `metric` over every metrics CSV given. */
SDFT_API sdft_status sdft_aggregate(const char* const* metrics_csv, size_t n, const char* metric,
                                    const char* out_csv);
/* Similarity-distribution KL between models over the collection's texts.
 * adapters[i] may be NULL for the raw base embeddings. */
SDFT_API sdft_status sdft_eval_dist(const char* collection, const char* base,
                                    const char* const* adapters, const char* const* model_names,
                                    size_t n_models, size_t pairs, uint64_t seed, size_t bins,
                                    const char* out_dir);

typedef struct sdft_pipeline_config {
    sdft_world world;
    /* When collection is NULL a synthetic world is generated into out_dir. */
    const char* collection;
    const char* split;
    const char* base;
    const char* const* experts;
    size_t n_experts;
    sdft_train_config train;
    /* Comma-separated subset of hard,soft1,soft2,soft3; NULL means all. */
    const char* targets;
    size_t k;
    size_t bins;
    size_t dist_pairs;
    uint64_t seed;
    const char* out_dir;
} sdft_pipeline_config;

SDFT_API void sdft_pipeline_config_defaults(sdft_pipeline_config* config);
/* Runs every stage. Held-out AUPRC per model is returned through
 * sdft_pipeline_auprc after a successful run on the same thread. */
SDFT_API sdft_status sdft_pipeline(const sdft_pipeline_config* config);
SDFT_API sdft_status sdft_pipeline_auprc(const char* model, double* out);

#ifdef __cplusplus
}
#endif

#endif /* SDFT_SDFT_H_ */
