// Copyright 2026 The fdkd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the fdkd library. Every call returns an fdkd_status; on
 * failure fdkd_last_error() holds a message for the calling thread. Strings
 * returned through char** belong to the caller and are released with
 * fdkd_string_free. Handles are opaque and released with their _free call;
 * passing NULL to a _free call is a no-op. */
#ifndef FDKD_FDKD_H_
#define FDKD_FDKD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FDKD_API __declspec(dllexport)
#else
#define FDKD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int fdkd_status;

enum {
  FDKD_OK = 0,
  FDKD_INVALID_ARGUMENT = 1,
  FDKD_CONFIG = 2,
  FDKD_IO = 3,
  FDKD_UNKNOWN_TOKEN = 10,
  FDKD_SEQUENCE_TOO_LONG = 11,
  FDKD_SHAPE_MISMATCH = 12,
  FDKD_EMPTY_OUTPUT = 13,
  FDKD_DEGENERATE_MODEL = 14,
  FDKD_BAD_CHECKPOINT = 15,
  FDKD_EMPTY_BATCH = 20,
  FDKD_NON_FINITE_LOSS = 21,
  FDKD_EMPTY_RANKING = 22,
  FDKD_AUTH_ERROR = 30,
  FDKD_TIMEOUT = 31,
  FDKD_RATE_LIMITED = 32,
  FDKD_MALFORMED_RESPONSE = 33,
  FDKD_UNBOUND_PLACEHOLDER = 34,
  FDKD_TRANSPORT = 35,
  FDKD_FIXTURE_MISS = 36,
  FDKD_UNPARSEABLE_VERDICT = 40,
  FDKD_LOGPROBS_UNAVAILABLE = 41,
  FDKD_INSUFFICIENT_DIVERSITY = 50,
  FDKD_NO_ELIGIBLE_PAIR = 51,
  FDKD_EMPTY_PREFERENCE_SET = 60,
  FDKD_MISSING_TEACHER_RANKINGS = 61,
  FDKD_WARM_START_MISMATCH = 62,
  FDKD_EMPTY_JUDGMENTS = 70,
  FDKD_ORDER_MISMATCH = 71,
  FDKD_PAIR_MISMATCH = 72,
  FDKD_DUPLICATE_SUBMISSION = 80,
  FDKD_UNKNOWN_TASK = 81,
  FDKD_INVALID_VERDICT = 82,
  FDKD_INTERNAL = 99
};

FDKD_API const char* fdkd_version(void);
/* "Ok", "Config", "MissingTeacherRankings", ... */
FDKD_API const char* fdkd_status_name(fdkd_status status);
/* Message of the last failed call on this thread; "" after a success. */
FDKD_API const char* fdkd_last_error(void);
FDKD_API void fdkd_string_free(char* s);

/* ---- run configuration ---- */

typedef struct fdkd_config fdkd_config;

/* Parses a JSON config document, applies "a.b=value" overrides in order and
 * validates the result. Unknown keys are FDKD_CONFIG. */
FDKD_API fdkd_status fdkd_config_create(const char* json, const char* const* overrides,
                                        size_t n_overrides, fdkd_config** out);
FDKD_API void fdkd_config_free(fdkd_config* config);
/* The resolved config with every default filled in. */
FDKD_API fdkd_status fdkd_config_to_json(const fdkd_config* config, char** out);
/* Output directory of the run ("" when unset). */
FDKD_API fdkd_status fdkd_config_output_dir(const fdkd_config* config, char** out);

/* ---- student models ---- */

typedef struct fdkd_model fdkd_model;

FDKD_API fdkd_status fdkd_model_load(const char* path, fdkd_model** out);
FDKD_API void fdkd_model_free(fdkd_model* model);
FDKD_API fdkd_status fdkd_model_hash(const fdkd_model* model, char** out);
/* Top hypothesis for one input; decode_json may be NULL for beam defaults. */
FDKD_API fdkd_status fdkd_model_generate(const fdkd_model* model, const char* input,
                                         const char* decode_json, char** out);
/* Sum of output-token and <eos> log probabilities given the input. */
FDKD_API fdkd_status fdkd_model_logprob(const fdkd_model* model, const char* input,
                                        const char* output, double* out);

/* ---- pipeline stages ---- */

/* Writes train.txt, val.txt, test.txt and oracle.json for the config's synth
 * task into out_dir. */
FDKD_API fdkd_status fdkd_synth_corpus(const fdkd_config* config, const char* out_dir);
/* Teacher outputs for every input; writes imitation JSONL. *refused may be NULL. */
FDKD_API fdkd_status fdkd_distill_data(const fdkd_config* config, const char* inputs_path,
                                       const char* out_path, size_t* examples, size_t* refused);
/* Full training schedule for the config's objective. Artifacts go to the
 * config's output directory; *report_json receives report.json. */
FDKD_API fdkd_status fdkd_train(const fdkd_config* config, char** report_json);
FDKD_API fdkd_status fdkd_generate_file(const fdkd_model* model, const char* inputs_path,
                                        const char* decode_json, const char* out_path);
/* One preference-collection round with the config's critic and sampling.
 * judgments_path may be NULL. *stats_json receives counts. */
FDKD_API fdkd_status fdkd_collect_prefs(const fdkd_config* config, const fdkd_model* model,
                                        const char* inputs_path, const char* out_path,
                                        const char* judgments_path, char** stats_json);

/* ---- evaluation ---- */

/* WTR of generations A against B with the config's critic. judgments_path and
 * pairs_path may be NULL. */
FDKD_API fdkd_status fdkd_eval_wtr(const fdkd_config* config, const char* gen_a,
                                   const char* gen_b, const char* report_path,
                                   const char* judgments_path, const char* pairs_path,
                                   char** report_json);
FDKD_API fdkd_status fdkd_judge_agreement(const char* human_export, const char* judgments,
                                          char** result_json);
/* human_export and pairs may be NULL (PB only). aspect is "humor" or
 * "consistency"; denominator is "all" or "human_shorter". */
FDKD_API fdkd_status fdkd_bias_audit(const char* judgments, const char* pairs,
                                     const char* human_export, const char* aspect,
                                     const char* denominator, char** result_json);

/* ---- human annotation ---- */

typedef struct fdkd_annot_server fdkd_annot_server;

/* config_json: {"pairs", "log", "host", "port", "seed", "static_dir"}. */
FDKD_API fdkd_status fdkd_annot_server_create(const char* config_json, fdkd_annot_server** out);
FDKD_API void fdkd_annot_server_free(fdkd_annot_server* server);
/* Binds the configured host and port; *port receives the bound port. */
FDKD_API fdkd_status fdkd_annot_server_bind(fdkd_annot_server* server, int* port);
/* Blocks until fdkd_annot_server_stop is called from another thread. */
FDKD_API fdkd_status fdkd_annot_server_serve(fdkd_annot_server* server);
FDKD_API fdkd_status fdkd_annot_server_stop(fdkd_annot_server* server);
FDKD_API fdkd_status fdkd_export_judgments(const char* pairs, const char* log, uint64_t seed,
                                           const char* out_path, size_t* rows);

#ifdef __cplusplus
}
#endif

#endif /* FDKD_FDKD_H_ */
