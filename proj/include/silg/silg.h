// Copyright 2026 The silg Authors.
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

#ifndef SILG_SILG_H_
#define SILG_SILG_H_

/* C interface to libsilg. Every call returns a status; on failure the
 * message is available from silg_last_error() on the same thread until the
 * next failing call. Strings returned through `char**` are owned by the
 * caller and released with silg_free(). Overrides are passed as a JSON object
 * of string values, or NULL for none. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define SILG_API __attribute__((visibility("default")))
#else
#define SILG_API
#endif

typedef enum silg_status {
  SILG_OK = 0,
  SILG_INVALID_ARGUMENT = 1,
  SILG_CONTRACT_VIOLATION = 2,
  SILG_BAD_STATE = 3,
  SILG_NOT_FOUND = 4,
  SILG_IO = 5,
  SILG_PARSE = 6,
  SILG_MISMATCH = 7,
  SILG_NUMERICAL = 8,
  SILG_INTERNAL = 9
} silg_status;

SILG_API const char* silg_version(void);
SILG_API const char* silg_status_name(silg_status status);
SILG_API const char* silg_last_error(void);
SILG_API void silg_free(char* text);

/* JSON array of registered environment ids. */
SILG_API silg_status silg_env_list(char** out_json);

/* ---- Environments ---- */

typedef struct silg_env silg_env;

/* split: "train", "val" or "test". */
SILG_API silg_status silg_env_create(const char* env_id, const char* split, uint64_t seed,
                                     const char* overrides_json, silg_env** out);
SILG_API void silg_env_destroy(silg_env* env);
/* Resets with the construction seed, then seed+1, ... on later calls. */
SILG_API silg_status silg_env_reset(silg_env* env);
SILG_API silg_status silg_env_reset_seed(silg_env* env, uint64_t seed);
/* Any of reward, done, win may be NULL. */
SILG_API silg_status silg_env_step(silg_env* env, int action, double* reward, int* done, int* win);
SILG_API silg_status silg_env_num_actions(const silg_env* env, int* out);
SILG_API silg_status silg_env_steps(const silg_env* env, int* out);
/* Observation in the session protocol's obs layout. */
SILG_API silg_status silg_env_observation_json(const silg_env* env, char** out_json);
/* 16 hex digits. */
SILG_API silg_status silg_env_digest(const silg_env* env, char** out_hex);
SILG_API silg_status silg_env_render(const silg_env* env, char** out_text);

/* ---- Play, trajectories, benchmark ---- */

/* Interactive console episode on stdin/stdout. The trajectory is written to
 * trajectory_path when it is not NULL. */
SILG_API silg_status silg_play_console(const char* env_id, const char* split, uint64_t seed,
                                       const char* overrides_json, const char* trajectory_path, char** out_outcome);
/* Replays one trajectory file; report JSON {ok, steps, win, first_mismatch, detail}. */
SILG_API silg_status silg_replay_file(const char* path, char** out_report_json);
/* Replays every file; JSON {files, clean, win_rate, mean_steps, reports: [...]}. */
SILG_API silg_status silg_replay_files(const char* const* paths, int count, char** out_summary_json);
/* JSON {env, frames, trials: [...], p50}. frames must be at least 10000. */
SILG_API silg_status silg_bench(const char* env_id, int64_t frames, int trials, uint64_t seed,
                                const char* overrides_json, char** out_json);

/* ---- Training and evaluation ---- */

/* Called with each metric record as a JSON object. */
typedef void (*silg_metric_fn)(const char* record_json, void* user);

/* config_text holds key=value lines. Result JSON {frames, best_val_win_rate,
 * frames_to_target}. */
SILG_API silg_status silg_train(const char* config_text, silg_metric_fn on_metric, void* user, char** out_result_json);
/* Greedy evaluation of a checkpoint; JSON {episodes, win_rate, mean_steps, mean_return}. */
SILG_API silg_status silg_evaluate(const char* checkpoint_path, const char* env_id, const char* split, int episodes,
                                   const char* overrides_json, char** out_json);

/* ---- Session service ---- */

typedef struct silg_server silg_server;

/* port 0 binds an ephemeral port, reported through out_port. */
SILG_API silg_status silg_server_start(const char* host, int port, int idle_timeout_s, int threads,
                                       silg_server** out, int* out_port);
/* Blocks until silg_server_stop() is called from another thread. */
SILG_API silg_status silg_server_wait(silg_server* server);
SILG_API void silg_server_stop(silg_server* server);
SILG_API void silg_server_destroy(silg_server* server);

/* One in-process session: feeds a client message, returns a JSON array of replies. */
typedef struct silg_session silg_session;
SILG_API silg_status silg_session_create(silg_session** out);
SILG_API silg_status silg_session_handle(silg_session* session, const char* message_json, char** out_replies_json);
SILG_API void silg_session_destroy(silg_session* session);

/* ---- Navigation graph tools ---- */

/* map_json: {height, width, classes}. frequency_json: per-class counts, or
 * NULL to use the map's own class counts. Returns the downsampled map. */
SILG_API silg_status silg_downsample(const char* map_json, int patch, double alpha, const char* frequency_json,
                                     char** out_map_json);
/* Archive of the default navigation graph. */
SILG_API silg_status silg_export_graph(char** out_archive_json);

#ifdef __cplusplus
}
#endif

#endif /* SILG_SILG_H_ */
