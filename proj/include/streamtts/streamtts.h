/* Copyright 2026 The streamtts Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libstreamtts. Handles are opaque; every call that can fail
 * returns an stt_status and leaves a message in stt_last_error() (per
 * thread). Strings returned through char** are owned by the caller and must
 * be released with stt_string_free.
 */
#ifndef STREAMTTS_STREAMTTS_H_
#define STREAMTTS_STREAMTTS_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define STT_API __attribute__((visibility("default")))
#else
#define STT_API
#endif

typedef enum stt_status {
  STT_OK = 0,
  STT_INVALID_ARGUMENT = 1,
  STT_INVALID_CONFIG = 2,
  STT_IO = 3,
  STT_PARSE = 4,
  STT_STATE = 5,   /* call not valid in the handle's current state */
  STT_BACKEND = 6, /* synthesis backend failed mid-stream */
  STT_EMPTY = 7,   /* empty reference, scenario or report set */
  STT_INTERNAL = 8
} stt_status;

typedef struct stt_config stt_config;
typedef struct stt_stream stt_stream;

STT_API const char* stt_version(void);
STT_API const char* stt_status_name(stt_status s);
/* Message for the last failing call on this thread; "" if none. */
STT_API const char* stt_last_error(void);
STT_API void stt_string_free(char* s);

/* ─── Configuration ─────────────────────────────────────────────────────── */

STT_API stt_status stt_config_create(stt_config** out);
STT_API void stt_config_destroy(stt_config* cfg);
/* Keys are the config-file keys (k, f, p_full, r_s, seed, ...). */
STT_API stt_status stt_config_set(stt_config* cfg, const char* key, const char* value);
STT_API stt_status stt_config_load_file(stt_config* cfg, const char* path);
/* Applies STREAMTTS_SEED if set. */
STT_API stt_status stt_config_apply_env(stt_config* cfg);
/* *report receives {"violations": [...], "warnings": [...]}. Returns
 * STT_INVALID_CONFIG when there is at least one violation. */
STT_API stt_status stt_config_validate(const stt_config* cfg, char** report);
STT_API stt_status stt_config_to_json(const stt_config* cfg, char** out);

/* ─── Training data ─────────────────────────────────────────────────────── */

/* Loads and validates the corpus, drops blocklisted transcripts (path may be
 * NULL), writes training examples as JSONL to out_path and a summary next to
 * it. *summary (may be NULL) receives the summary JSON. */
STT_API stt_status stt_prepare(const stt_config* cfg, const char* corpus_path, const char* out_path,
                               const char* blocklist_path, int epochs, char** summary);
STT_API stt_status stt_corpus_stats(const stt_config* cfg, const char* corpus_path, char** stats);

/* ─── Streaming ─────────────────────────────────────────────────────────── */

/* vocab_path may be NULL, in which case words are tokenized by hashing. */
STT_API stt_status stt_stream_create(const stt_config* cfg, const char* reference_path, const char* vocab_path,
                                     stt_stream** out);
STT_API void stt_stream_destroy(stt_stream* s);

/* Whitespace-separated words. arrival_ns < 0 means "now"; otherwise the
 * stream's clock waits until that time before the words are accepted. */
STT_API stt_status stt_stream_push_text(stt_stream* s, const char* text, int64_t arrival_ns);
STT_API stt_status stt_stream_finish(stt_stream* s);

typedef void (*stt_pcm_callback)(const int16_t* samples, size_t count, int sample_rate_hz, void* user);
/* Called for every rendered audio group, in order. */
STT_API stt_status stt_stream_set_pcm_callback(stt_stream* s, stt_pcm_callback cb, void* user);

/* Writes whatever audio has been produced, also after a backend failure. */
STT_API stt_status stt_stream_write_wav(const stt_stream* s, const char* path);
/* Session summary plus status, failure message, word and sample counts. */
STT_API stt_status stt_stream_summary_json(const stt_stream* s, char** out);
/* Run report; only after a successful stt_stream_finish. */
STT_API stt_status stt_stream_report_json(const stt_stream* s, char** out);
/* Timing events as JSONL {"session", "event", "t"?, "ns"}. */
STT_API stt_status stt_stream_events_jsonl(const stt_stream* s, char** out);

/* ─── Benchmarks ────────────────────────────────────────────────────────── */

/* format: "json" or "csv". Returns STT_EMPTY for an empty scenario and
 * STT_BACKEND when no utterance succeeded; the report is written either way
 * once the scenario is loaded. */
STT_API stt_status stt_bench(const stt_config* cfg, const char* scenario_path, const char* vocab_path, int trials,
                             int warmups, int jobs, const char* out_path, const char* format, char** summary);

/* Runs every (k, f) with k_lo <= k <= k_hi, f_lo <= f <= f_hi and f <= k.
 * Finished cells are journaled to <out_path>.cells.jsonl.partial; with
 * resume != 0 the journal's successful cells are reused. The journal is
 * removed once the grid is written. */
STT_API stt_status stt_sweep(const stt_config* cfg, const char* scenario_path, const char* vocab_path, int k_lo,
                             int k_hi, int f_lo, int f_hi, const char* out_path, const char* format, int resume,
                             char** summary);

#ifdef __cplusplus
}
#endif

#endif /* STREAMTTS_STREAMTTS_H_ */
