// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/streamtts.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "json.hpp"
#include "streamtts/corpus.hpp"
#include "streamtts/io.hpp"
#include "streamtts/pipeline.hpp"
#include "streamtts/trainprep.hpp"

using nlohmann::json;
namespace st = streamtts;

struct stt_config {
  st::StreamConfig cfg;
};

struct stt_stream {
  st::StreamConfig cfg;
  std::unique_ptr<st::Tokenizer> tokenizer;
  std::unique_ptr<st::SynthesisBackend> backend;
  std::unique_ptr<st::Clock> clock;
  std::unique_ptr<st::StreamPipeline> pipeline;
  stt_pcm_callback pcm = nullptr;
  void* pcm_user = nullptr;
};

namespace {

thread_local std::string g_last_error;

stt_status status_for(st::ErrorCode code) {
  using st::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::IncompatibleRates:
      return STT_INVALID_CONFIG;
    case ErrorCode::Io:
      return STT_IO;
    case ErrorCode::Parse:
    case ErrorCode::TokenizationFailure:
      return STT_PARSE;
    case ErrorCode::BackendFailure:
      return STT_BACKEND;
    case ErrorCode::EmptyReference:
    case ErrorCode::NoAlignedWords:
    case ErrorCode::ZeroAudioDuration:
      return STT_EMPTY;
    case ErrorCode::SessionNotActive:
    case ErrorCode::ChunkIndexMismatch:
    case ErrorCode::FinalizeWhileChunksPending:
    case ErrorCode::PushAfterFinalize:
    case ErrorCode::OutOfOrderChunk:
    case ErrorCode::MissingEvent:
      return STT_STATE;
    default:
      return STT_INVALID_ARGUMENT;
  }
}

stt_status fail(stt_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

// Runs fn, translating exceptions into a status and the thread's last error.
template <class F>
stt_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const st::Error& e) {
    return fail(status_for(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(STT_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(STT_INTERNAL, e.what());
  }
}

void give(char** out, const std::string& s) {
  if (!out) return;
  *out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!*out) throw std::bad_alloc();
  std::memcpy(*out, s.c_str(), s.size() + 1);
}

std::unique_ptr<st::Tokenizer> make_tokenizer(const st::StreamConfig& cfg, const char* vocab_path) {
  if (vocab_path && *vocab_path)
    return std::make_unique<st::VocabTokenizer>(st::load_vocab_tokenizer(vocab_path, cfg));
  return std::make_unique<st::HashTokenizer>(cfg);
}

std::optional<st::ReportFormat> parse_format(const char* format) {
  const std::string f = format ? format : "json";
  if (f == "json") return st::ReportFormat::Json;
  if (f == "csv") return st::ReportFormat::Csv;
  return std::nullopt;
}

}  // namespace

extern "C" {

const char* stt_version(void) { return "0.1.0"; }

const char* stt_status_name(stt_status s) {
  switch (s) {
    case STT_OK: return "ok";
    case STT_INVALID_ARGUMENT: return "invalid_argument";
    case STT_INVALID_CONFIG: return "invalid_config";
    case STT_IO: return "io";
    case STT_PARSE: return "parse";
    case STT_STATE: return "state";
    case STT_BACKEND: return "backend";
    case STT_EMPTY: return "empty";
    case STT_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* stt_last_error(void) { return g_last_error.c_str(); }

void stt_string_free(char* s) { std::free(s); }

// ─── Configuration ───────────────────────────────────────────────────────────

stt_status stt_config_create(stt_config** out) {
  if (!out) return fail(STT_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = new stt_config{};
    return STT_OK;
  });
}

void stt_config_destroy(stt_config* cfg) { delete cfg; }

stt_status stt_config_set(stt_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    st::set_config_value(cfg->cfg, key, value);
    return STT_OK;
  });
}

stt_status stt_config_load_file(stt_config* cfg, const char* path) {
  if (!cfg || !path) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    st::load_config_file(cfg->cfg, path);
    return STT_OK;
  });
}

stt_status stt_config_apply_env(stt_config* cfg) {
  if (!cfg) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    st::apply_env_overrides(cfg->cfg);
    return STT_OK;
  });
}

stt_status stt_config_validate(const stt_config* cfg, char** report) {
  if (!cfg) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto issues = st::validate_config(cfg->cfg);
    json j{{"violations", json::array()}, {"warnings", st::config_warnings(cfg->cfg)}};
    std::string msg;
    for (const auto& i : issues) {
      j["violations"].push_back({{"code", std::string(st::to_string(i.code))}, {"message", i.message}});
      msg += (msg.empty() ? "" : "; ") + i.message;
    }
    give(report, j.dump(2) + "\n");
    return issues.empty() ? STT_OK : fail(STT_INVALID_CONFIG, msg);
  });
}

stt_status stt_config_to_json(const stt_config* cfg, char** out) {
  if (!cfg || !out) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    give(out, json(st::config_snapshot(cfg->cfg)).dump(2) + "\n");
    return STT_OK;
  });
}

// ─── Training data ───────────────────────────────────────────────────────────

stt_status stt_prepare(const stt_config* cfg, const char* corpus_path, const char* out_path,
                       const char* blocklist_path, int epochs, char** summary) {
  if (!cfg || !corpus_path || !out_path) return fail(STT_INVALID_ARGUMENT, "null argument");
  if (epochs < 1) return fail(STT_INVALID_ARGUMENT, "epochs must be >= 1");
  return guarded([&] {
    st::require_valid(cfg->cfg);
    auto loaded = st::load_corpus(corpus_path, cfg->cfg);
    st::Corpus corpus = std::move(loaded.accepted);
    std::size_t filtered = 0;
    if (blocklist_path && *blocklist_path) {
      auto fr = st::filter_eval_overlap(corpus, st::load_blocklist(blocklist_path));
      corpus = std::move(fr.corpus);
      filtered = fr.removed;
    }
    const auto ps = st::prepare_corpus(corpus, cfg->cfg, out_path, epochs);

    json j;
    j["corpus"] = corpus_path;
    j["output"] = out_path;
    j["accepted"] = corpus.records.size() + filtered;
    j["rejected"] = loaded.rejected.size();
    j["rejections"] = json::array();
    for (const auto& r : loaded.rejected)
      j["rejections"].push_back({{"line", r.line}, {"reason", std::string(st::to_string(r.reason))}, {"detail", r.detail}});
    j["filtered_eval_overlap"] = filtered;
    j["prepare"] = json::parse(st::summary_to_json(ps));
    give(summary, j.dump(2) + "\n");
    return STT_OK;
  });
}

stt_status stt_corpus_stats(const stt_config* cfg, const char* corpus_path, char** stats) {
  if (!cfg || !corpus_path || !stats) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto loaded = st::load_corpus(corpus_path, cfg->cfg);
    json j = json::parse(st::stats_to_json(st::corpus_stats(loaded.accepted)));
    j["rejected"] = loaded.rejected.size();
    give(stats, j.dump(2) + "\n");
    return STT_OK;
  });
}

// ─── Streaming ───────────────────────────────────────────────────────────────

stt_status stt_stream_create(const stt_config* cfg, const char* reference_path, const char* vocab_path,
                             stt_stream** out) {
  if (!cfg || !reference_path || !out) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    st::require_valid(cfg->cfg);
    auto s = std::make_unique<stt_stream>();
    s->cfg = cfg->cfg;
    s->tokenizer = make_tokenizer(s->cfg, vocab_path);
    s->backend = st::make_backend(s->cfg);
    s->clock = st::make_clock(s->cfg);
    s->pipeline = std::make_unique<st::StreamPipeline>("stream", s->cfg, st::load_reference(reference_path),
                                                       *s->tokenizer, *s->backend, *s->clock);
    *out = s.release();
    return STT_OK;
  });
}

void stt_stream_destroy(stt_stream* s) { delete s; }

stt_status stt_stream_push_text(stt_stream* s, const char* text, int64_t arrival_ns) {
  if (!s || !text) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::optional<std::int64_t> at;
    if (arrival_ns >= 0) at = arrival_ns;
    s->pipeline->push_text(text, at);
    return STT_OK;
  });
}

stt_status stt_stream_finish(stt_stream* s) {
  if (!s) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    s->pipeline->finish();
    return STT_OK;
  });
}

stt_status stt_stream_set_pcm_callback(stt_stream* s, stt_pcm_callback cb, void* user) {
  if (!s) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    s->pcm = cb;
    s->pcm_user = user;
    if (!cb) {
      s->pipeline->emitter().set_segment_sink(nullptr);
    } else {
      s->pipeline->emitter().set_segment_sink([s](const st::AudioSegment& seg) {
        s->pcm(seg.samples.data(), seg.samples.size(), seg.sample_rate_hz, s->pcm_user);
      });
    }
    return STT_OK;
  });
}

stt_status stt_stream_write_wav(const stt_stream* s, const char* path) {
  if (!s || !path) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    s->pipeline->write_wav(path);
    return STT_OK;
  });
}

stt_status stt_stream_summary_json(const stt_stream* s, char** out) {
  if (!s || !out) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& session = s->pipeline->session();
    json j = json::parse(st::summary_to_json(session.stats()));
    switch (session.status()) {
      case st::SessionStatus::Active: j["status"] = "active"; break;
      case st::SessionStatus::Finalized: j["status"] = "finalized"; break;
      case st::SessionStatus::Failed: j["status"] = "failed"; break;
    }
    j["failure"] = session.failure();
    j["words"] = s->pipeline->words_received();
    j["audio_tokens"] = s->pipeline->emitter().total_tokens();
    j["samples"] = s->pipeline->emitter().total_samples();
    j["sample_rate_hz"] = s->cfg.sample_rate_hz;
    give(out, j.dump(2) + "\n");
    return STT_OK;
  });
}

stt_status stt_stream_report_json(const stt_stream* s, char** out) {
  if (!s || !out) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    give(out, st::report_to_json(s->pipeline->report("stream")) + "\n");
    return STT_OK;
  });
}

stt_status stt_stream_events_jsonl(const stt_stream* s, char** out) {
  if (!s || !out) return fail(STT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    st::MetricsSink sink;
    sink.append(s->pipeline->session().id(), s->pipeline->log());
    give(out, sink.to_jsonl());
    return STT_OK;
  });
}

// ─── Benchmarks ──────────────────────────────────────────────────────────────

stt_status stt_bench(const stt_config* cfg, const char* scenario_path, const char* vocab_path, int trials,
                     int warmups, int jobs, const char* out_path, const char* format, char** summary) {
  if (!cfg || !scenario_path || !out_path) return fail(STT_INVALID_ARGUMENT, "null argument");
  if (trials < 1 || warmups < 0 || jobs < 1) return fail(STT_INVALID_ARGUMENT, "trials >= 1, warmups >= 0, jobs >= 1");
  const auto fmt = parse_format(format);
  if (!fmt) return fail(STT_INVALID_ARGUMENT, "format must be json or csv");
  return guarded([&] {
    st::require_valid(cfg->cfg);
    const auto scenario = st::load_scenario(scenario_path);
    if (scenario.utterances.empty()) return fail(STT_EMPTY, std::string(scenario_path) + ": scenario has no utterances");
    const auto tokenizer = make_tokenizer(cfg->cfg, vocab_path);
    const auto report = st::run_bench(cfg->cfg, scenario, *tokenizer, trials, warmups, jobs);
    const std::string body = *fmt == st::ReportFormat::Json ? st::bench_to_json(report) : st::bench_to_csv(report);
    st::write_file_atomic(out_path, body);
    json j{{"utterances", report.utterances.size()},
           {"succeeded", report.succeeded},
           {"ttfa_mean_ms", report.ttfa_mean_ms},
           {"rtf_mean", report.rtf_mean},
           {"output", out_path}};
    give(summary, j.dump(2) + "\n");
    if (report.succeeded == 0) return fail(STT_BACKEND, "no utterance completed");
    return STT_OK;
  });
}

stt_status stt_sweep(const stt_config* cfg, const char* scenario_path, const char* vocab_path, int k_lo, int k_hi,
                     int f_lo, int f_hi, const char* out_path, const char* format, int resume, char** summary) {
  if (!cfg || !scenario_path || !out_path) return fail(STT_INVALID_ARGUMENT, "null argument");
  if (k_lo < 1 || k_hi < k_lo || f_lo < 0 || f_hi < f_lo)
    return fail(STT_INVALID_ARGUMENT, "ranges must satisfy 1 <= k_lo <= k_hi and 0 <= f_lo <= f_hi");
  const auto fmt = parse_format(format);
  if (!fmt) return fail(STT_INVALID_ARGUMENT, "format must be json or csv");
  return guarded([&] {
    const auto scenario = st::load_scenario(scenario_path);
    if (scenario.utterances.empty()) return fail(STT_EMPTY, std::string(scenario_path) + ": scenario has no utterances");
    const auto tokenizer = make_tokenizer(cfg->cfg, vocab_path);

    const std::string journal = std::string(out_path) + ".cells.jsonl.partial";
    std::map<std::pair<int, int>, st::RunReport> completed;
    if (resume && std::filesystem::exists(journal)) {
      std::ifstream in(journal);
      std::string line;
      while (std::getline(in, line)) {
        // A torn last line from an interrupted run is skipped.
        auto cell = st::cell_from_json_line(line);
        if (cell && cell->ok()) completed[{cell->k, cell->f}] = *cell->report;
      }
    }
    {
      // Rewrite the journal with just the reused cells so stale failures drop out.
      std::ofstream j(journal, std::ios::trunc);
      for (const auto& [kf, r] : completed) {
        st::SweepCell c;
        c.k = kf.first;
        c.f = kf.second;
        c.report = r;
        j << st::cell_to_json_line(c) << "\n";
      }
    }
    std::ofstream journal_out(journal, std::ios::app);
    const auto grid = st::run_sweep(cfg->cfg, scenario, *tokenizer, {k_lo, k_hi}, {f_lo, f_hi}, completed,
                                    [&](const st::SweepCell& c) {
                                      journal_out << st::cell_to_json_line(c) << "\n";
                                      journal_out.flush();
                                    });
    journal_out.close();

    const std::string body = *fmt == st::ReportFormat::Json ? st::grid_to_json(grid) : st::grid_to_csv(grid);
    st::write_file_atomic(out_path, body);
    std::filesystem::remove(journal);

    std::size_t ok = 0, resumed = 0;
    for (const auto& c : grid.cells) {
      ok += c.ok();
      resumed += c.resumed;
    }
    json j{{"cells", grid.cells.size()},
           {"succeeded", ok},
           {"failed", grid.cells.size() - ok},
           {"resumed", resumed},
           {"skipped_constraint", grid.skipped_constraint},
           {"output", out_path}};
    give(summary, j.dump(2) + "\n");
    return STT_OK;
  });
}

}  // extern "C"
