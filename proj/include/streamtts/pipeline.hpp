// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "streamtts/backend.hpp"
#include "streamtts/chunker.hpp"
#include "streamtts/clock.hpp"
#include "streamtts/emitter.hpp"
#include "streamtts/metrics.hpp"
#include "streamtts/session.hpp"

namespace streamtts {

// Accepts any JSON object holding "text_tokens" and "speech_tokens" arrays
// (a corpus record qualifies). For a JSONL file the first record is used.
Reference load_reference(const std::string& path);
Reference parse_reference(std::string_view json_text);

std::unique_ptr<SynthesisBackend> make_backend(const StreamConfig& cfg);
std::unique_ptr<Clock> make_clock(const StreamConfig& cfg);

// chunker -> session -> backend -> emitter for one stream of text.
class StreamPipeline {
 public:
  // Borrowed objects must outlive the pipeline.
  StreamPipeline(std::string session_id, const StreamConfig& cfg, Reference reference, const Tokenizer& tokenizer,
                 SynthesisBackend& backend, Clock& clock);

  // Splits text into words and runs every chunk that becomes available. With
  // an arrival time the clock first waits until then. Backend failure throws
  // BackendFailure after flushing the audio produced so far.
  void push_text(std::string_view text, std::optional<std::int64_t> arrival_ns = std::nullopt);
  void push_words(std::span<const std::string> words, std::optional<std::int64_t> arrival_ns = std::nullopt);
  // Finalizes the word stream, drains remaining chunks and the session.
  SessionSummary finish();

  const Session& session() const { return session_; }
  Session& session() { return session_; }
  const StreamEmitter& emitter() const { return emitter_; }
  StreamEmitter& emitter() { return emitter_; }
  const TimingLog& log() const { return log_; }
  const StreamConfig& config() const { return cfg_; }
  std::size_t words_received() const { return chunker_.buffered(); }
  bool finished() const { return finished_; }

  // Valid after finish(). WER is left empty.
  RunReport report(std::string id) const;

  void write_wav(const std::string& path) const;

 private:
  void drain();

  StreamConfig cfg_;
  const Tokenizer& tokenizer_;
  SynthesisBackend& backend_;
  Clock& clock_;
  TimingLog log_;
  Session session_;
  ChunkerState chunker_;
  StreamEmitter emitter_;
  WhitespaceSplitter splitter_;
  bool finished_ = false;
};

// Self-contained run over a fixed text with a fresh backend and clock built
// from cfg. Used by bench and sweep.
struct StreamOutcome {
  RunReport report;
  SessionSummary summary;
  std::size_t words = 0;
  std::size_t samples = 0;
};
StreamOutcome run_text(const StreamConfig& cfg, const Reference& reference, std::string_view text,
                       const Tokenizer& tokenizer, std::string id = "run");

// ─── Scenarios ───────────────────────────────────────────────────────────────
//
// {"reference": {"text_tokens": [...], "speech_tokens": [...]},
//  "utterances": [{"id": str, "text": str, "reference": {...}?, "hypothesis": str?}]}

struct ScenarioUtterance {
  std::string id;
  std::string text;
  std::optional<Reference> reference;
  std::optional<std::string> hypothesis;
};

struct Scenario {
  std::optional<Reference> reference;
  std::vector<ScenarioUtterance> utterances;

  const Reference& reference_for(const ScenarioUtterance& u) const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(std::string_view json_text);

struct UtteranceBench {
  std::string id;
  ProtocolReport protocol;
  std::optional<double> wer;
  std::string error;
  bool ok() const { return !protocol.error && error.empty() && protocol.trial_count > 0; }
};

struct BenchReport {
  std::vector<UtteranceBench> utterances;
  std::size_t succeeded = 0;
  double ttfa_mean_ms = 0.0;
  double rtf_mean = 0.0;
  std::map<std::string, std::string> config;
};

// measure_protocol per utterance; `jobs` utterances run in parallel, each
// with isolated state.
BenchReport run_bench(const StreamConfig& cfg, const Scenario& scenario, const Tokenizer& tokenizer, int trials = 50,
                      int warmups = 2, int jobs = 1);
std::string bench_to_json(const BenchReport& report);
std::string bench_to_csv(const BenchReport& report);

// One aggregated RunReport per admissible (k, f) cell, each over every
// scenario utterance.
SweepGrid run_sweep(const StreamConfig& cfg, const Scenario& scenario, const Tokenizer& tokenizer, SweepRange k,
                    SweepRange f, const std::map<std::pair<int, int>, RunReport>& completed = {},
                    const CellObserver& on_cell = nullptr);

}  // namespace streamtts
