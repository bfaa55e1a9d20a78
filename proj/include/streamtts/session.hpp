// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "streamtts/backend.hpp"
#include "streamtts/chunker.hpp"
#include "streamtts/clock.hpp"
#include "streamtts/core.hpp"
#include "streamtts/emitter.hpp"
#include "streamtts/metrics.hpp"

namespace streamtts {

struct Reference {
  TextTokens text;
  SpeechTokens speech;
};

enum class SessionStatus { Active, Finalized, Failed };

struct GenerationResult {
  SpeechTokens speech_tokens;
  StopReason stop_reason = StopReason::EndOfSequence;
  std::size_t context_size = 0;
  std::int64_t request_ns = 0;
  std::int64_t first_token_ns = 0;
  std::int64_t last_token_ns = 0;
};

struct SessionSummary {
  int chunks = 0;
  std::size_t total_speech_tokens = 0;
  std::map<std::string, std::size_t> stop_reasons;
  std::size_t peak_context = 0;
  std::size_t peak_context_steady = 0;  // over t >= 2
  std::size_t context_bound = 0;
  std::size_t unk_tokens = 0;
};

std::string summary_to_json(const SessionSummary& s);

// Upper bound on context_size for every t >= 2:
//   prompt text   <= k * max_text_tokens_per_word
//   prompt speech <= k * max_tokens_per_word
//   input         <= (k + f) * max_text_tokens_per_word + 1 (marker)
// plus the reference size when retain_reference is set. Independent of the
// stream length.
std::size_t context_bound(const StreamConfig& cfg, std::size_t reference_size = 0);

// One record per processed chunk, kept when tracing is enabled.
struct TraceEntry {
  Prompt prompt;
  ModelInput input;
  GenerationResult result;
  std::vector<std::string> lookahead_words;
};

// Sliding-window continuation. Chunk 1 is conditioned on the reference;
// chunk t >= 2 on chunk t-1's current tokens (no marker, no lookahead) and
// the speech generated for them.
class Session {
 public:
  // Throws EmptyReference. Records request_submitted on `log`.
  Session(std::string session_id, Reference reference, const StreamConfig& cfg, const Tokenizer& tokenizer,
          Clock& clock, TimingLog& log);

  Prompt prompt_for() const;
  std::size_t context_size(const ModelInput& next_input) const;

  // Requires status Active and chunk.index == t() + 1. Tokens are forwarded to
  // the emitter as they arrive. A backend error fails the session and throws
  // BackendFailure; exceeding the cap is reported as CapTruncated.
  GenerationResult process_chunk(const Chunk& chunk, SynthesisBackend& backend, StreamEmitter& emitter);

  // Requires that the final chunk was processed (or none at all). Records
  // stream_done.
  SessionSummary finalize();

  int t() const { return t_; }
  SessionStatus status() const { return status_; }
  const std::string& failure() const { return failure_; }
  const std::string& id() const { return id_; }
  const SessionSummary& stats() const { return stats_; }
  const std::vector<ChunkStats>& chunk_stats() const { return chunk_stats_; }

  void enable_trace(bool on) { trace_on_ = on; }
  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  std::string id_;
  Reference reference_;
  StreamConfig cfg_;
  const Tokenizer& tokenizer_;
  Clock& clock_;
  TimingLog& log_;

  int t_ = 0;
  TextTokens last_cur_tokens_;
  SpeechTokens last_speech_;
  bool last_was_final_ = false;
  bool first_audio_logged_ = false;
  SessionStatus status_ = SessionStatus::Active;
  std::string failure_;

  SessionSummary stats_;
  std::vector<ChunkStats> chunk_stats_;
  bool trace_on_ = false;
  std::vector<TraceEntry> trace_;
};

}  // namespace streamtts
