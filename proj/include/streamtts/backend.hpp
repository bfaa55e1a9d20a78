// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "streamtts/chunker.hpp"
#include "streamtts/clock.hpp"
#include "streamtts/core.hpp"

namespace streamtts {

enum class PromptSource { Reference, PreviousChunk };

// Conditioning pair for one step: the reference at t = 1, the previous
// chunk's text and generated speech afterwards.
struct Prompt {
  TextTokens text;
  SpeechTokens speech;
  PromptSource source = PromptSource::Reference;

  std::size_t size() const { return text.size() + speech.size(); }
};

enum class StopReason { MarkerStop, EndOfSequence, CapTruncated };
std::string_view to_string(StopReason r);

struct SynthesisRequest {
  Prompt prompt;
  ModelInput input;
  std::size_t max_tokens = 0;  // cur words * max_tokens_per_word
  std::string request_id;
};

struct TokenEvent {
  enum class Kind { Token, Stop, Error };
  Kind kind = Kind::Token;
  SpeechToken token{};
  StopReason stop = StopReason::EndOfSequence;
  std::string message;
  std::int64_t ns = 0;

  static TokenEvent make_token(SpeechToken t, std::int64_t ns) { return {Kind::Token, t, {}, {}, ns}; }
  static TokenEvent make_stop(StopReason r, std::int64_t ns) { return {Kind::Stop, {}, r, {}, ns}; }
  static TokenEvent make_error(std::string msg, std::int64_t ns) {
    return {Kind::Error, {}, StopReason::EndOfSequence, std::move(msg), ns};
  }
};

using TokenSink = std::function<void(const TokenEvent&)>;

// Every call delivers a stream that ends with exactly one Stop or Error.
class SynthesisBackend {
 public:
  virtual ~SynthesisBackend() = default;
  virtual void generate(const SynthesisRequest& req, Clock& clock, const TokenSink& sink) = 0;
};

// ─── Mock ────────────────────────────────────────────────────────────────────
//
// Emits tokens_per_word tokens for every current word and nothing for the
// lookahead, then Stop(MarkerStop) if the input holds a marker, otherwise
// Stop(EndOfSequence). Token i (0-based, across the chunk) of current word w:
//
//   word_hash  = FNV-1a over the little-endian 4-byte ids of w's tokens
//   key        = (i << 32) | last prompt speech id   (0 if prompt has none)
//   token      = mix64(word_hash ^ mix64(key)) % speech_vocab_size
//
// where mix64 is the SplitMix64 finalizer. Timing: wait
// prompt_latency_ns * (|prompt| + |input|) before the first token, then
// token_latency_ns before each token.
class MockBackend final : public SynthesisBackend {
 public:
  explicit MockBackend(const StreamConfig& cfg);
  void generate(const SynthesisRequest& req, Clock& clock, const TokenSink& sink) override;

 private:
  StreamConfig cfg_;
};

std::uint64_t mock_word_hash(std::span<const TextToken> tokens);
std::uint32_t mock_token_value(std::uint64_t word_hash, std::uint32_t position, std::uint32_t prev_speech,
                               std::uint32_t speech_vocab_size);

// ─── Remote (newline-delimited JSON over HTTP) ───────────────────────────────
//
// POST /v1/generate
//   {"request_id": str, "prompt_text": [int], "prompt_speech": [int],
//    "input_tokens": [int], "marker_id": int, "max_tokens": int}
// Response body: one JSON object per line,
//   {"t": int} | {"stop": "marker"|"eos"|"cap"} | {"error": str}
// The client cancels once a server exceeds max_tokens and reports
// Stop(CapTruncated). Transport failures become a single Error event.

inline constexpr std::string_view kWireSchemaVersion = "1";

std::string request_to_wire_json(const SynthesisRequest& req, std::uint32_t marker_id);

struct WireLine {
  enum class Kind { Token, Stop, Error } kind;
  std::uint32_t token = 0;
  StopReason stop = StopReason::EndOfSequence;
  std::string error;
};

// Throws Error(Parse) for a line that matches none of the three shapes.
WireLine parse_wire_line(std::string_view line);
std::string wire_stop_name(StopReason r);

// Incremental splitter for the response body.
class LineBuffer {
 public:
  template <typename F>
  void feed(std::string_view data, F&& on_line) {
    buffer_.append(data);
    std::size_t start = 0;
    for (auto nl = buffer_.find('\n', start); nl != std::string::npos; nl = buffer_.find('\n', start)) {
      std::string_view line(buffer_.data() + start, nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      start = nl + 1;
      if (!line.empty() && !on_line(line)) {
        buffer_.erase(0, start);
        return;
      }
    }
    buffer_.erase(0, start);
  }
  const std::string& pending() const { return buffer_; }

 private:
  std::string buffer_;
};

class RemoteBackend final : public SynthesisBackend {
 public:
  // endpoint: "http://host:port" (an optional trailing path prefix is kept).
  RemoteBackend(std::string endpoint, int timeout_ms, std::uint32_t marker_id);
  void generate(const SynthesisRequest& req, Clock& clock, const TokenSink& sink) override;

 private:
  std::string host_;
  int port_ = 80;
  std::string prefix_;
  int timeout_ms_;
  std::uint32_t marker_id_;
};

}  // namespace streamtts
