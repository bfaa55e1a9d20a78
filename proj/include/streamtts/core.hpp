// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace streamtts {

// ─── Error handling ──────────────────────────────────────────────────────────

enum class ErrorCode {
  InvalidArgument,
  InvalidConfig,
  Io,
  Parse,
  EmptyReference,
  SessionNotActive,
  ChunkIndexMismatch,
  FinalizeWhileChunksPending,
  BackendFailure,
  PushAfterFinalize,
  TokenizationFailure,
  UnalignedBoundaryWord,
  IndexOutOfRange,
  NoAlignedWords,
  OutOfOrderChunk,
  IncompatibleRates,
  MissingEvent,
  ZeroAudioDuration,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ─── Tokens ──────────────────────────────────────────────────────────────────

struct TextToken {
  std::uint32_t id = 0;
  auto operator<=>(const TextToken&) const = default;
};

struct SpeechToken {
  std::uint32_t id = 0;
  auto operator<=>(const SpeechToken&) const = default;
};

using TextTokens = std::vector<TextToken>;
using SpeechTokens = std::vector<SpeechToken>;

// ─── Alignment data ──────────────────────────────────────────────────────────

struct WordAlignment {
  int word_index = 0;  // 1-based
  std::string surface;
  // Half-open [begin, end) over the utterance's text tokens.
  std::size_t token_begin = 0;
  std::size_t token_end = 0;
  // Unaligned words keep their text but carry no timestamps.
  bool aligned = true;
  double audio_start_s = 0.0;
  double audio_end_s = 0.0;

  bool has_tokens() const { return token_end > token_begin; }
  bool boundary_eligible() const { return aligned && has_tokens(); }
};

struct AlignedUtterance {
  std::string utterance_id;
  TextTokens text_tokens;
  SpeechTokens speech_tokens;
  std::vector<WordAlignment> words;
  double audio_duration_s = 0.0;
};

// ─── Configuration ───────────────────────────────────────────────────────────

struct StreamConfig {
  // Protocol knobs.
  int k = 5;               // words per chunk
  int f = 2;               // lookahead words
  double p_full = 0.15;    // probability of a Full training example
  int r_s = 25;            // speech-token frame rate (Hz)
  int ell_min = 5;         // minimum truncated target length (frames)
  std::uint32_t marker_id = 31999;
  std::uint64_t seed = 0;

  // Vocabularies.
  std::uint32_t text_vocab_size = 32000;
  std::uint32_t speech_vocab_size = 4096;
  std::uint32_t unk_id = 31998;
  int max_text_tokens_per_word = 8;

  // Mock synthesis and emission.
  int tokens_per_word = 10;
  int max_tokens_per_word = 40;
  int emit_group_g = 15;
  int sample_rate_hz = 24000;
  int crossfade_ms = 0;

  // Corpus validation.
  int align_tolerance_ms = 50;

  // Simulated timing (nanoseconds).
  bool simulated_time = false;
  std::int64_t token_latency_ns = 10'000'000;   // per generated speech token
  std::int64_t prompt_latency_ns = 1'000'000;   // per prompt/input token
  double fault_rate = 0.0;

  // Behavior flags.
  bool final_marker = false;
  bool retain_reference = false;
  bool ablation_grid = false;

  // Backend selection.
  std::string backend = "mock";
  std::string endpoint = "http://127.0.0.1:8080";
  int timeout_ms = 30000;
};

enum class ConfigViolation {
  ChunkSizeZero,
  NegativeLookahead,
  LookaheadExceedsChunk,
  ProbabilityOutOfRange,
  FrameRateNonPositive,
  MinFramesNonPositive,
  MarkerOutOfVocab,
  UnkOutOfVocab,
  UnkCollidesWithMarker,
  EmptySpeechVocab,
  TextTokensPerWordNonPositive,
  TokensPerWordNonPositive,
  MaxTokensBelowDensity,
  EmitGroupNonPositive,
  SampleRateNonPositive,
  IncompatibleRates,
  NegativeCrossfade,
  NegativeLatency,
  FaultRateOutOfRange,
  UnknownBackend,
  NonPositiveTimeout,
  NegativeAlignTolerance,
};

std::string_view to_string(ConfigViolation v);

struct ConfigIssue {
  ConfigViolation code;
  std::string message;
};

// Returns every violated invariant. f > k is reported only when ablation-grid
// mode is active; otherwise it is a warning (see config_warnings).
std::vector<ConfigIssue> validate_config(const StreamConfig& cfg);
std::vector<std::string> config_warnings(const StreamConfig& cfg);

// Throws Error(InvalidConfig) listing all violations.
void require_valid(const StreamConfig& cfg);

// Sets a single field by key. Unknown keys and unparsable values throw
// Error(InvalidConfig).
void set_config_value(StreamConfig& cfg, std::string_view key, std::string_view value);

// Flat `key = value` file; '#' starts a comment; values may be double-quoted.
// This is the scalar subset of TOML.
void load_config_file(StreamConfig& cfg, const std::string& path);
void apply_config_text(StreamConfig& cfg, std::string_view text, const std::string& origin);

// STREAMTTS_SEED, when set, overrides cfg.seed.
void apply_env_overrides(StreamConfig& cfg);

std::map<std::string, std::string> config_snapshot(const StreamConfig& cfg);

// ─── Deterministic random source ─────────────────────────────────────────────

// xoshiro256** seeded through SplitMix64. The algorithm is frozen: the same
// seed produces the same sequence on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) built from the top 53 bits of one draw.
  double next_unit();
  // Uniform in [0, bound) (Lemire, unbiased). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64_next(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

// Independent stream for (seed, label), e.g. one per utterance id.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// True with probability p; consumes exactly one draw.
bool bernoulli(SeededRng& rng, double p);

}  // namespace streamtts
