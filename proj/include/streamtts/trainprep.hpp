// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streamtts/core.hpp"
#include "streamtts/corpus.hpp"

namespace streamtts {

// Dynamic boundary insertion: each utterance becomes either a Full example
// (unmodified text, complete target) or a Truncated one, where the marker is
// placed after a sampled word m and the target stops at that word's audio end.

enum class ExampleMode { Full, Truncated };

struct TrainingExample {
  std::string utterance_id;
  ExampleMode mode = ExampleMode::Full;
  TextTokens input_tokens;
  SpeechTokens target_tokens;
  std::optional<int> boundary_word_m;           // 1-based
  std::optional<std::int64_t> boundary_audio_ms;
  std::optional<std::size_t> marker_position;
  bool clamped_to_length = false;  // floor(a_m * r_s) exceeded L
};

// Full with probability p_full; consumes exactly one draw.
ExampleMode sample_mode(SeededRng& rng, double p_full);

// x' = x[0, e_m) ++ [marker] ++ x[e_m, T). The marker lands at index e_m.
// Throws IndexOutOfRange, or UnalignedBoundaryWord when word m has no
// timestamps or no tokens.
TextTokens insert_boundary(const AlignedUtterance& utt, int m, const StreamConfig& cfg);
TextTokens strip_marker(const TextTokens& tokens, std::uint32_t marker_id);

// Seconds to integer milliseconds, rounding to nearest.
std::int64_t seconds_to_ms(double seconds);

// max(ell_min, floor(a_ms * r_s / 1000)) computed in integers, then clamped to
// `available` frames. `clamped` reports whether the upper clamp fired.
std::size_t truncated_length(std::int64_t a_ms, std::size_t available, const StreamConfig& cfg,
                             bool* clamped = nullptr);

struct Truncation {
  SpeechTokens tokens;
  bool clamped_to_length = false;
};

// Requires 0 <= a_m_s <= audio duration.
Truncation truncate_speech(const AlignedUtterance& utt, double a_m_s, const StreamConfig& cfg);

// Draw order is fixed: the mode first, then m uniformly over boundary-eligible
// words. Throws NoAlignedWords when no word is eligible.
TrainingExample make_example(const AlignedUtterance& utt, SeededRng& rng, const StreamConfig& cfg);

// Same as make_example with the mode forced (no mode draw is consumed).
TrainingExample make_example_with_mode(const AlignedUtterance& utt, SeededRng& rng,
                                       const StreamConfig& cfg, ExampleMode mode);

std::string example_to_json_line(const TrainingExample& ex, std::optional<int> epoch = std::nullopt);

struct PrepareSummary {
  std::size_t examples = 0;
  std::size_t full = 0;
  std::size_t truncated = 0;
  std::size_t skipped_no_aligned_words = 0;
  std::size_t clamp_events = 0;
  double mean_truncation_ratio = 0.0;  // mean L'/L over Truncated examples
  int epochs = 1;
  std::vector<std::string> skipped_ids;
};

// Each utterance draws from its own stream derived from (seed, epoch, id), so
// output is independent of processing order. Writes JSONL to out_path and the
// summary JSON to out_path + ".summary.json".
PrepareSummary prepare_corpus(const Corpus& corpus, const StreamConfig& cfg,
                              const std::string& out_path, int epochs = 1);

// In-memory variant used by prepare_corpus.
std::vector<TrainingExample> prepare_examples(const Corpus& corpus, const StreamConfig& cfg, int epoch,
                                              PrepareSummary& summary);

std::string summary_to_json(const PrepareSummary& s);

}  // namespace streamtts
