// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "streamtts/core.hpp"

namespace streamtts {

// Corpus JSONL, one record per line:
//   {"id": str, "text_tokens": [int], "speech_tokens": [int], "duration_s": float,
//    "words": [{"w": str, "b": int, "e": int, "t0": float, "t1": float, "aligned": bool}],
//    "speaker": str?, "reference_eligible": bool?}
// b/e are 0-based half-open token indices. "aligned" defaults to true; t0/t1
// may be omitted for unaligned words.
struct CorpusRecord {
  AlignedUtterance utterance;
  std::optional<std::string> speaker_id;
  bool is_reference_eligible = true;
};

enum class RejectReason {
  MalformedJson,
  MissingField,
  DuplicateId,
  TokenOutOfVocab,
  MarkerCollision,
  SpeechTokenOutOfVocab,
  SpanOutOfRange,
  SpanOverlap,
  TimeInverted,
  AlignmentNotMonotone,
  AlignmentExceedsAudio,
  SpeechLengthMismatch,
};

std::string_view to_string(RejectReason r);

struct Rejection {
  std::size_t line = 0;  // 1-based
  RejectReason reason;
  std::string detail;
};

struct Corpus {
  std::vector<CorpusRecord> records;
};

struct LoadResult {
  Corpus accepted;
  std::vector<Rejection> rejected;
  std::size_t blank_lines = 0;
};

// IO failure throws Error(Io); a malformed line is a rejection, never fatal.
LoadResult load_corpus(const std::string& path, const StreamConfig& cfg);
LoadResult parse_corpus(std::string_view text, const StreamConfig& cfg);

// First violated invariant, or nullopt if the utterance is valid under cfg.
std::optional<Rejection> check_utterance(const AlignedUtterance& utt, const StreamConfig& cfg);

std::string record_to_json_line(const CorpusRecord& rec);
std::string serialize_corpus(const Corpus& corpus);

// Lowercase ASCII, drop ASCII punctuation, collapse whitespace.
// "Hello, There!" -> "hello there".
std::string normalize_transcript(std::string_view text);
std::string transcript_of(const AlignedUtterance& utt);

struct FilterResult {
  Corpus corpus;
  std::size_t removed = 0;
};

// Blocklist entries are normalized on the way in, so callers may pass raw text.
FilterResult filter_eval_overlap(const Corpus& corpus, const std::set<std::string>& blocklist);
std::set<std::string> load_blocklist(const std::string& path);

struct CorpusStats {
  std::size_t utterance_count = 0;
  std::size_t total_words = 0;
  std::size_t total_speech_tokens = 0;
  std::size_t alignment_gap_count = 0;
  double total_duration_s = 0.0;
  // Bins: [0,1) [1,2) [2,5) [5,10) [10,20) [20,30) [30,inf) seconds.
  std::vector<std::size_t> duration_histogram = std::vector<std::size_t>(7, 0);

  static const std::vector<double>& histogram_edges();
  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(const Corpus& corpus);
std::string stats_to_json(const CorpusStats& stats);

// Deterministic subsample of `count` records keyed by seed, preserving order.
Corpus subsample(const Corpus& corpus, std::size_t count, std::uint64_t seed);

}  // namespace streamtts
