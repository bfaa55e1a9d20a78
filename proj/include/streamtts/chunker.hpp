// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamtts/core.hpp"

namespace streamtts {

// ─── Word splitting and tokenization ─────────────────────────────────────────

class WordSplitter {
 public:
  virtual ~WordSplitter() = default;
  virtual std::vector<std::string> split(std::string_view text) const = 0;
};

// Splits on whitespace; punctuation stays attached to its word.
class WhitespaceSplitter final : public WordSplitter {
 public:
  std::vector<std::string> split(std::string_view text) const override;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  // Tokens for one word. Out-of-vocabulary words map to the UNK id.
  virtual TextTokens encode_word(std::string_view word) const = 0;
};

// Word -> token ids from a fixed table. Lookup tries the exact surface, then
// its lowercase form; anything else becomes [unk_id].
class VocabTokenizer final : public Tokenizer {
 public:
  VocabTokenizer(std::map<std::string, TextTokens> table, std::uint32_t unk_id);
  TextTokens encode_word(std::string_view word) const override;
  bool contains(std::string_view word) const;

 private:
  std::map<std::string, TextTokens, std::less<>> table_;
  std::uint32_t unk_id_;
};

// JSON object {"word": [id, ...], ...}.
VocabTokenizer load_vocab_tokenizer(const std::string& path, const StreamConfig& cfg);

// Deterministic stand-in when no vocabulary is supplied: ceil(bytes / 4)
// tokens per word (at most max_text_tokens_per_word), ids from FNV-1a of the
// word and piece index, never equal to marker_id or unk_id.
class HashTokenizer final : public Tokenizer {
 public:
  explicit HashTokenizer(const StreamConfig& cfg);
  TextTokens encode_word(std::string_view word) const override;

 private:
  std::uint32_t vocab_;
  std::uint32_t marker_;
  std::uint32_t unk_;
  int max_tokens_;
};

// ─── Chunking ────────────────────────────────────────────────────────────────

struct Chunk {
  int index = 0;  // 1-based
  std::vector<std::string> cur_words;
  std::vector<std::string> fut_words;
  bool is_final = false;
};

// Single-producer/single-consumer word buffer. A chunk is emitted once k + f
// unconsumed words are buffered, or once the stream is finalized. Taking a
// chunk consumes only its current words; lookahead words come back as the
// next chunk's current words.
class ChunkerState {
 public:
  void push_words(std::span<const std::string> words);
  void finalize_stream();
  std::optional<Chunk> try_next_chunk(const StreamConfig& cfg);

  bool finalized() const { return finalized_; }
  std::size_t buffered() const { return words_.size(); }
  std::size_t unconsumed() const { return words_.size() - cursor_; }
  int chunks_emitted() const { return next_index_ - 1; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::size_t cursor_ = 0;
  int next_index_ = 1;
  bool finalized_ = false;
  bool done_ = false;
};

// X_t = tokens(cur) ++ [marker] ++ tokens(fut). The final chunk carries no
// marker and no lookahead unless cfg.final_marker is set.
struct ModelInput {
  TextTokens tokens;
  std::size_t cur_token_count = 0;
  std::optional<std::size_t> marker_position;
  // Start offset of each current word within tokens, plus the end offset.
  std::vector<std::size_t> cur_word_offsets;
  std::size_t unk_count = 0;

  std::size_t cur_word_count() const { return cur_word_offsets.empty() ? 0 : cur_word_offsets.size() - 1; }
  TextTokens cur_tokens() const {
    return TextTokens(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(cur_token_count));
  }
};

ModelInput build_input(const Chunk& chunk, const Tokenizer& tokenizer, const StreamConfig& cfg);

}  // namespace streamtts
