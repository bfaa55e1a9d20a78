// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/chunker.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "streamtts/io.hpp"

namespace streamtts {

std::vector<std::string> WhitespaceSplitter::split(std::string_view text) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

VocabTokenizer::VocabTokenizer(std::map<std::string, TextTokens> table, std::uint32_t unk_id)
    : table_(table.begin(), table.end()), unk_id_(unk_id) {}

bool VocabTokenizer::contains(std::string_view word) const {
  if (table_.find(word) != table_.end()) return true;
  std::string lower(word);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return table_.find(lower) != table_.end();
}

TextTokens VocabTokenizer::encode_word(std::string_view word) const {
  if (auto it = table_.find(word); it != table_.end()) return it->second;
  std::string lower(word);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (auto it = table_.find(lower); it != table_.end()) return it->second;
  return {TextToken{unk_id_}};
}

VocabTokenizer load_vocab_tokenizer(const std::string& path, const StreamConfig& cfg) {
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Parse, path + ": vocabulary must be a JSON object");
  std::map<std::string, TextTokens> table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array()) throw Error(ErrorCode::Parse, path + ": entry '" + it.key() + "' is not an array");
    TextTokens toks;
    for (const auto& v : it.value()) {
      if (!v.is_number_unsigned()) throw Error(ErrorCode::Parse, path + ": non-integer id for '" + it.key() + "'");
      auto id = v.get<std::uint32_t>();
      if (id == cfg.marker_id) throw Error(ErrorCode::Parse, path + ": '" + it.key() + "' uses the marker id");
      if (id >= cfg.text_vocab_size) throw Error(ErrorCode::Parse, path + ": id out of vocabulary");
      toks.push_back(TextToken{id});
    }
    table.emplace(it.key(), std::move(toks));
  }
  return VocabTokenizer(std::move(table), cfg.unk_id);
}

HashTokenizer::HashTokenizer(const StreamConfig& cfg)
    : vocab_(cfg.text_vocab_size),
      marker_(cfg.marker_id),
      unk_(cfg.unk_id),
      max_tokens_(cfg.max_text_tokens_per_word) {
  if (vocab_ < 3) throw Error(ErrorCode::InvalidConfig, "text vocabulary too small for hash tokenizer");
}

TextTokens HashTokenizer::encode_word(std::string_view word) const {
  const std::size_t pieces =
      std::min<std::size_t>((word.size() + 3) / 4, static_cast<std::size_t>(max_tokens_));
  TextTokens out;
  const std::uint64_t h = fnv1a64(word);
  for (std::size_t i = 0; i < std::max<std::size_t>(pieces, 1); ++i) {
    auto id = static_cast<std::uint32_t>(mix64(h + i) % vocab_);
    while (id == marker_ || id == unk_) id = (id + 1) % vocab_;
    out.push_back(TextToken{id});
  }
  return out;
}

// ─── ChunkerState ────────────────────────────────────────────────────────────

void ChunkerState::push_words(std::span<const std::string> words) {
  if (finalized_) throw Error(ErrorCode::PushAfterFinalize, "push after finalize_stream");
  words_.insert(words_.end(), words.begin(), words.end());
}

void ChunkerState::finalize_stream() { finalized_ = true; }

std::optional<Chunk> ChunkerState::try_next_chunk(const StreamConfig& cfg) {
  if (done_ || cfg.k < 1) return std::nullopt;
  const auto k = static_cast<std::size_t>(cfg.k);
  const auto f = static_cast<std::size_t>(std::max(cfg.f, 0));
  const std::size_t remaining = unconsumed();

  std::size_t cur = 0;
  std::size_t fut = 0;
  bool is_final = false;
  if (!finalized_) {
    if (remaining < k + f) return std::nullopt;
    cur = k;
    fut = f;
  } else {
    if (remaining == 0) return std::nullopt;
    if (remaining > k) {
      cur = k;
      fut = std::min(f, remaining - k);
    } else {
      cur = remaining;
      is_final = true;
    }
  }

  Chunk chunk;
  chunk.index = next_index_++;
  chunk.is_final = is_final;
  auto begin = words_.begin() + static_cast<std::ptrdiff_t>(cursor_);
  chunk.cur_words.assign(begin, begin + static_cast<std::ptrdiff_t>(cur));
  chunk.fut_words.assign(begin + static_cast<std::ptrdiff_t>(cur), begin + static_cast<std::ptrdiff_t>(cur + fut));
  cursor_ += cur;
  done_ = is_final;
  return chunk;
}

ModelInput build_input(const Chunk& chunk, const Tokenizer& tokenizer, const StreamConfig& cfg) {
  ModelInput in;
  auto append_word = [&](const std::string& word) {
    TextTokens toks = tokenizer.encode_word(word);
    if (toks.empty() || toks.size() > static_cast<std::size_t>(cfg.max_text_tokens_per_word))
      throw Error(ErrorCode::TokenizationFailure,
                  "word '" + word + "' produced " + std::to_string(toks.size()) + " tokens");
    for (auto t : toks) {
      if (t.id == cfg.marker_id) throw Error(ErrorCode::TokenizationFailure, "word '" + word + "' encodes to the marker");
      if (t.id == cfg.unk_id) ++in.unk_count;
    }
    in.tokens.insert(in.tokens.end(), toks.begin(), toks.end());
  };

  for (const auto& w : chunk.cur_words) {
    in.cur_word_offsets.push_back(in.tokens.size());
    append_word(w);
  }
  in.cur_word_offsets.push_back(in.tokens.size());
  in.cur_token_count = in.tokens.size();

  if (chunk.is_final && !cfg.final_marker) return in;

  in.marker_position = in.tokens.size();
  in.tokens.push_back(TextToken{cfg.marker_id});
  for (const auto& w : chunk.fut_words) append_word(w);
  return in;
}

}  // namespace streamtts
