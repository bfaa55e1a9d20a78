// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/trainprep.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "json.hpp"
#include "streamtts/io.hpp"

namespace streamtts {

using nlohmann::json;

ExampleMode sample_mode(SeededRng& rng, double p_full) {
  return bernoulli(rng, p_full) ? ExampleMode::Full : ExampleMode::Truncated;
}

TextTokens insert_boundary(const AlignedUtterance& utt, int m, const StreamConfig& cfg) {
  if (m < 1 || static_cast<std::size_t>(m) > utt.words.size())
    throw Error(ErrorCode::IndexOutOfRange,
                "word index " + std::to_string(m) + " outside 1.." + std::to_string(utt.words.size()));
  const WordAlignment& w = utt.words[static_cast<std::size_t>(m - 1)];
  if (!w.aligned)
    throw Error(ErrorCode::UnalignedBoundaryWord, "word " + std::to_string(m) + " has no timestamps");
  if (!w.has_tokens())
    throw Error(ErrorCode::UnalignedBoundaryWord, "word " + std::to_string(m) + " has an empty token span");
  if (w.token_end > utt.text_tokens.size())
    throw Error(ErrorCode::IndexOutOfRange, "word span exceeds text length");

  const auto split = static_cast<std::ptrdiff_t>(w.token_end);
  TextTokens out;
  out.reserve(utt.text_tokens.size() + 1);
  out.insert(out.end(), utt.text_tokens.begin(), utt.text_tokens.begin() + split);
  out.push_back(TextToken{cfg.marker_id});
  out.insert(out.end(), utt.text_tokens.begin() + split, utt.text_tokens.end());
  return out;
}

TextTokens strip_marker(const TextTokens& tokens, std::uint32_t marker_id) {
  TextTokens out;
  out.reserve(tokens.size());
  std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out),
               [marker_id](TextToken t) { return t.id != marker_id; });
  return out;
}

std::int64_t seconds_to_ms(double seconds) {
  return std::llround(seconds * 1000.0);
}

std::size_t truncated_length(std::int64_t a_ms, std::size_t available, const StreamConfig& cfg,
                             bool* clamped) {
  if (a_ms < 0) throw Error(ErrorCode::InvalidArgument, "negative boundary time");
  const std::int64_t frames = a_ms * cfg.r_s / 1000;
  auto length = static_cast<std::size_t>(std::max<std::int64_t>(cfg.ell_min, frames));
  const bool over = length > available;
  if (clamped != nullptr) *clamped = over;
  return over ? available : length;
}

Truncation truncate_speech(const AlignedUtterance& utt, double a_m_s, const StreamConfig& cfg) {
  if (!(a_m_s >= 0.0) || a_m_s > utt.audio_duration_s)
    throw Error(ErrorCode::InvalidArgument, "boundary time outside [0, duration]");
  Truncation t;
  const auto n = truncated_length(seconds_to_ms(a_m_s), utt.speech_tokens.size(), cfg, &t.clamped_to_length);
  t.tokens.assign(utt.speech_tokens.begin(), utt.speech_tokens.begin() + static_cast<std::ptrdiff_t>(n));
  return t;
}

TrainingExample make_example_with_mode(const AlignedUtterance& utt, SeededRng& rng,
                                       const StreamConfig& cfg, ExampleMode mode) {
  std::vector<int> eligible;
  for (const auto& w : utt.words)
    if (w.boundary_eligible()) eligible.push_back(w.word_index);
  if (eligible.empty())
    throw Error(ErrorCode::NoAlignedWords, "utterance " + utt.utterance_id + " has no aligned words");

  TrainingExample ex;
  ex.utterance_id = utt.utterance_id;
  ex.mode = mode;
  if (mode == ExampleMode::Full) {
    ex.input_tokens = utt.text_tokens;
    ex.target_tokens = utt.speech_tokens;
    return ex;
  }

  const int m = eligible[rng.uniform_below(eligible.size())];
  const WordAlignment& w = utt.words[static_cast<std::size_t>(m - 1)];
  ex.input_tokens = insert_boundary(utt, m, cfg);
  ex.marker_position = w.token_end;
  ex.boundary_word_m = m;
  const std::int64_t a_ms = seconds_to_ms(w.audio_end_s);
  ex.boundary_audio_ms = a_ms;
  const auto n = truncated_length(a_ms, utt.speech_tokens.size(), cfg, &ex.clamped_to_length);
  ex.target_tokens.assign(utt.speech_tokens.begin(), utt.speech_tokens.begin() + static_cast<std::ptrdiff_t>(n));
  return ex;
}

TrainingExample make_example(const AlignedUtterance& utt, SeededRng& rng, const StreamConfig& cfg) {
  if (std::none_of(utt.words.begin(), utt.words.end(), [](const auto& w) { return w.boundary_eligible(); }))
    throw Error(ErrorCode::NoAlignedWords, "utterance " + utt.utterance_id + " has no aligned words");
  const ExampleMode mode = sample_mode(rng, cfg.p_full);
  return make_example_with_mode(utt, rng, cfg, mode);
}

std::string example_to_json_line(const TrainingExample& ex, std::optional<int> epoch) {
  json j;
  j["id"] = ex.utterance_id;
  if (epoch) j["epoch"] = *epoch;
  j["mode"] = ex.mode == ExampleMode::Full ? "full" : "trunc";
  json in = json::array();
  for (auto t : ex.input_tokens) in.push_back(t.id);
  j["input_tokens"] = std::move(in);
  if (ex.marker_position) j["marker_pos"] = *ex.marker_position;
  if (ex.boundary_word_m) j["m"] = *ex.boundary_word_m;
  if (ex.boundary_audio_ms) j["a_m_ms"] = *ex.boundary_audio_ms;
  json tgt = json::array();
  for (auto s : ex.target_tokens) tgt.push_back(s.id);
  j["target_tokens"] = std::move(tgt);
  return j.dump();
}

std::vector<TrainingExample> prepare_examples(const Corpus& corpus, const StreamConfig& cfg, int epoch,
                                              PrepareSummary& summary) {
  const std::uint64_t epoch_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch));
  std::vector<TrainingExample> out;
  out.reserve(corpus.records.size());
  for (const auto& rec : corpus.records) {
    const auto& utt = rec.utterance;
    SeededRng rng(derive_seed(epoch_seed, utt.utterance_id));
    try {
      out.push_back(make_example(utt, rng, cfg));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoAlignedWords) throw;
      ++summary.skipped_no_aligned_words;
      summary.skipped_ids.push_back(utt.utterance_id);
    }
  }
  return out;
}

PrepareSummary prepare_corpus(const Corpus& corpus, const StreamConfig& cfg, const std::string& out_path,
                              int epochs) {
  require_valid(cfg);
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");

  PrepareSummary summary;
  summary.epochs = epochs;
  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;

  std::unordered_map<std::string, std::size_t> source_length;
  for (const auto& rec : corpus.records) source_length[rec.utterance.utterance_id] = rec.utterance.speech_tokens.size();

  PartialFile file(out_path);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& ex : prepare_examples(corpus, cfg, epoch, summary)) {
      ++summary.examples;
      if (ex.mode == ExampleMode::Full) {
        ++summary.full;
      } else {
        ++summary.truncated;
        if (ex.clamped_to_length) ++summary.clamp_events;
        if (const auto L = source_length[ex.utterance_id]; L > 0) {
          ratio_sum += static_cast<double>(ex.target_tokens.size()) / static_cast<double>(L);
          ++ratio_count;
        }
      }
      file.stream() << example_to_json_line(ex, epochs > 1 ? std::optional<int>(epoch) : std::nullopt) << '\n';
    }
  }
  file.commit();

  summary.mean_truncation_ratio = ratio_count == 0 ? 0.0 : ratio_sum / static_cast<double>(ratio_count);
  write_file_atomic(out_path + ".summary.json", summary_to_json(summary) + "\n");
  return summary;
}

std::string summary_to_json(const PrepareSummary& s) {
  json j;
  j["examples"] = s.examples;
  j["full"] = s.full;
  j["truncated"] = s.truncated;
  j["skipped_no_aligned_words"] = s.skipped_no_aligned_words;
  j["skipped_ids"] = s.skipped_ids;
  j["clamp_events"] = s.clamp_events;
  j["mean_truncation_ratio"] = s.mean_truncation_ratio;
  j["epochs"] = s.epochs;
  return j.dump();
}

}  // namespace streamtts
