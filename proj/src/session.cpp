// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/session.hpp"

#include <algorithm>

#include "json.hpp"

namespace streamtts {

std::size_t context_bound(const StreamConfig& cfg, std::size_t reference_size) {
  const auto k = static_cast<std::size_t>(cfg.k);
  const auto f = static_cast<std::size_t>(std::max(cfg.f, 0));
  const auto mt = static_cast<std::size_t>(cfg.max_text_tokens_per_word);
  const auto ms = static_cast<std::size_t>(cfg.max_tokens_per_word);
  const std::size_t bound = k * mt + k * ms + (k + f) * mt + 1;
  return cfg.retain_reference ? bound + reference_size : bound;
}

std::string summary_to_json(const SessionSummary& s) {
  nlohmann::json j;
  j["chunks"] = s.chunks;
  j["total_speech_tokens"] = s.total_speech_tokens;
  j["stop_reasons"] = s.stop_reasons;
  j["peak_context"] = s.peak_context;
  j["peak_context_steady"] = s.peak_context_steady;
  j["context_bound"] = s.context_bound;
  j["unk_tokens"] = s.unk_tokens;
  return j.dump();
}

Session::Session(std::string session_id, Reference reference, const StreamConfig& cfg, const Tokenizer& tokenizer,
                 Clock& clock, TimingLog& log)
    : id_(std::move(session_id)),
      reference_(std::move(reference)),
      cfg_(cfg),
      tokenizer_(tokenizer),
      clock_(clock),
      log_(log) {
  require_valid(cfg_);
  if (reference_.text.empty() || reference_.speech.empty())
    throw Error(ErrorCode::EmptyReference, "reference text and speech must be nonempty");
  for (auto t : reference_.text)
    if (t.id == cfg_.marker_id) throw Error(ErrorCode::InvalidArgument, "reference text contains the marker");
  stats_.context_bound = context_bound(cfg_, reference_.text.size() + reference_.speech.size());
  if (log_.empty()) log_.record(EventKind::RequestSubmitted, clock_.now_ns());
}

Prompt Session::prompt_for() const {
  if (status_ != SessionStatus::Active) throw Error(ErrorCode::SessionNotActive, "session " + id_ + " is not active");
  if (t_ == 0) return Prompt{reference_.text, reference_.speech, PromptSource::Reference};

  Prompt p{last_cur_tokens_, last_speech_, PromptSource::PreviousChunk};
  if (cfg_.retain_reference) {
    p.text.insert(p.text.begin(), reference_.text.begin(), reference_.text.end());
    p.speech.insert(p.speech.begin(), reference_.speech.begin(), reference_.speech.end());
  }
  return p;
}

std::size_t Session::context_size(const ModelInput& next_input) const {
  std::size_t prompt = 0;
  if (t_ == 0) {
    prompt = reference_.text.size() + reference_.speech.size();
  } else {
    prompt = last_cur_tokens_.size() + last_speech_.size();
    if (cfg_.retain_reference) prompt += reference_.text.size() + reference_.speech.size();
  }
  return prompt + next_input.tokens.size();
}

GenerationResult Session::process_chunk(const Chunk& chunk, SynthesisBackend& backend, StreamEmitter& emitter) {
  if (status_ != SessionStatus::Active) throw Error(ErrorCode::SessionNotActive, "session " + id_ + " is not active");
  if (chunk.index != t_ + 1)
    throw Error(ErrorCode::ChunkIndexMismatch,
                "expected chunk " + std::to_string(t_ + 1) + ", got " + std::to_string(chunk.index));

  const int t = chunk.index;
  SynthesisRequest req;
  req.input = build_input(chunk, tokenizer_, cfg_);
  req.prompt = prompt_for();
  req.max_tokens = req.input.cur_word_count() * static_cast<std::size_t>(cfg_.max_tokens_per_word);
  req.request_id = id_ + "/" + std::to_string(t);

  GenerationResult result;
  result.context_size = req.prompt.size() + req.input.tokens.size();
  result.request_ns = clock_.now_ns();
  log_.record(EventKind::ChunkDispatched, result.request_ns, t);

  bool terminated = false;
  bool capped = false;
  std::optional<std::string> error;
  std::optional<StopReason> stop;

  backend.generate(req, clock_, [&](const TokenEvent& ev) {
    if (terminated) return;
    switch (ev.kind) {
      case TokenEvent::Kind::Token: {
        if (result.speech_tokens.size() == req.max_tokens) {
          capped = true;
          return;
        }
        const std::int64_t now = std::max(ev.ns, clock_.now_ns());
        if (result.speech_tokens.empty()) {
          result.first_token_ns = now;
          log_.record(EventKind::FirstToken, now, t);
        }
        result.last_token_ns = now;
        result.speech_tokens.push_back(ev.token);
        if (emitter.push_tokens(std::span<const SpeechToken>(&result.speech_tokens.back(), 1), t) > 0 &&
            !first_audio_logged_) {
          log_.record(EventKind::FirstAudioGroup, clock_.now_ns());
          first_audio_logged_ = true;
        }
        return;
      }
      case TokenEvent::Kind::Stop:
        stop = ev.stop;
        terminated = true;
        return;
      case TokenEvent::Kind::Error:
        error = ev.message;
        terminated = true;
        return;
    }
  });

  if (!terminated) error = "backend stream ended without a terminal event";
  if (error) {
    emitter.flush(t);
    status_ = SessionStatus::Failed;
    failure_ = *error;
    log_.record(EventKind::ChunkDone, clock_.now_ns(), t);
    throw Error(ErrorCode::BackendFailure, "chunk " + std::to_string(t) + ": " + *error);
  }

  result.stop_reason = capped ? StopReason::CapTruncated : *stop;
  if (emitter.flush(t) > 0 && !first_audio_logged_) {
    log_.record(EventKind::FirstAudioGroup, clock_.now_ns());
    first_audio_logged_ = true;
  }
  log_.record(EventKind::ChunkDone, clock_.now_ns(), t);

  ChunkStats cs;
  cs.t = t;
  cs.cur_words = chunk.cur_words.size();
  cs.lookahead_words = chunk.fut_words.size();
  cs.input_tokens = req.input.tokens.size();
  cs.speech_tokens = result.speech_tokens.size();
  cs.context_size = result.context_size;
  cs.stop_reason = std::string(to_string(result.stop_reason));
  cs.dispatch_ns = result.request_ns;
  cs.first_token_ns = result.first_token_ns;
  cs.done_ns = clock_.now_ns();
  chunk_stats_.push_back(std::move(cs));

  stats_.chunks = t;
  stats_.total_speech_tokens += result.speech_tokens.size();
  ++stats_.stop_reasons[std::string(to_string(result.stop_reason))];
  stats_.peak_context = std::max(stats_.peak_context, result.context_size);
  if (t >= 2) stats_.peak_context_steady = std::max(stats_.peak_context_steady, result.context_size);
  stats_.unk_tokens += req.input.unk_count;

  if (trace_on_) trace_.push_back(TraceEntry{req.prompt, req.input, result, chunk.fut_words});

  last_cur_tokens_ = req.input.cur_tokens();
  last_speech_ = result.speech_tokens;
  last_was_final_ = chunk.is_final;
  t_ = t;
  return result;
}

SessionSummary Session::finalize() {
  if (status_ != SessionStatus::Active) throw Error(ErrorCode::SessionNotActive, "session " + id_ + " is not active");
  if (t_ > 0 && !last_was_final_)
    throw Error(ErrorCode::FinalizeWhileChunksPending, "the final chunk has not been processed");
  status_ = SessionStatus::Finalized;
  log_.record(EventKind::StreamDone, clock_.now_ns());
  return stats_;
}

}  // namespace streamtts
