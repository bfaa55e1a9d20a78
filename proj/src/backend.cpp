// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/backend.hpp"

#include "json.hpp"

namespace streamtts {

using nlohmann::json;

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::MarkerStop: return "MarkerStop";
    case StopReason::EndOfSequence: return "EndOfSequence";
    case StopReason::CapTruncated: return "CapTruncated";
  }
  return "Unknown";
}

std::uint64_t mock_word_hash(std::span<const TextToken> tokens) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (auto t : tokens) {
    for (int b = 0; b < 4; ++b) {
      h ^= (t.id >> (8 * b)) & 0xFFu;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

std::uint32_t mock_token_value(std::uint64_t word_hash, std::uint32_t position, std::uint32_t prev_speech,
                               std::uint32_t speech_vocab_size) {
  const std::uint64_t key = (static_cast<std::uint64_t>(position) << 32) | prev_speech;
  return static_cast<std::uint32_t>(mix64(word_hash ^ mix64(key)) % speech_vocab_size);
}

MockBackend::MockBackend(const StreamConfig& cfg) : cfg_(cfg) { require_valid(cfg_); }

void MockBackend::generate(const SynthesisRequest& req, Clock& clock, const TokenSink& sink) {
  const ModelInput& in = req.input;
  const std::size_t words = in.cur_word_count();
  const std::size_t planned = words * static_cast<std::size_t>(cfg_.tokens_per_word);
  const std::uint32_t prev = req.prompt.speech.empty() ? 0 : req.prompt.speech.back().id;

  std::optional<std::size_t> fail_after;
  if (cfg_.fault_rate > 0.0) {
    SeededRng rng(derive_seed(cfg_.seed, req.request_id));
    if (bernoulli(rng, cfg_.fault_rate)) fail_after = rng.uniform_below(planned + 1);
  }

  clock.wait_ns(cfg_.prompt_latency_ns * static_cast<std::int64_t>(req.prompt.size() + in.tokens.size()));

  std::uint32_t position = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::span<const TextToken> word_tokens(in.tokens.data() + in.cur_word_offsets[w],
                                           in.cur_word_offsets[w + 1] - in.cur_word_offsets[w]);
    const std::uint64_t h = mock_word_hash(word_tokens);
    for (int i = 0; i < cfg_.tokens_per_word; ++i, ++position) {
      if (fail_after && position == *fail_after) {
        sink(TokenEvent::make_error("injected fault", clock.now_ns()));
        return;
      }
      if (position == req.max_tokens) {
        sink(TokenEvent::make_stop(StopReason::CapTruncated, clock.now_ns()));
        return;
      }
      clock.wait_ns(cfg_.token_latency_ns);
      sink(TokenEvent::make_token(SpeechToken{mock_token_value(h, position, prev, cfg_.speech_vocab_size)},
                                  clock.now_ns()));
    }
  }
  if (fail_after && position == *fail_after) {
    sink(TokenEvent::make_error("injected fault", clock.now_ns()));
    return;
  }
  sink(TokenEvent::make_stop(in.marker_position ? StopReason::MarkerStop : StopReason::EndOfSequence,
                             clock.now_ns()));
}

// ─── Wire format ─────────────────────────────────────────────────────────────

std::string request_to_wire_json(const SynthesisRequest& req, std::uint32_t marker_id) {
  json j;
  j["request_id"] = req.request_id;
  json pt = json::array();
  for (auto t : req.prompt.text) pt.push_back(t.id);
  json ps = json::array();
  for (auto s : req.prompt.speech) ps.push_back(s.id);
  json in = json::array();
  for (auto t : req.input.tokens) in.push_back(t.id);
  j["prompt_text"] = std::move(pt);
  j["prompt_speech"] = std::move(ps);
  j["input_tokens"] = std::move(in);
  j["marker_id"] = marker_id;
  j["max_tokens"] = req.max_tokens;
  return j.dump();
}

std::string wire_stop_name(StopReason r) {
  switch (r) {
    case StopReason::MarkerStop: return "marker";
    case StopReason::EndOfSequence: return "eos";
    case StopReason::CapTruncated: return "cap";
  }
  return "eos";
}

WireLine parse_wire_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.size() != 1)
    throw Error(ErrorCode::Parse, "malformed event line: " + std::string(line));
  WireLine out{};
  if (auto it = j.find("t"); it != j.end()) {
    if (!it->is_number_unsigned() || it->get<std::uint64_t>() > UINT32_MAX)
      throw Error(ErrorCode::Parse, "token event needs a non-negative 32-bit integer");
    out.kind = WireLine::Kind::Token;
    out.token = it->get<std::uint32_t>();
    return out;
  }
  if (auto it = j.find("stop"); it != j.end()) {
    out.kind = WireLine::Kind::Stop;
    const std::string s = it->is_string() ? it->get<std::string>() : "";
    if (s == "marker") out.stop = StopReason::MarkerStop;
    else if (s == "eos") out.stop = StopReason::EndOfSequence;
    else if (s == "cap") out.stop = StopReason::CapTruncated;
    else throw Error(ErrorCode::Parse, "unknown stop reason: " + std::string(line));
    return out;
  }
  if (auto it = j.find("error"); it != j.end()) {
    out.kind = WireLine::Kind::Error;
    out.error = it->is_string() ? it->get<std::string>() : it->dump();
    return out;
  }
  throw Error(ErrorCode::Parse, "unknown event: " + std::string(line));
}

}  // namespace streamtts
