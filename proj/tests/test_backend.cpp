// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "json.hpp"
#include "streamtts/backend.hpp"
#include "test_util.hpp"

using namespace streamtts;

namespace {

struct Collected {
  std::vector<SpeechToken> tokens;
  std::vector<TokenEvent> events;
  int terminals = 0;
  std::optional<StopReason> stop;
  std::string error;
};

Collected run(SynthesisBackend& backend, const SynthesisRequest& req, Clock& clock) {
  Collected c;
  backend.generate(req, clock, [&](const TokenEvent& ev) {
    c.events.push_back(ev);
    if (ev.kind == TokenEvent::Kind::Token) c.tokens.push_back(ev.token);
    if (ev.kind == TokenEvent::Kind::Stop) {
      ++c.terminals;
      c.stop = ev.stop;
    }
    if (ev.kind == TokenEvent::Kind::Error) {
      ++c.terminals;
      c.error = ev.message;
    }
  });
  return c;
}

// Token events carry non-decreasing timestamps and exactly one terminal
// event comes last.
bool well_formed(const Collected& c) {
  if (c.terminals != 1 || c.events.empty() || c.events.back().kind == TokenEvent::Kind::Token) return false;
  for (std::size_t i = 1; i < c.events.size(); ++i)
    if (c.events[i].ns < c.events[i - 1].ns) return false;
  return true;
}

SynthesisRequest request(const std::vector<std::vector<std::uint32_t>>& cur, const std::vector<std::uint32_t>& fut,
                         bool marker, const StreamConfig& cfg, std::uint32_t prev_speech = 77) {
  SynthesisRequest r;
  for (const auto& w : cur) {
    r.input.cur_word_offsets.push_back(r.input.tokens.size());
    for (auto id : w) r.input.tokens.push_back(TextToken{id});
  }
  r.input.cur_word_offsets.push_back(r.input.tokens.size());
  r.input.cur_token_count = r.input.tokens.size();
  if (marker) {
    r.input.marker_position = r.input.tokens.size();
    r.input.tokens.push_back(TextToken{cfg.marker_id});
    for (auto id : fut) r.input.tokens.push_back(TextToken{id});
  }
  r.prompt.text = {TextToken{9}};
  r.prompt.speech = {SpeechToken{1}, SpeechToken{prev_speech}};
  r.max_tokens = cur.size() * static_cast<std::size_t>(cfg.max_tokens_per_word);
  r.request_id = "s/1";
  return r;
}

std::vector<std::uint32_t> ids(const std::vector<SpeechToken>& v) {
  std::vector<std::uint32_t> out;
  for (auto t : v) out.push_back(t.id);
  return out;
}

}  // namespace

TEST_CASE("mock: five current words give 50 tokens and MarkerStop") {
  StreamConfig cfg;
  MockBackend mock(cfg);
  SimulatedClock clock;
  auto c = run(mock, request({{1}, {2}, {3}, {4}, {5}}, {6, 7}, true, cfg), clock);
  CHECK(c.tokens.size() == 50);
  CHECK(c.stop == StopReason::MarkerStop);
  CHECK(well_formed(c));
}

TEST_CASE("mock: final chunk of three words gives 30 tokens and EndOfSequence") {
  StreamConfig cfg;
  MockBackend mock(cfg);
  SimulatedClock clock;
  auto c = run(mock, request({{1}, {2, 3}, {4}}, {}, false, cfg), clock);
  CHECK(c.tokens.size() == 30);
  CHECK(c.stop == StopReason::EndOfSequence);
}

// Values from a separate Python implementation of the mixing function.
TEST_CASE("mock: frozen token values") {
  StreamConfig cfg;
  cfg.tokens_per_word = 3;
  MockBackend mock(cfg);
  SimulatedClock clock;
  auto c = run(mock, request({{1, 2}, {3}}, {}, true, cfg, 77), clock);
  CHECK(ids(c.tokens) == std::vector<std::uint32_t>{3440, 780, 292, 812, 4054, 1100});
  CHECK(mock_token_value(mock_word_hash(std::vector<TextToken>{TextToken{1}, TextToken{2}}), 5, 77, 4096) == 3241);
  CHECK(mock_word_hash(std::vector<TextToken>{TextToken{1}, TextToken{2}}) == 0xc9c28939c99668c6ULL);

  auto no_prompt = request({{1, 2}, {3}}, {}, true, cfg);
  no_prompt.prompt.speech.clear();
  CHECK(ids(run(mock, no_prompt, clock).tokens) == std::vector<std::uint32_t>{3971, 3088, 741, 2413, 3448, 1301});
}

TEST_CASE("mock: deterministic and prompt sensitive") {
  StreamConfig cfg;
  MockBackend mock(cfg);
  SimulatedClock clock;
  const auto req = request({{10, 11}, {12}}, {13}, true, cfg, 5);
  CHECK(ids(run(mock, req, clock).tokens) == ids(run(mock, req, clock).tokens));
  const auto other = request({{10, 11}, {12}}, {13}, true, cfg, 6);
  CHECK(ids(run(mock, req, clock).tokens) != ids(run(mock, other, clock).tokens));
}

TEST_CASE("mock: output ignores lookahead content") {
  StreamConfig cfg;
  MockBackend mock(cfg);
  SimulatedClock clock;
  SeededRng rng(31);
  const auto base = ids(run(mock, request({{10}, {11, 12}}, {1}, true, cfg), clock).tokens);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::uint32_t> fut;
    const auto n = rng.uniform_below(12);
    for (std::uint64_t j = 0; j < n; ++j) fut.push_back(static_cast<std::uint32_t>(rng.uniform_below(30000)));
    CHECK(ids(run(mock, request({{10}, {11, 12}}, fut, true, cfg), clock).tokens) == base);
  }
}

TEST_CASE("mock: simulated timing") {
  StreamConfig cfg;
  cfg.prompt_latency_ns = 1'000'000;
  cfg.token_latency_ns = 10'000'000;
  MockBackend mock(cfg);
  SimulatedClock clock;
  auto req = request({{1}, {2}}, {3}, true, cfg);
  const auto ctx = static_cast<std::int64_t>(req.prompt.size() + req.input.tokens.size());
  auto c = run(mock, req, clock);
  REQUIRE(c.tokens.size() == 20);
  CHECK(c.events[0].ns == ctx * 1'000'000 + 10'000'000);
  CHECK(c.events[19].ns == ctx * 1'000'000 + 20 * 10'000'000);
  CHECK(clock.now_ns() == ctx * 1'000'000 + 20 * 10'000'000);
}

TEST_CASE("mock: cap is enforced") {
  StreamConfig cfg;
  cfg.tokens_per_word = 10;
  cfg.max_tokens_per_word = 10;
  MockBackend mock(cfg);
  SimulatedClock clock;
  auto req = request({{1}, {2}}, {}, true, cfg);
  req.max_tokens = 15;
  auto c = run(mock, req, clock);
  CHECK(c.tokens.size() == 15);
  CHECK(c.stop == StopReason::CapTruncated);
  CHECK(well_formed(c));
}

TEST_CASE("mock: fault injection keeps streams well formed") {
  StreamConfig cfg;
  cfg.fault_rate = 0.5;
  MockBackend mock(cfg);
  SimulatedClock clock;
  int errors = 0;
  for (int i = 0; i < 200; ++i) {
    auto req = request({{1}, {2}, {3}}, {4}, true, cfg);
    req.request_id = "s/" + std::to_string(i);
    auto c = run(mock, req, clock);
    CHECK(well_formed(c));
    if (!c.error.empty()) {
      ++errors;
      CHECK(c.tokens.size() <= 30);
    } else {
      CHECK(c.tokens.size() == 30);
    }
  }
  CHECK(errors > 50);
  CHECK(errors < 150);
}

TEST_CASE("wire request and lines") {
  StreamConfig cfg;
  auto req = request({{1}, {2}}, {3}, true, cfg);
  auto j = nlohmann::json::parse(request_to_wire_json(req, cfg.marker_id));
  CHECK(j["request_id"] == "s/1");
  CHECK(j["input_tokens"] == nlohmann::json({1, 2, cfg.marker_id, 3}));
  CHECK(j["prompt_text"] == nlohmann::json({9}));
  CHECK(j["prompt_speech"] == nlohmann::json({1, 77}));
  CHECK(j["marker_id"] == cfg.marker_id);
  CHECK(j["max_tokens"] == 80);

  CHECK(parse_wire_line(R"({"t": 12})").kind == WireLine::Kind::Token);
  CHECK(parse_wire_line(R"({"t": 12})").token == 12);
  CHECK(parse_wire_line(R"({"stop": "marker"})").stop == StopReason::MarkerStop);
  CHECK(parse_wire_line(R"({"stop": "eos"})").stop == StopReason::EndOfSequence);
  CHECK(parse_wire_line(R"({"stop": "cap"})").stop == StopReason::CapTruncated);
  CHECK(parse_wire_line(R"({"error": "oom"})").error == "oom");
  for (auto bad : {"", "{", R"({"t": -1})", R"({"t": "x"})", R"({"stop": "later"})", R"({"t": 1, "stop": "eos"})",
                   R"({"what": 1})", "[1]"})
    CHECK_THROWS_AS(parse_wire_line(bad), Error);
  for (auto r : {StopReason::MarkerStop, StopReason::EndOfSequence, StopReason::CapTruncated})
    CHECK(parse_wire_line("{\"stop\": \"" + wire_stop_name(r) + "\"}").stop == r);
}

TEST_CASE("line buffer splits across arbitrary chunk boundaries") {
  const std::string body = "{\"t\": 1}\r\n{\"t\": 2}\n\n{\"stop\": \"eos\"}\n";
  for (std::size_t step = 1; step <= body.size(); ++step) {
    LineBuffer buf;
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < body.size(); i += step)
      buf.feed(std::string_view(body).substr(i, step), [&](std::string_view l) {
        lines.emplace_back(l);
        return true;
      });
    CHECK(lines == std::vector<std::string>{"{\"t\": 1}", "{\"t\": 2}", "{\"stop\": \"eos\"}"});
    CHECK(buf.pending().empty());
  }
}

TEST_CASE("remote endpoint parsing") {
  CHECK_NOTHROW(RemoteBackend("http://127.0.0.1:8080", 1000, 1));
  CHECK_NOTHROW(RemoteBackend("http://localhost:8080/api/", 1000, 1));
  CHECK_NOTHROW(RemoteBackend("localhost", 1000, 1));
  CHECK_THROWS_AS(RemoteBackend("https://x:1", 1000, 1), Error);
  CHECK_THROWS_AS(RemoteBackend("http://x:port", 1000, 1), Error);
  CHECK_THROWS_AS(RemoteBackend("http://:80", 1000, 1), Error);
}
