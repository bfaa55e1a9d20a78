// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "json.hpp"
#include "streamtts/io.hpp"
#include "streamtts/pipeline.hpp"
#include "test_util.hpp"

using namespace streamtts;

namespace {

StreamConfig simulated() {
  StreamConfig cfg;
  cfg.simulated_time = true;
  return cfg;
}

std::string numbered_text(int n) {
  std::string s;
  for (int i = 1; i <= n; ++i) s += (i > 1 ? " " : "") + ("word" + std::to_string(i));
  return s;
}

Reference fixture_reference() { return load_reference(testutil::fixture("reference.json")); }

}  // namespace

TEST_CASE("reference parsing") {
  auto r = fixture_reference();
  CHECK(r.text.size() == 8);
  CHECK(r.speech.size() == 30);
  // A corpus JSONL file works too: its first record is used.
  auto c = load_reference(testutil::fixture("corpus.jsonl"));
  CHECK_FALSE(c.text.empty());
  CHECK_THROWS_AS(parse_reference("{\"text_tokens\": [1]}"), Error);
  CHECK_THROWS_AS(parse_reference("nope"), Error);
  CHECK_THROWS_AS(load_reference("/nonexistent/ref.json"), Error);
}

TEST_CASE("backend and clock factories") {
  StreamConfig cfg;
  CHECK(dynamic_cast<MockBackend*>(make_backend(cfg).get()) != nullptr);
  cfg.backend = "http";
  CHECK(dynamic_cast<RemoteBackend*>(make_backend(cfg).get()) != nullptr);
  cfg.backend = "grpc";
  CHECK_THROWS_AS(make_backend(cfg), Error);
  cfg.simulated_time = true;
  CHECK(dynamic_cast<SimulatedClock*>(make_clock(cfg).get()) != nullptr);
}

TEST_CASE("nine words end to end") {
  const auto cfg = simulated();
  HashTokenizer tok(cfg);
  auto out = run_text(cfg, fixture_reference(), "the quick brown fox jumps over the lazy dog", tok);
  CHECK(out.words == 9);
  CHECK(out.summary.chunks == 2);
  CHECK(out.report.total_tokens == 90);
  CHECK(out.samples == 90 * 960);
  CHECK(out.summary.stop_reasons.at("MarkerStop") == 1);
  CHECK(out.summary.stop_reasons.at("EndOfSequence") == 1);
  CHECK(out.report.audio_duration_s == doctest::Approx(3.6));
  CHECK(out.report.chunks.size() == 2);
}

TEST_CASE("long stream: every chunk but the last stops at the marker") {
  const auto cfg = simulated();
  HashTokenizer tok(cfg);
  auto out = run_text(cfg, fixture_reference(), numbered_text(300), tok);
  CHECK(out.summary.chunks == 60);
  CHECK(out.summary.stop_reasons.at("MarkerStop") == 59);
  CHECK(out.summary.stop_reasons.at("EndOfSequence") == 1);
  CHECK(out.summary.stop_reasons.size() == 2);
  CHECK(out.report.chunks.back().stop_reason == "EndOfSequence");
  CHECK(out.report.total_tokens == 3000);
}

TEST_CASE("context does not grow with stream length") {
  const auto cfg = simulated();
  HashTokenizer tok(cfg);
  std::size_t steady = 0;
  for (int n : {20, 100, 400}) {
    // Same words repeated, so the steady-state context is identical.
    std::string text;
    for (int i = 0; i < n; ++i) text += "lorem ";
    auto out = run_text(cfg, fixture_reference(), text, tok);
    CHECK(out.summary.peak_context_steady <= context_bound(cfg));
    if (steady == 0) steady = out.summary.peak_context_steady;
    CHECK(out.summary.peak_context_steady == steady);
  }

  auto varied = run_text(cfg, fixture_reference(), numbered_text(500), tok);
  CHECK(varied.summary.peak_context_steady <= context_bound(cfg));
}

TEST_CASE("simulated TTFA matches the latency model") {
  StreamConfig cfg = simulated();
  cfg.k = 5;
  cfg.f = 3;
  cfg.prompt_latency_ns = 1'000'000;
  cfg.token_latency_ns = 10'000'000;
  cfg.emit_group_g = 25;
  std::map<std::string, TextTokens> table;
  for (int i = 1; i <= 9; ++i) table["w" + std::to_string(i)] = {TextToken{static_cast<std::uint32_t>(i)}};
  VocabTokenizer tok(table, cfg.unk_id);
  Reference ref;
  for (std::uint32_t i = 0; i < 10; ++i) ref.text.push_back(TextToken{600 + i});
  for (std::uint32_t i = 0; i < 40; ++i) ref.speech.push_back(SpeechToken{i});

  // 50 reference tokens + 9 input tokens at 1 ms, then 25 tokens at 10 ms.
  auto out = run_text(cfg, ref, "w1 w2 w3 w4 w5 w6 w7 w8 w9", tok);
  CHECK(out.report.ttfa_ns == 309'000'000);
  CHECK(out.report.ttfa_ms == doctest::Approx(309.0));

  // A group larger than the first chunk's output waits for its flush.
  cfg.emit_group_g = 80;
  auto late = run_text(cfg, ref, "w1 w2 w3 w4 w5 w6 w7 w8 w9", tok);
  CHECK(late.report.ttfa_ns == 59'000'000 + 50 * 10'000'000);
}

TEST_CASE("simulated RTF tends to token latency times frame rate") {
  StreamConfig cfg = simulated();
  cfg.prompt_latency_ns = 0;
  HashTokenizer tok(cfg);
  auto exact = run_text(cfg, fixture_reference(), numbered_text(50), tok);
  CHECK(exact.report.rtf == doctest::Approx(0.25));

  cfg.prompt_latency_ns = 1'000'000;
  auto short_run = run_text(cfg, fixture_reference(), numbered_text(20), tok);
  auto long_run = run_text(cfg, fixture_reference(), numbered_text(1000), tok);
  CHECK(short_run.report.rtf > 0.25);
  CHECK(long_run.report.rtf > 0.25);
  // Per-chunk prompt cost is bounded, so the overhead ratio is too.
  CHECK(long_run.report.rtf < 0.25 * (1.0 + static_cast<double>(context_bound(cfg)) * 1e6 / (50 * 1e7)));
  CHECK(is_real_time(long_run.report.rtf));
}

TEST_CASE("incremental arrival") {
  StreamConfig cfg = simulated();
  HashTokenizer tok(cfg);
  MockBackend backend(cfg);
  SimulatedClock clock;
  StreamPipeline p("live", cfg, fixture_reference(), tok, backend, clock);
  p.push_text("one two three");
  CHECK(p.session().t() == 0);
  p.push_text("four five six", 5'000'000'000);
  CHECK(clock.now_ns() >= 5'000'000'000);
  p.push_text("seven");
  CHECK(p.session().t() == 1);
  CHECK_THROWS_AS(p.report("x"), Error);
  auto s = p.finish();
  CHECK(s.chunks == 2);
  CHECK(p.words_received() == 7);
  CHECK_THROWS_AS(p.finish(), Error);

  // Chunking is the same as for the whole text at once.
  auto batch = run_text(cfg, fixture_reference(), "one two three four five six seven", tok);
  CHECK(p.emitter().total_tokens() == batch.report.total_tokens);

  const auto dir = testutil::scratch_dir("pipeline_wav");
  const auto wav = (dir / "out.wav").string();
  p.write_wav(wav);
  CHECK(read_wav(wav).samples.size() == p.emitter().total_samples());
}

TEST_CASE("backend failure surfaces with partial audio") {
  StreamConfig cfg = simulated();
  cfg.fault_rate = 1.0;
  HashTokenizer tok(cfg);
  MockBackend backend(cfg);
  SimulatedClock clock;
  StreamPipeline p("f", cfg, fixture_reference(), tok, backend, clock);
  try {
    p.push_text(numbered_text(20));
    FAIL("expected BackendFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendFailure);
  }
  CHECK(p.session().status() == SessionStatus::Failed);
}

TEST_CASE("scenario parsing") {
  auto s = load_scenario(testutil::fixture("scenario.json"));
  REQUIRE(s.utterances.size() == 2);
  CHECK(s.utterances[0].id == "short");
  CHECK(s.utterances[0].hypothesis.has_value());
  CHECK_FALSE(s.utterances[1].hypothesis.has_value());
  CHECK(s.reference_for(s.utterances[1]).speech.size() == 30);

  auto unnamed = parse_scenario(R"({"utterances": [{"text": "a b"}]})");
  CHECK(unnamed.utterances[0].id == "u1");
  CHECK_THROWS_AS(unnamed.reference_for(unnamed.utterances[0]), Error);
  CHECK_THROWS_AS(parse_scenario(R"({"utterances": [{"id": "x"}]})"), Error);
  CHECK_THROWS_AS(parse_scenario(R"({"cases": []})"), Error);
  CHECK(parse_scenario(R"({"utterances": []})").utterances.empty());
}

TEST_CASE("bench") {
  const auto cfg = simulated();
  HashTokenizer tok(cfg);
  const auto s = load_scenario(testutil::fixture("scenario.json"));
  auto r = run_bench(cfg, s, tok, 5, 2, 1);
  CHECK(r.succeeded == 2);
  REQUIRE(r.utterances.size() == 2);
  for (const auto& u : r.utterances) {
    CHECK(u.protocol.warmups == 2);
    CHECK(u.protocol.trial_count == 5);
    // Simulated time: every trial is identical.
    CHECK(u.protocol.ttfa_std_ms == 0.0);
  }
  REQUIRE(r.utterances[0].wer.has_value());
  CHECK(*r.utterances[0].wer == doctest::Approx(1.0 / 9.0));

  auto parallel = run_bench(cfg, s, tok, 5, 2, 2);
  CHECK(bench_to_json(parallel) == bench_to_json(r));
  CHECK(bench_to_csv(parallel) == bench_to_csv(r));

  auto j = nlohmann::json::parse(bench_to_json(r));
  CHECK(j["config"]["k"] == "5");
  CHECK(j["utterances"].size() == 2);
  CHECK(bench_to_csv(r).rfind("id,status,warmups,trials,", 0) == 0);

  CHECK_THROWS_AS(run_bench(cfg, Scenario{}, tok), Error);
  StreamConfig bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(run_bench(bad, s, tok), Error);
}

TEST_CASE("bench isolates a failing utterance") {
  const auto cfg = simulated();
  HashTokenizer tok(cfg);
  auto s = parse_scenario(R"({"utterances": [{"id": "noref", "text": "a b"}]})");
  s.utterances.push_back(load_scenario(testutil::fixture("scenario.json")).utterances[0]);
  s.utterances.back().reference = fixture_reference();
  auto r = run_bench(cfg, s, tok, 2, 0, 2);
  CHECK(r.succeeded == 1);
  CHECK_FALSE(r.utterances[0].ok());
  CHECK(r.utterances[1].ok());
}

TEST_CASE("sweep is deterministic under simulated time") {
  const auto cfg = simulated();
  HashTokenizer tok(cfg);
  const auto s = load_scenario(testutil::fixture("scenario.json"));
  auto a = run_sweep(cfg, s, tok, {1, 4}, {1, 3});
  auto b = run_sweep(cfg, s, tok, {1, 4}, {1, 3});
  CHECK(a.cells.size() == 9);
  CHECK(grid_to_csv(a) == grid_to_csv(b));
  for (const auto& c : a.cells) {
    REQUIRE(c.ok());
    CHECK(c.report->k == c.k);
    CHECK(c.report->f == c.f);
    CHECK(c.report->config.at("k") == std::to_string(c.k));
    // Only the short utterance has a hypothesis: one substitution in 9.
    CHECK(*c.report->wer == doctest::Approx(1.0 / 9.0));
  }
}
