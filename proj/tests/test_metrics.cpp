// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "streamtts/io.hpp"
#include "streamtts/metrics.hpp"
#include "test_util.hpp"

using namespace streamtts;
using nlohmann::json;

namespace {

// Plain recursive edit distance over every alignment; exponential, fine for
// the short sequences used here.
std::size_t brute_edits(const std::vector<std::string>& r, std::size_t i, const std::vector<std::string>& h,
                        std::size_t j) {
  if (i == r.size()) return h.size() - j;
  if (j == h.size()) return r.size() - i;
  const std::size_t sub = brute_edits(r, i + 1, h, j + 1) + (r[i] == h[j] ? 0 : 1);
  const std::size_t del = brute_edits(r, i + 1, h, j) + 1;
  const std::size_t ins = brute_edits(r, i, h, j + 1) + 1;
  return std::min({sub, del, ins});
}

TimingLog log_with(std::int64_t submit, std::int64_t audio, std::int64_t done) {
  TimingLog log;
  log.record(EventKind::RequestSubmitted, submit);
  log.record(EventKind::ChunkDispatched, submit, 1);
  log.record(EventKind::FirstAudioGroup, audio, 1);
  log.record(EventKind::StreamDone, done);
  return log;
}

RunReport report(double ttfa_ms, double rtf, std::string id = "r") {
  RunReport r;
  r.id = std::move(id);
  r.k = 5;
  r.f = 2;
  r.ttfa_ms = ttfa_ms;
  r.ttfa_ns = static_cast<std::int64_t>(ttfa_ms * 1e6);
  r.rtf = rtf;
  r.audio_duration_s = 2.0;
  r.processing_time_s = rtf * 2.0;
  r.total_tokens = 50;
  return r;
}

}  // namespace

TEST_CASE("timing log rules") {
  TimingLog log;
  CHECK_THROWS_AS(log.record(EventKind::ChunkDispatched, 0, 1), Error);
  log.record(EventKind::RequestSubmitted, 10);
  CHECK_THROWS_AS(log.record(EventKind::RequestSubmitted, 20), Error);
  CHECK_THROWS_AS(log.record(EventKind::ChunkDispatched, 5, 1), Error);
  log.record(EventKind::FirstAudioGroup, 10, 1);
  CHECK_THROWS_AS(log.record(EventKind::FirstAudioGroup, 11, 2), Error);
  CHECK(log.first(EventKind::FirstAudioGroup) == 10);
  CHECK_FALSE(log.first(EventKind::StreamDone).has_value());
}

TEST_CASE("ttfa and rtf") {
  auto log = log_with(1'000'000, 301'000'000, 1'001'000'000);
  CHECK(ttfa_ns(log) == 300'000'000);
  CHECK(ttfa(log) == doctest::Approx(300.0));

  StreamConfig cfg;
  // 1 s of processing over 50 tokens at 25 Hz = 2 s of audio.
  CHECK(rtf(log, 50, cfg) == doctest::Approx(0.5));
  CHECK(rtf(log, 25, cfg) == doctest::Approx(1.0));
  CHECK(is_real_time(0.5));
  CHECK_FALSE(is_real_time(1.0));
  CHECK(rtf_from_durations(3.0, 6.0) == doctest::Approx(0.5));

  try {
    rtf(log, 0, cfg);
    FAIL("expected ZeroAudioDuration");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroAudioDuration);
  }
  CHECK_THROWS_AS(rtf_from_durations(1.0, 0.0), Error);

  TimingLog partial;
  partial.record(EventKind::RequestSubmitted, 0);
  try {
    ttfa_ns(partial);
    FAIL("expected MissingEvent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingEvent);
  }
  CHECK_THROWS_AS(rtf(partial, 10, cfg), Error);
  CHECK_THROWS_AS(ttfa_ns(TimingLog{}), Error);
}

TEST_CASE("measurement protocol") {
  int calls = 0;
  auto p = measure_protocol(
      [&](int run) {
        ++calls;
        CHECK(run == calls - 1);
        return report(100.0, 0.4);
      },
      50, 2);
  CHECK(calls == 52);
  CHECK(p.warmups == 2);
  CHECK(p.trial_count == 50);
  CHECK(p.trials.size() == 50);
  CHECK(p.ttfa_mean_ms == doctest::Approx(100.0));
  CHECK(p.ttfa_std_ms == 0.0);
  CHECK(p.rtf_std == 0.0);
  CHECK_FALSE(p.error.has_value());

  // Fails on the 6th measured run: 5 trials kept.
  auto failing = measure_protocol(
      [&](int run) {
        if (run == 7) throw Error(ErrorCode::BackendFailure, "boom");
        return report(static_cast<double>(run), 0.5);
      },
      50, 2);
  CHECK(failing.trial_count == 5);
  REQUIRE(failing.error.has_value());
  CHECK(failing.error->find("boom") != std::string::npos);
  CHECK(failing.ttfa_mean_ms == doctest::Approx(4.0));

  CHECK_THROWS_AS(measure_protocol([](int) { return RunReport{}; }, 0, 0), Error);
}

TEST_CASE("sample standard deviation") {
  CHECK(stddev_of({}) == 0.0);
  CHECK(stddev_of({3.0}) == 0.0);
  CHECK(stddev_of({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(1.2909944487));
  CHECK(mean_of({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(2.5));
}

TEST_CASE("WER worked examples") {
  CHECK(wer("the cat sat", "the cat sat") == 0.0);
  CHECK(wer("The cat, sat.", "the CAT sat") == 0.0);
  CHECK(wer("a b c d", "a x c") == doctest::Approx(0.5));
  CHECK(wer("a b", "x y z w") == doctest::Approx(2.0));
  auto d = wer_details({"a", "b", "c", "d"}, {"a", "x", "c"});
  CHECK(d.substitutions == 1);
  CHECK(d.deletions == 1);
  CHECK(d.insertions == 0);
  CHECK(d.reference_words == 4);
  try {
    wer("...", "a");
    FAIL("expected EmptyReference");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyReference);
  }
}

TEST_CASE("WER agrees with exhaustive alignment search") {
  SeededRng rng(99);
  const std::vector<std::string> alphabet{"a", "b", "c", "d"};
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> r, h;
    const auto nr = 1 + rng.uniform_below(6);
    const auto nh = rng.uniform_below(7);
    for (std::uint64_t j = 0; j < nr; ++j) r.push_back(alphabet[rng.uniform_below(4)]);
    for (std::uint64_t j = 0; j < nh; ++j) h.push_back(alphabet[rng.uniform_below(4)]);
    const auto d = wer_details(r, h);
    const auto edits = brute_edits(r, 0, h, 0);
    REQUIRE(d.substitutions + d.deletions + d.insertions == edits);
    REQUIRE(d.rate == doctest::Approx(static_cast<double>(edits) / static_cast<double>(r.size())));
    // Deletions minus insertions is fixed by the lengths.
    REQUIRE(static_cast<long>(d.deletions) - static_cast<long>(d.insertions) ==
            static_cast<long>(r.size()) - static_cast<long>(h.size()));
  }
}

TEST_CASE("admissible cells") {
  auto cells = admissible_cells(kDefaultChunkRange, kDefaultLookaheadRange);
  CHECK(cells.size() == 45);
  for (auto [k, f] : cells) CHECK(f <= k);
  CHECK(cells.front() == std::pair{1, 1});
  CHECK(cells.back() == std::pair{10, 6});
}

TEST_CASE("ablation sweep") {
  StreamConfig base;
  std::vector<std::pair<int, int>> seen;
  auto runner = [&](const StreamConfig& c) {
    seen.emplace_back(c.k, c.f);
    CHECK(c.ablation_grid);
    if (c.k == 3 && c.f == 2) throw Error(ErrorCode::BackendFailure, "cell failed");
    auto r = report(c.k * 10.0, 0.1 * c.f);
    r.k = c.k;
    r.f = c.f;
    return r;
  };
  std::vector<std::pair<int, int>> observed;
  auto grid = ablation_sweep(base, kDefaultChunkRange, kDefaultLookaheadRange, runner, {},
                             [&](const SweepCell& c) { observed.emplace_back(c.k, c.f); });
  CHECK(grid.cells.size() == 45);
  CHECK(grid.skipped_constraint == 15);
  CHECK(seen.size() == 45);
  CHECK(observed == seen);
  int headlines = 0, failed = 0;
  for (const auto& c : grid.cells) {
    headlines += c.headline;
    failed += !c.ok();
    if (c.headline) CHECK((c.k == 5 && c.f == 2));
  }
  CHECK(headlines == 1);
  CHECK(failed == 1);
  CHECK(grid.config.at("k") == "5");

  auto single = ablation_sweep(base, {5, 5}, {2, 2}, runner);
  REQUIRE(single.cells.size() == 1);
  CHECK(single.cells[0].headline);

  auto none = ablation_sweep(base, {2, 2}, {3, 3}, runner);
  CHECK(none.cells.empty());
  CHECK(none.skipped_constraint == 1);

  CHECK_THROWS_AS(ablation_sweep(base, {0, 3}, {1, 1}, runner), Error);
  CHECK_THROWS_AS(ablation_sweep(base, {3, 2}, {1, 1}, runner), Error);
}

TEST_CASE("sweep resume reuses completed cells") {
  StreamConfig base;
  int runs = 0;
  auto runner = [&](const StreamConfig& c) {
    ++runs;
    auto r = report(1.0, 0.1);
    r.k = c.k;
    r.f = c.f;
    return r;
  };
  auto first = ablation_sweep(base, {1, 3}, {1, 2}, runner);
  CHECK(runs == 5);
  std::map<std::pair<int, int>, RunReport> done;
  for (const auto& c : first.cells)
    if (c.k <= 2) done[{c.k, c.f}] = *c.report;
  runs = 0;
  auto again = ablation_sweep(base, {1, 3}, {1, 2}, runner, done);
  CHECK(runs == 2);
  int resumed = 0;
  for (const auto& c : again.cells) resumed += c.resumed;
  CHECK(resumed == 3);
  CHECK(grid_to_csv(first) == grid_to_csv(again));
}

TEST_CASE("report rendering") {
  auto a = report(12.5, 0.25, "with,comma");
  a.wer = 0.1;
  a.chunks.push_back(ChunkStats{1, 5, 2, 8, 50, 40, "MarkerStop", 1, 2, 3});
  a.config = {{"k", "5"}};
  auto b = report(10.0, 0.5, "b");

  const auto csv = reports_to_csv({a, b});
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "id,k,f,ttfa_ms,rtf,audio_duration_s,processing_time_s,wer,chunks,total_tokens,peak_context");
  std::getline(lines, line);
  CHECK(line == "\"with,comma\",5,2,12.500000,0.250000,2.000000,0.500000,0.100000,1,50,0");
  std::getline(lines, line);
  CHECK(line == "b,5,2,10.000000,0.500000,2.000000,1.000000,,0,50,0");

  CHECK(reports_from_json(reports_to_json({a, b})) == std::vector<RunReport>{a, b});
  CHECK(report_from_json(report_to_json(a)) == a);
  CHECK_THROWS_AS(report_from_json("{}"), Error);
  CHECK_THROWS_AS(reports_from_json("nope"), Error);

  const auto dir = testutil::scratch_dir("render");
  const std::string path = (dir / "r.csv").string();
  CHECK_THROWS_AS(render_report({}, ReportFormat::Csv, path), Error);
  CHECK_FALSE(std::filesystem::exists(path));
  render_report({a}, ReportFormat::Csv, path);
  CHECK(read_file(path) == reports_to_csv({a}));
  render_report({a}, ReportFormat::Json, path);
  CHECK(reports_from_json(read_file(path)).size() == 1);
}

TEST_CASE("grid serialization") {
  SweepGrid g;
  SweepCell ok{5, 2, true, report(1.0, 0.2), "", false};
  SweepCell bad{3, 2, false, std::nullopt, "backend down, retry", false};
  g.cells = {ok, bad};
  const auto csv = grid_to_csv(g);
  CHECK(csv.find("5,2,1,ok,") != std::string::npos);
  CHECK(csv.find("3,2,0,failed,,,,,,,,,\"backend down, retry\"") != std::string::npos);

  auto back = cell_from_json_line(cell_to_json_line(ok));
  REQUIRE(back.has_value());
  CHECK(back->report == ok.report);
  CHECK(back->headline);
  CHECK_FALSE(cell_from_json_line("{\"k\": 1").has_value());
  CHECK_FALSE(cell_from_json_line("[]").has_value());

  auto j = json::parse(grid_to_json(g));
  CHECK(j["cell_count"] == 2);
  CHECK(j["headline"]["k"] == 5);
}

TEST_CASE("metrics sink ordering and concurrency") {
  MetricsSink sink;
  std::vector<std::thread> threads;
  for (int s = 0; s < 8; ++s) {
    threads.emplace_back([&sink, s] {
      for (int i = 0; i < 50; ++i) {
        TimingLog log = log_with(i, i + 1, i + 2);
        sink.append("s" + std::to_string(s), log);
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(sink.size() == 8 * 50 * 4);

  std::istringstream lines(sink.to_jsonl());
  std::string line, prev_session;
  std::int64_t prev_ns = -1;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    auto j = json::parse(line);
    const auto session = j["session"].get<std::string>();
    const auto ns = j["ns"].get<std::int64_t>();
    if (session == prev_session) CHECK(ns >= prev_ns);
    else CHECK(session > prev_session);
    prev_session = session;
    prev_ns = ns;
    ++n;
  }
  CHECK(n == sink.size());

  // Ties keep arrival order.
  MetricsSink ordered;
  ordered.append("x", log_with(0, 0, 0));
  std::istringstream tie(ordered.to_jsonl());
  std::vector<std::string> kinds;
  while (std::getline(tie, line)) kinds.push_back(json::parse(line)["event"]);
  CHECK(kinds == std::vector<std::string>{"request_submitted", "chunk_dispatched", "first_audio_group", "stream_done"});
}
