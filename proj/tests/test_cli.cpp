// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(STREAMTTS_FIXTURES) + "/" + name; }

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("streamtts_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr together
};

// Runs the CLI through the shell with the given arguments.
Run cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(STREAMTTS_CLI) + " " + args + " 2>&1";
  Run r;
  std::FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

bool has_partial_files(const fs::path& dir) {
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().string().find(".partial") != std::string::npos) return true;
  return false;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("cli: usage errors") {
  CHECK(cli("").code == 1);
  CHECK(cli("--bogus").code == 1);
  CHECK(cli("--help").code == 0);
  CHECK(cli("--version").code == 0);
  auto bad = cli("validate -k 0");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("ChunkSizeZero") != std::string::npos);
  CHECK(cli("validate --set nonsense").code == 1);
  CHECK(cli("validate --set unknown_key=1").code == 1);
}

TEST_CASE("cli: validate shows precedence of file, env and flags") {
  const auto dir = scratch("validate");
  std::ofstream(dir / "c.toml") << "seed = 1\nk = 4\nf = 1\n";
  auto r = cli("validate --config " + q(dir / "c.toml") + " -f 2", "STREAMTTS_SEED=9");
  REQUIRE(r.code == 0);
  json j;
  std::istringstream(r.out) >> j;
  CHECK(j["k"] == "4");
  CHECK(j["f"] == "2");
  CHECK(j["seed"] == "9");
  json flag;
  std::istringstream(cli("validate --seed 3", "STREAMTTS_SEED=9").out) >> flag;
  CHECK(flag["seed"] == "3");
}

TEST_CASE("cli: prepare") {
  const auto dir = scratch("prepare");
  auto r = cli("prepare " + q(fixture("corpus.jsonl")) + " -o " + q(dir / "a.jsonl") + " --seed 7");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "a.jsonl"));
  CHECK(fs::exists(dir / "a.jsonl.summary.json"));
  CHECK(json::parse(r.out)["prepare"]["examples"] == 3);

  CHECK(cli("prepare " + q(fixture("corpus.jsonl")) + " -o " + q(dir / "b.jsonl") + " --seed 7").code == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(cli("prepare " + q(fixture("corpus.jsonl")) + " -o " + q(dir / "c.jsonl") + " --seed 8").code == 0);
  CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));

  auto blocked = cli("prepare " + q(fixture("corpus.jsonl")) + " -o " + q(dir / "d.jsonl") + " --blocklist " +
                     q(fixture("blocklist.txt")));
  CHECK(blocked.code == 0);
  CHECK(json::parse(blocked.out)["filtered_eval_overlap"] == 1);

  auto missing = cli("prepare /nonexistent/corpus.jsonl -o " + q(dir / "e.jsonl"));
  CHECK(missing.code == 1);
  CHECK(missing.out.find("/nonexistent/corpus.jsonl") != std::string::npos);
  CHECK_FALSE(has_partial_files(dir));
}

TEST_CASE("cli: stream nine words") {
  const auto dir = scratch("stream");
  auto r = cli("stream " + q(fixture("nine_words.txt")) + " --reference " + q(fixture("reference.json")) + " -o " +
               q(dir / "out.wav") + " --simulated-time --run-report " + q(dir / "run.json") + " --events " +
               q(dir / "events.jsonl") + " --summary " + q(dir / "summary.json"));
  REQUIRE(r.code == 0);
  CHECK(fs::file_size(dir / "out.wav") == 172844);
  const auto s = json::parse(slurp(dir / "summary.json"));
  CHECK(s["chunks"] == 2);
  CHECK(s["audio_tokens"] == 90);
  CHECK(json::parse(slurp(dir / "run.json"))["total_tokens"] == 90);
  CHECK(line_count(slurp(dir / "events.jsonl")) > 4);
  CHECK_FALSE(has_partial_files(dir));
}

TEST_CASE("cli: stdin with a feed rate matches file input") {
  const auto dir = scratch("stdin");
  const std::string common = " --reference " + q(fixture("reference.json")) + " --simulated-time";
  REQUIRE(cli("stream " + q(fixture("nine_words.txt")) + common + " -o " + q(dir / "file.wav")).code == 0);
  auto r = cli("stream -" + common + " -o " + q(dir / "stdin.wav") + " --feed-rate 3 < " +
               q(fixture("nine_words.txt")));
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "file.wav") == slurp(dir / "stdin.wav"));
}

TEST_CASE("cli: raw PCM output matches the WAV payload") {
  const auto dir = scratch("pcm");
  auto r = cli("stream " + q(fixture("nine_words.txt")) + " --reference " + q(fixture("reference.json")) +
               " --simulated-time -o " + q(dir / "a.wav") + " --pcm-out " + q(dir / "a.pcm"));
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "a.wav").substr(44) == slurp(dir / "a.pcm"));
}

TEST_CASE("cli: long stream") {
  const auto dir = scratch("long");
  {
    std::ofstream text(dir / "long.txt");
    for (int i = 1; i <= 300; ++i) text << "word" << i << (i % 17 == 0 ? "\n" : " ");
  }
  auto r = cli("stream " + q(dir / "long.txt") + " --reference " + q(fixture("reference.json")) +
               " --simulated-time -o " + q(dir / "long.wav") + " --summary " + q(dir / "s.json"));
  REQUIRE(r.code == 0);
  const auto s = json::parse(slurp(dir / "s.json"));
  CHECK(s["chunks"] == 60);
  CHECK(s["stop_reasons"]["MarkerStop"] == 59);
  CHECK(s["stop_reasons"]["EndOfSequence"] == 1);
  CHECK(s["peak_context_steady"].get<int>() <= s["context_bound"].get<int>());
  CHECK(fs::file_size(dir / "long.wav") == 44 + 3000u * 960 * 2);
}

TEST_CASE("cli: stream failure keeps partial audio and exits 2") {
  const auto dir = scratch("fault");
  auto r = cli("stream " + q(fixture("nine_words.txt")) + " --reference " + q(fixture("reference.json")) +
               " --simulated-time --set fault_rate=1 -o " + q(dir / "p.wav"));
  CHECK(r.code == 2);
  CHECK(fs::exists(dir / "p.wav"));
  CHECK(json::parse(r.out.substr(r.out.find('{')))["status"] == "failed");
}

TEST_CASE("cli: bench") {
  const auto dir = scratch("bench");
  auto r = cli("bench " + q(fixture("scenario.json")) + " -o " + q(dir / "b.json") +
               " --simulated-time --trials 3 --warmups 1 --jobs 2");
  REQUIRE(r.code == 0);
  const auto j = json::parse(slurp(dir / "b.json"));
  CHECK(j["config"]["k"] == "5");
  CHECK(j["utterances"].size() == 2);
  CHECK(j["utterances"][0]["trial_count"] == 3);

  REQUIRE(cli("bench " + q(fixture("scenario.json")) + " -o " + q(dir / "b.csv") +
              " --simulated-time --trials 2 --report csv")
              .code == 0);
  CHECK(line_count(slurp(dir / "b.csv")) == 3);

  std::ofstream(dir / "empty.json") << R"({"utterances": []})";
  auto empty = cli("bench " + q(dir / "empty.json") + " -o " + q(dir / "e.json"));
  CHECK(empty.code == 1);
  CHECK(empty.out.find("no utterances") != std::string::npos);

  CHECK(cli("bench " + q(fixture("scenario.json")) + " -o " + q(dir / "f.json") +
            " --simulated-time --trials 2 --set fault_rate=1")
            .code == 2);
  CHECK_FALSE(has_partial_files(dir));
}

TEST_CASE("cli: sweep") {
  const auto dir = scratch("sweep");
  const std::string base = "sweep " + q(fixture("scenario.json")) + " --simulated-time --report csv";
  auto r = cli(base + " -o " + q(dir / "grid.csv"));
  REQUIRE(r.code == 0);
  const auto grid = slurp(dir / "grid.csv");
  CHECK(line_count(grid) == 46);
  CHECK(json::parse(r.out)["skipped_constraint"] == 15);
  CHECK(grid.find("\n5,2,1,ok,") != std::string::npos);

  REQUIRE(cli(base + " -o " + q(dir / "one.csv") + " --k-range 5..5 --f-range 2..2").code == 0);
  CHECK(line_count(slurp(dir / "one.csv")) == 2);

  // Resume from a journal left by an interrupted run of the same grid.
  const auto resumed = dir / "resumed.csv";
  {
    REQUIRE(cli("sweep " + q(fixture("scenario.json")) + " --simulated-time -o " + q(dir / "part.json") +
                " --k-range 1..2 --f-range 1..6")
                .code == 0);
    const auto part = json::parse(slurp(dir / "part.json"));
    std::ofstream journal(resumed.string() + ".cells.jsonl.partial");
    for (const auto& c : part["cells"]) journal << c.dump() << "\n";
  }
  auto again = cli(base + " -o " + q(resumed) + " --resume");
  REQUIRE(again.code == 0);
  CHECK(json::parse(again.out)["resumed"] == 3);
  CHECK(slurp(resumed) == grid);

  CHECK(cli(base + " -o " + q(dir / "bad.csv") + " --k-range 5..1").code == 1);
  CHECK(cli(base + " -o " + q(dir / "bad.csv") + " --k-range x").code == 1);
  CHECK_FALSE(has_partial_files(dir));
}
