// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0
//
// streamtts: prepare | stream | bench | sweep | validate.
// Exit codes: 0 ok, 1 usage/config/IO, 2 pipeline failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "streamtts/streamtts.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPipeline = 2;

// Owns an stt-allocated string.
struct CStr {
  char* p = nullptr;
  ~CStr() { stt_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ConfigHandle {
  stt_config* h = nullptr;
  ~ConfigHandle() { stt_config_destroy(h); }
};

struct StreamHandle {
  stt_stream* h = nullptr;
  ~StreamHandle() { stt_stream_destroy(h); }
};

struct CommonFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied in command-line order
  std::string vocab;
  std::string report = "json";
};

void add_config_flags(CLI::App* cmd, CommonFlags& c) {
  auto set = [&c](const char* key) {
    return [&c, key](const std::string& v) { c.overrides.emplace_back(key, v); };
  };
  auto flag = [&c](const char* key) {
    return [&c, key](std::int64_t) { c.overrides.emplace_back(key, "true"); };
  };
  cmd->add_option("--config", c.config_path, "Config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option_function<std::string>("-k,--chunk-size", set("k"), "Words synthesized per chunk");
  cmd->add_option_function<std::string>("-f,--lookahead", set("f"), "Lookahead words after the marker");
  cmd->add_option_function<std::string>("--p-full", set("p_full"), "Probability of a full (unmarked) example");
  cmd->add_option_function<std::string>("--frame-rate", set("r_s"), "Speech tokens per second");
  cmd->add_option_function<std::string>("--min-frames", set("ell_min"), "Minimum truncated target length");
  cmd->add_option_function<std::string>("--marker-id", set("marker_id"), "Reserved boundary marker token id");
  cmd->add_option_function<std::string>("--seed", set("seed"), "Random seed");
  cmd->add_option_function<std::string>("--backend", set("backend"), "mock | http");
  cmd->add_option_function<std::string>("--endpoint", set("endpoint"), "HTTP backend base URL");
  cmd->add_option_function<std::string>("--emit-group", set("emit_group_g"), "Speech tokens per audio group");
  cmd->add_option_function<std::string>("--tokens-per-word", set("tokens_per_word"), "Mock backend tokens per word");
  cmd->add_flag_function("--simulated-time", flag("simulated_time"), "Use the simulated clock");
  cmd->add_flag_function("--final-marker", flag("final_marker"), "Append the marker to the final chunk too");
  cmd->add_flag_function("--retain-reference", flag("retain_reference"), "Keep the reference in every prompt");
  cmd->add_option_function<std::string>(
         "--set",
         [&c](const std::string& kv) {
           const auto eq = kv.find('=');
           if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
           c.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
         },
         "Set any config key (key=value); repeatable")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->trigger_on_parse();
}

void add_vocab_flag(CLI::App* cmd, CommonFlags& c) {
  cmd->add_option("--vocab", c.vocab, "Word -> token ids JSON (default: hashed tokens)")->check(CLI::ExistingFile);
}

void add_report_flag(CLI::App* cmd, CommonFlags& c) {
  cmd->add_option("--report", c.report, "Report format")->check(CLI::IsMember({"json", "csv"}));
}

int report_error(const std::string& what, stt_status s) {
  std::cerr << "streamtts: " << what << ": " << stt_last_error() << "\n";
  return s == STT_BACKEND ? kExitPipeline : kExitUsage;
}

// Config file, then STREAMTTS_SEED, then flags; validated before any work.
bool build_config(const CommonFlags& c, ConfigHandle& cfg) {
  if (stt_config_create(&cfg.h) != STT_OK) return report_error("config", STT_INTERNAL), false;
  if (!c.config_path.empty() && stt_config_load_file(cfg.h, c.config_path.c_str()) != STT_OK)
    return report_error(c.config_path, STT_INVALID_CONFIG), false;
  if (stt_config_apply_env(cfg.h) != STT_OK) return report_error("environment", STT_INVALID_CONFIG), false;
  for (const auto& [k, v] : c.overrides)
    if (stt_config_set(cfg.h, k.c_str(), v.c_str()) != STT_OK) return report_error(k, STT_INVALID_CONFIG), false;
  CStr report;
  if (stt_config_validate(cfg.h, &report.p) != STT_OK) {
    std::cerr << "streamtts: invalid configuration\n" << report.str();
    return false;
  }
  return true;
}

bool parse_range(const std::string& text, int& lo, int& hi) {
  auto sep = text.find("..");
  std::size_t skip = 2;
  if (sep == std::string::npos) {
    sep = text.find(':');
    skip = 1;
  }
  try {
    std::size_t used = 0;
    if (sep == std::string::npos) {
      lo = hi = std::stoi(text, &used);
      return used == text.size();
    }
    const std::string a = text.substr(0, sep), b = text.substr(sep + skip);
    lo = std::stoi(a, &used);
    if (used != a.size()) return false;
    hi = std::stoi(b, &used);
    return used == b.size() && lo <= hi;
  } catch (const std::exception&) {
    return false;
  }
}

// ─── prepare ─────────────────────────────────────────────────────────────────

struct PrepareArgs {
  std::string corpus, out, blocklist;
  int epochs = 1;
};

int cmd_prepare(const CommonFlags& c, const PrepareArgs& a) {
  ConfigHandle cfg;
  if (!build_config(c, cfg)) return kExitUsage;
  CStr summary;
  const stt_status s = stt_prepare(cfg.h, a.corpus.c_str(), a.out.c_str(),
                                   a.blocklist.empty() ? nullptr : a.blocklist.c_str(), a.epochs, &summary.p);
  if (s != STT_OK) return report_error("prepare " + a.corpus, s);
  std::cout << summary.str();
  return kExitOk;
}

// ─── stream ──────────────────────────────────────────────────────────────────

struct StreamArgs {
  std::string text_path = "-";
  std::string reference;
  std::string wav_out;
  std::string summary_out;
  std::string report_out;
  std::string events_out;
  std::string pcm_out;
  double feed_rate = 0.0;  // words per second; 0 = as fast as available
};

void write_pcm(const int16_t* samples, size_t count, int, void* user) {
  auto* out = static_cast<std::FILE*>(user);
  // Raw PCM is little-endian s16; this host is assumed little-endian too.
  std::fwrite(samples, sizeof(int16_t), count, out);
  std::fflush(out);
}

bool write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path + ".partial", std::ios::binary | std::ios::trunc);
  out << body;
  out.close();
  if (!out || std::rename((path + ".partial").c_str(), path.c_str()) != 0) {
    std::cerr << "streamtts: cannot write " << path << "\n";
    return false;
  }
  return true;
}

int cmd_stream(const CommonFlags& c, const StreamArgs& a) {
  ConfigHandle cfg;
  if (!build_config(c, cfg)) return kExitUsage;

  std::ifstream file;
  std::istream* in = &std::cin;
  if (a.text_path != "-") {
    file.open(a.text_path);
    if (!file) {
      std::cerr << "streamtts: cannot open " << a.text_path << "\n";
      return kExitUsage;
    }
    in = &file;
  }

  StreamHandle stream;
  stt_status s = stt_stream_create(cfg.h, a.reference.c_str(), c.vocab.empty() ? nullptr : c.vocab.c_str(), &stream.h);
  if (s != STT_OK) return report_error("stream " + a.reference, s);

  std::FILE* pcm = nullptr;
  std::string pcm_partial;
  if (!a.pcm_out.empty()) {
    if (a.pcm_out == "-") {
      pcm = stdout;
    } else {
      pcm_partial = a.pcm_out + ".partial";
      pcm = std::fopen(pcm_partial.c_str(), "wb");
      if (!pcm) {
        std::cerr << "streamtts: cannot open " << a.pcm_out << "\n";
        return kExitUsage;
      }
    }
    stt_stream_set_pcm_callback(stream.h, write_pcm, pcm);
  }
  std::ostream& info = a.pcm_out == "-" ? std::cerr : std::cout;

  // Each input line is one arrival batch. With --feed-rate, word i arrives at
  // i / rate seconds on the stream's clock.
  std::int64_t word_index = 0;
  std::string line;
  while (s == STT_OK && std::getline(*in, line)) {
    if (a.feed_rate <= 0) {
      s = stt_stream_push_text(stream.h, line.c_str(), -1);
      continue;
    }
    std::istringstream words(line);
    std::string w;
    while (s == STT_OK && words >> w) {
      const auto at = static_cast<std::int64_t>(static_cast<double>(word_index++) * 1e9 / a.feed_rate);
      s = stt_stream_push_text(stream.h, w.c_str(), at);
    }
  }
  if (s == STT_OK) s = stt_stream_finish(stream.h);

  int rc = kExitOk;
  if (s != STT_OK) {
    rc = report_error("stream", s);
    if (rc == kExitPipeline) std::cerr << "streamtts: partial audio flushed\n";
  }

  if (pcm && pcm != stdout) {
    std::fclose(pcm);
    std::rename(pcm_partial.c_str(), a.pcm_out.c_str());
  }
  // Audio produced before a failure is still written.
  if (!a.wav_out.empty() && stt_stream_write_wav(stream.h, a.wav_out.c_str()) != STT_OK)
    rc = std::max(rc, report_error("write " + a.wav_out, STT_IO));

  CStr summary;
  stt_stream_summary_json(stream.h, &summary.p);
  info << summary.str();
  if (!a.summary_out.empty() && !write_text(a.summary_out, summary.str())) rc = std::max(rc, kExitUsage);
  if (!a.events_out.empty()) {
    CStr ev;
    stt_stream_events_jsonl(stream.h, &ev.p);
    if (!write_text(a.events_out, ev.str())) rc = std::max(rc, kExitUsage);
  }
  if (!a.report_out.empty() && rc == kExitOk) {
    CStr rep;
    if (stt_stream_report_json(stream.h, &rep.p) != STT_OK) return report_error("report", STT_STATE);
    if (!write_text(a.report_out, rep.str())) rc = kExitUsage;
  }
  return rc;
}

// ─── bench / sweep ───────────────────────────────────────────────────────────

struct BenchArgs {
  std::string scenario, out;
  int trials = 50;
  int warmups = 2;
  int jobs = 1;
};

int cmd_bench(const CommonFlags& c, const BenchArgs& a) {
  ConfigHandle cfg;
  if (!build_config(c, cfg)) return kExitUsage;
  CStr summary;
  const stt_status s = stt_bench(cfg.h, a.scenario.c_str(), c.vocab.empty() ? nullptr : c.vocab.c_str(), a.trials,
                                 a.warmups, a.jobs, a.out.c_str(), c.report.c_str(), &summary.p);
  std::cout << summary.str();
  if (s != STT_OK) return report_error("bench " + a.scenario, s);
  return kExitOk;
}

struct SweepArgs {
  std::string scenario, out;
  std::string k_range = "1..10";
  std::string f_range = "1..6";
  bool resume = false;
};

int cmd_sweep(const CommonFlags& c, const SweepArgs& a) {
  int k_lo = 0, k_hi = 0, f_lo = 0, f_hi = 0;
  if (!parse_range(a.k_range, k_lo, k_hi) || !parse_range(a.f_range, f_lo, f_hi)) {
    std::cerr << "streamtts: ranges take the form LO..HI or N\n";
    return kExitUsage;
  }
  ConfigHandle cfg;
  if (!build_config(c, cfg)) return kExitUsage;
  CStr summary;
  const stt_status s = stt_sweep(cfg.h, a.scenario.c_str(), c.vocab.empty() ? nullptr : c.vocab.c_str(), k_lo, k_hi,
                                 f_lo, f_hi, a.out.c_str(), c.report.c_str(), a.resume ? 1 : 0, &summary.p);
  if (s != STT_OK) return report_error("sweep " + a.scenario, s);
  std::cout << summary.str();
  return kExitOk;
}

int cmd_validate(const CommonFlags& c) {
  ConfigHandle cfg;
  if (!build_config(c, cfg)) return kExitUsage;
  CStr snapshot, report;
  stt_config_to_json(cfg.h, &snapshot.p);
  stt_config_validate(cfg.h, &report.p);
  std::cout << snapshot.str() << report.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming TTS orchestration with prosodic boundary markers"};
  app.set_version_flag("--version", std::string(stt_version()));
  app.require_subcommand(1);

  CommonFlags common;

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Build marker-inserted training examples from an aligned corpus");
  add_config_flags(prepare, common);
  prepare->add_option("corpus", prep.corpus, "Corpus JSONL")->required();
  prepare->add_option("-o,--out", prep.out, "Output JSONL")->required();
  prepare->add_option("--blocklist", prep.blocklist, "Evaluation transcripts to exclude")->check(CLI::ExistingFile);
  prepare->add_option("--epochs", prep.epochs, "Independent passes over the corpus")->check(CLI::PositiveNumber);

  StreamArgs st;
  auto* stream = app.add_subcommand("stream", "Synthesize a text stream chunk by chunk");
  add_config_flags(stream, common);
  add_vocab_flag(stream, common);
  stream->add_option("text", st.text_path, "Text file, or - for stdin (one arrival batch per line)");
  stream->add_option("--reference", st.reference, "Reference record (text_tokens + speech_tokens)")
      ->required()
      ->check(CLI::ExistingFile);
  stream->add_option("-o,--out", st.wav_out, "WAV output");
  stream->add_option("--summary", st.summary_out, "Session summary JSON output");
  stream->add_option("--run-report", st.report_out, "Run report JSON output");
  stream->add_option("--events", st.events_out, "Timing events JSONL output");
  stream->add_option("--pcm-out", st.pcm_out, "Raw s16le PCM as it is produced (- for stdout)");
  stream->add_option("--feed-rate", st.feed_rate, "Word arrival rate (words/s)")->check(CLI::NonNegativeNumber);

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "TTFA/RTF over repeated trials per scenario utterance");
  add_config_flags(bench, common);
  add_vocab_flag(bench, common);
  add_report_flag(bench, common);
  bench->add_option("scenario", bn.scenario, "Scenario JSON")->required();
  bench->add_option("-o,--out", bn.out, "Report output")->required();
  bench->add_option("--trials", bn.trials, "Measured trials")->check(CLI::PositiveNumber);
  bench->add_option("--warmups", bn.warmups, "Discarded warm-up runs")->check(CLI::NonNegativeNumber);
  bench->add_option("--jobs", bn.jobs, "Utterances run in parallel")->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run every admissible (k, f) cell");
  add_config_flags(sweep, common);
  add_vocab_flag(sweep, common);
  add_report_flag(sweep, common);
  sweep->add_option("scenario", sw.scenario, "Scenario JSON")->required();
  sweep->add_option("-o,--out", sw.out, "Grid output")->required();
  sweep->add_option("--k-range", sw.k_range, "Chunk sizes, LO..HI");
  sweep->add_option("--f-range", sw.f_range, "Lookahead sizes, LO..HI");
  sweep->add_flag("--resume", sw.resume, "Reuse cells finished by an interrupted run");

  auto* validate = app.add_subcommand("validate", "Print the effective configuration and its violations");
  add_config_flags(validate, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (prepare->parsed()) return cmd_prepare(common, prep);
  if (stream->parsed()) return cmd_stream(common, st);
  if (bench->parsed()) return cmd_bench(common, bn);
  if (sweep->parsed()) return cmd_sweep(common, sw);
  if (validate->parsed()) return cmd_validate(common);
  return kExitUsage;
}
