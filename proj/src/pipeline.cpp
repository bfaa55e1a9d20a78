// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "streamtts/io.hpp"

namespace streamtts {

using nlohmann::json;

namespace {

Reference reference_from_json(const json& j) {
  if (!j.is_object() || !j.contains("text_tokens") || !j.contains("speech_tokens"))
    throw Error(ErrorCode::Parse, "reference needs text_tokens and speech_tokens");
  Reference r;
  try {
    for (const auto& v : j.at("text_tokens")) r.text.push_back(TextToken{v.get<std::uint32_t>()});
    for (const auto& v : j.at("speech_tokens")) r.speech.push_back(SpeechToken{v.get<std::uint32_t>()});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("reference tokens: ") + e.what());
  }
  return r;
}

}  // namespace

Reference parse_reference(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) {
    // JSONL: take the first nonblank line.
    std::istringstream in{std::string(json_text)};
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      j = json::parse(line, nullptr, false);
      break;
    }
    if (j.is_discarded()) throw Error(ErrorCode::Parse, "reference is not valid JSON");
  }
  return reference_from_json(j);
}

Reference load_reference(const std::string& path) { return parse_reference(read_file(path)); }

std::unique_ptr<SynthesisBackend> make_backend(const StreamConfig& cfg) {
  if (cfg.backend == "mock") return std::make_unique<MockBackend>(cfg);
  if (cfg.backend == "http") return std::make_unique<RemoteBackend>(cfg.endpoint, cfg.timeout_ms, cfg.marker_id);
  throw Error(ErrorCode::InvalidConfig, "unknown backend '" + cfg.backend + "'");
}

std::unique_ptr<Clock> make_clock(const StreamConfig& cfg) {
  if (cfg.simulated_time) return std::make_unique<SimulatedClock>();
  return std::make_unique<SteadyClock>();
}

// ─── StreamPipeline ──────────────────────────────────────────────────────────

StreamPipeline::StreamPipeline(std::string session_id, const StreamConfig& cfg, Reference reference,
                               const Tokenizer& tokenizer, SynthesisBackend& backend, Clock& clock)
    : cfg_(cfg),
      tokenizer_(tokenizer),
      backend_(backend),
      clock_(clock),
      session_(std::move(session_id), std::move(reference), cfg, tokenizer, clock, log_),
      emitter_(cfg) {}

void StreamPipeline::push_text(std::string_view text, std::optional<std::int64_t> arrival_ns) {
  const auto words = splitter_.split(text);
  push_words(words, arrival_ns);
}

void StreamPipeline::push_words(std::span<const std::string> words, std::optional<std::int64_t> arrival_ns) {
  if (arrival_ns) clock_.wait_until_ns(*arrival_ns);
  chunker_.push_words(words);
  drain();
}

void StreamPipeline::drain() {
  while (auto chunk = chunker_.try_next_chunk(cfg_)) session_.process_chunk(*chunk, backend_, emitter_);
}

SessionSummary StreamPipeline::finish() {
  if (finished_) throw Error(ErrorCode::SessionNotActive, "pipeline already finished");
  chunker_.finalize_stream();
  drain();
  auto summary = session_.finalize();
  finished_ = true;
  return summary;
}

RunReport StreamPipeline::report(std::string id) const {
  if (!finished_) throw Error(ErrorCode::SessionNotActive, "report requested before finish()");
  RunReport r;
  r.id = std::move(id);
  r.k = cfg_.k;
  r.f = cfg_.f;
  r.total_tokens = session_.stats().total_speech_tokens;
  r.ttfa_ns = ttfa_ns(log_);
  r.ttfa_ms = static_cast<double>(r.ttfa_ns) / 1e6;
  r.rtf = rtf(log_, r.total_tokens, cfg_);
  r.audio_duration_s = static_cast<double>(r.total_tokens) / cfg_.r_s;
  r.processing_time_s =
      static_cast<double>(*log_.first(EventKind::StreamDone) - *log_.first(EventKind::RequestSubmitted)) / 1e9;
  r.peak_context = session_.stats().peak_context;
  r.chunks = session_.chunk_stats();
  r.config = config_snapshot(cfg_);
  return r;
}

void StreamPipeline::write_wav(const std::string& path) const {
  streamtts::write_wav(emitter_.segments(), path, cfg_.crossfade_ms, cfg_.sample_rate_hz);
}

StreamOutcome run_text(const StreamConfig& cfg, const Reference& reference, std::string_view text,
                       const Tokenizer& tokenizer, std::string id) {
  auto backend = make_backend(cfg);
  auto clock = make_clock(cfg);
  StreamPipeline p(id, cfg, reference, tokenizer, *backend, *clock);
  p.push_text(text);
  StreamOutcome out;
  out.summary = p.finish();
  out.report = p.report(std::move(id));
  out.words = p.words_received();
  out.samples = p.emitter().total_samples();
  return out;
}

// ─── Scenarios ───────────────────────────────────────────────────────────────

const Reference& Scenario::reference_for(const ScenarioUtterance& u) const {
  if (u.reference) return *u.reference;
  if (reference) return *reference;
  throw Error(ErrorCode::EmptyReference, "utterance '" + u.id + "' has no reference");
}

Scenario parse_scenario(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Parse, "scenario is not a JSON object");
  Scenario s;
  if (j.contains("reference")) s.reference = reference_from_json(j["reference"]);
  if (!j.contains("utterances") || !j["utterances"].is_array())
    throw Error(ErrorCode::Parse, "scenario needs an \"utterances\" array");
  std::size_t n = 0;
  for (const auto& u : j["utterances"]) {
    ++n;
    if (!u.is_object() || !u.contains("text") || !u["text"].is_string())
      throw Error(ErrorCode::Parse, "utterance " + std::to_string(n) + " needs a \"text\" string");
    ScenarioUtterance su;
    su.id = u.contains("id") && u["id"].is_string() ? u["id"].get<std::string>() : "u" + std::to_string(n);
    su.text = u["text"].get<std::string>();
    if (u.contains("reference")) su.reference = reference_from_json(u["reference"]);
    if (u.contains("hypothesis") && u["hypothesis"].is_string()) su.hypothesis = u["hypothesis"].get<std::string>();
    s.utterances.push_back(std::move(su));
  }
  return s;
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_file(path)); }

// ─── Bench ───────────────────────────────────────────────────────────────────

BenchReport run_bench(const StreamConfig& cfg, const Scenario& scenario, const Tokenizer& tokenizer, int trials,
                      int warmups, int jobs) {
  require_valid(cfg);
  if (scenario.utterances.empty()) throw Error(ErrorCode::InvalidArgument, "scenario has no utterances");

  BenchReport report;
  report.config = config_snapshot(cfg);
  report.utterances.resize(scenario.utterances.size());

  auto run_one = [&](std::size_t i) {
    const auto& u = scenario.utterances[i];
    UtteranceBench& b = report.utterances[i];
    b.id = u.id;
    try {
      const Reference& ref = scenario.reference_for(u);
      b.protocol = measure_protocol(
          [&](int run) { return run_text(cfg, ref, u.text, tokenizer, u.id + "#" + std::to_string(run)).report; },
          trials, warmups);
      if (u.hypothesis) b.wer = wer(u.text, *u.hypothesis);
    } catch (const std::exception& e) {
      b.error = e.what();
    }
  };

  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(scenario.utterances.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < scenario.utterances.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < scenario.utterances.size(); i = next++) run_one(i);
      });
    for (auto& t : pool) t.join();
  }

  std::vector<double> ttfa, rtf_values;
  for (const auto& b : report.utterances) {
    if (!b.ok()) continue;
    ++report.succeeded;
    ttfa.push_back(b.protocol.ttfa_mean_ms);
    rtf_values.push_back(b.protocol.rtf_mean);
  }
  report.ttfa_mean_ms = mean_of(ttfa);
  report.rtf_mean = mean_of(rtf_values);
  return report;
}

std::string bench_to_json(const BenchReport& report) {
  json j;
  j["config"] = report.config;
  j["succeeded"] = report.succeeded;
  j["ttfa_mean_ms"] = report.ttfa_mean_ms;
  j["rtf_mean"] = report.rtf_mean;
  j["utterances"] = json::array();
  for (const auto& b : report.utterances) {
    json u;
    u["id"] = b.id;
    u["ok"] = b.ok();
    u["warmups"] = b.protocol.warmups;
    u["trial_count"] = b.protocol.trial_count;
    u["ttfa_mean_ms"] = b.protocol.ttfa_mean_ms;
    u["ttfa_std_ms"] = b.protocol.ttfa_std_ms;
    u["rtf_mean"] = b.protocol.rtf_mean;
    u["rtf_std"] = b.protocol.rtf_std;
    u["wer"] = b.wer ? json(*b.wer) : json(nullptr);
    std::string err = b.error;
    if (err.empty() && b.protocol.error) err = *b.protocol.error;
    u["error"] = err;
    j["utterances"].push_back(std::move(u));
  }
  return j.dump(2) + "\n";
}

std::string bench_to_csv(const BenchReport& report) {
  std::string out = "id,status,warmups,trials,ttfa_mean_ms,ttfa_std_ms,rtf_mean,rtf_std,wer,error\n";
  char buf[256];
  for (const auto& b : report.utterances) {
    std::string err = b.error;
    if (err.empty() && b.protocol.error) err = *b.protocol.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f,%.6f,%.6f,", b.ok() ? "ok" : "failed", b.protocol.warmups,
                  b.protocol.trial_count, b.protocol.ttfa_mean_ms, b.protocol.ttfa_std_ms, b.protocol.rtf_mean,
                  b.protocol.rtf_std);
    out += b.id + "," + buf;
    if (b.wer) {
      std::snprintf(buf, sizeof buf, "%.6f", *b.wer);
      out += buf;
    }
    out += "," + err + "\n";
  }
  return out;
}

// ─── Sweep ───────────────────────────────────────────────────────────────────

SweepGrid run_sweep(const StreamConfig& cfg, const Scenario& scenario, const Tokenizer& tokenizer, SweepRange k,
                    SweepRange f, const std::map<std::pair<int, int>, RunReport>& completed,
                    const CellObserver& on_cell) {
  if (scenario.utterances.empty()) throw Error(ErrorCode::InvalidArgument, "scenario has no utterances");
  auto runner = [&](const StreamConfig& cell_cfg) {
    std::vector<RunReport> runs;
    std::vector<std::string> refs, hyps;
    for (const auto& u : scenario.utterances) {
      runs.push_back(run_text(cell_cfg, scenario.reference_for(u), u.text, tokenizer, u.id).report);
      if (u.hypothesis) {
        refs.push_back(u.text);
        hyps.push_back(*u.hypothesis);
      }
    }
    auto agg = aggregate_reports(runs, "k" + std::to_string(cell_cfg.k) + "_f" + std::to_string(cell_cfg.f));
    if (!refs.empty()) {
      // Pooled: total edits over total reference words.
      WhitespaceSplitter sp;
      std::size_t edits = 0, ref_words = 0;
      for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto d = wer_details(sp.split(refs[i]), sp.split(hyps[i]));
        edits += d.substitutions + d.deletions + d.insertions;
        ref_words += d.reference_words;
      }
      agg.wer = static_cast<double>(edits) / static_cast<double>(ref_words);
    }
    return agg;
  };
  return ablation_sweep(cfg, k, f, runner, completed, on_cell);
}

}  // namespace streamtts
