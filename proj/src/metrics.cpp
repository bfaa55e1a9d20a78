// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "streamtts/corpus.hpp"
#include "streamtts/io.hpp"

namespace streamtts {

using nlohmann::json;

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::RequestSubmitted: return "request_submitted";
    case EventKind::ChunkDispatched: return "chunk_dispatched";
    case EventKind::FirstToken: return "first_token";
    case EventKind::FirstAudioGroup: return "first_audio_group";
    case EventKind::ChunkDone: return "chunk_done";
    case EventKind::StreamDone: return "stream_done";
  }
  return "unknown";
}

void TimingLog::record(EventKind kind, std::int64_t ns, std::optional<int> chunk) {
  if (events_.empty() && kind != EventKind::RequestSubmitted)
    throw Error(ErrorCode::InvalidArgument, "first event must be request_submitted");
  if (!events_.empty() && kind == EventKind::RequestSubmitted)
    throw Error(ErrorCode::InvalidArgument, "request_submitted recorded twice");
  if (!events_.empty() && ns < events_.back().ns)
    throw Error(ErrorCode::InvalidArgument, "timestamps must be non-decreasing");
  if (kind == EventKind::FirstAudioGroup && first(kind))
    throw Error(ErrorCode::InvalidArgument, "first_audio_group recorded twice");
  events_.push_back({kind, chunk, ns});
}

std::optional<std::int64_t> TimingLog::first(EventKind kind) const {
  for (const auto& e : events_)
    if (e.kind == kind) return e.ns;
  return std::nullopt;
}

void MetricsSink::append(const std::string& session, const TimingLog& log) {
  std::lock_guard lock(mu_);
  for (const auto& e : log.events()) events_.emplace_back(session, e);
}

std::size_t MetricsSink::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::string MetricsSink::to_jsonl() const {
  std::vector<std::pair<std::string, TimingEvent>> copy;
  {
    std::lock_guard lock(mu_);
    copy = events_;
  }
  std::stable_sort(copy.begin(), copy.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second.ns) < std::tie(b.first, b.second.ns);
  });
  std::string out;
  for (const auto& [session, e] : copy) {
    json j;
    j["session"] = session;
    j["event"] = to_string(e.kind);
    if (e.chunk) j["t"] = *e.chunk;
    j["ns"] = e.ns;
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ─── Latency ─────────────────────────────────────────────────────────────────

std::int64_t ttfa_ns(const TimingLog& log) {
  auto start = log.first(EventKind::RequestSubmitted);
  auto audio = log.first(EventKind::FirstAudioGroup);
  if (!start) throw Error(ErrorCode::MissingEvent, "log lacks request_submitted");
  if (!audio) throw Error(ErrorCode::MissingEvent, "log lacks first_audio_group");
  return *audio - *start;
}

double ttfa(const TimingLog& log) { return static_cast<double>(ttfa_ns(log)) / 1e6; }

double rtf_from_durations(double processing_s, double audio_s) {
  if (!(audio_s > 0.0)) throw Error(ErrorCode::ZeroAudioDuration, "audio duration is zero");
  return processing_s / audio_s;
}

double rtf(const TimingLog& log, std::size_t total_tokens, const StreamConfig& cfg) {
  auto start = log.first(EventKind::RequestSubmitted);
  auto done = log.first(EventKind::StreamDone);
  if (!start) throw Error(ErrorCode::MissingEvent, "log lacks request_submitted");
  if (!done) throw Error(ErrorCode::MissingEvent, "log lacks stream_done");
  if (total_tokens == 0) throw Error(ErrorCode::ZeroAudioDuration, "no speech tokens were produced");
  const double processing_s = static_cast<double>(*done - *start) / 1e9;
  const double audio_s = static_cast<double>(total_tokens) / cfg.r_s;
  return rtf_from_durations(processing_s, audio_s);
}

RunReport aggregate_reports(const std::vector<RunReport>& runs, std::string id) {
  RunReport out;
  out.id = std::move(id);
  if (runs.empty()) return out;
  out.k = runs.front().k;
  out.f = runs.front().f;
  out.config = runs.front().config;
  double ttfa_sum = 0.0;
  std::int64_t ttfa_ns_sum = 0;
  double wer_sum = 0.0;
  std::size_t wer_n = 0;
  for (const auto& r : runs) {
    ttfa_sum += r.ttfa_ms;
    ttfa_ns_sum += r.ttfa_ns;
    out.audio_duration_s += r.audio_duration_s;
    out.processing_time_s += r.processing_time_s;
    out.total_tokens += r.total_tokens;
    out.peak_context = std::max(out.peak_context, r.peak_context);
    if (r.wer) {
      wer_sum += *r.wer;
      ++wer_n;
    }
    out.chunks.insert(out.chunks.end(), r.chunks.begin(), r.chunks.end());
  }
  const auto n = static_cast<double>(runs.size());
  out.ttfa_ms = ttfa_sum / n;
  out.ttfa_ns = ttfa_ns_sum / static_cast<std::int64_t>(runs.size());
  out.rtf = out.audio_duration_s > 0.0 ? out.processing_time_s / out.audio_duration_s : 0.0;
  if (wer_n > 0) out.wer = wer_sum / static_cast<double>(wer_n);
  return out;
}

// ─── Protocol ────────────────────────────────────────────────────────────────

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  // Summing offsets from the first value keeps constant samples exact.
  double s = 0.0;
  for (double x : v) s += x - v.front();
  return v.front() + s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

ProtocolReport measure_protocol(const TrialRunner& runner, int trials, int warmups) {
  if (trials < 1 || warmups < 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1 and warmups >= 0");
  ProtocolReport out;
  int run = 0;
  try {
    for (; run < warmups; ++run) {
      (void)runner(run);
      ++out.warmups;
    }
    for (int i = 0; i < trials; ++i, ++run) out.trials.push_back(runner(run));
  } catch (const std::exception& e) {
    out.error = "run " + std::to_string(run) + ": " + e.what();
  }
  out.trial_count = static_cast<int>(out.trials.size());
  std::vector<double> t, r;
  for (const auto& rep : out.trials) {
    t.push_back(rep.ttfa_ms);
    r.push_back(rep.rtf);
  }
  out.ttfa_mean_ms = mean_of(t);
  out.ttfa_std_ms = stddev_of(t);
  out.rtf_mean = mean_of(r);
  out.rtf_std = stddev_of(r);
  return out;
}

// ─── WER ─────────────────────────────────────────────────────────────────────

std::vector<std::string> normalize_words(const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    // One entry may hold several words ("a b" from a whole transcript).
    const std::string n = normalize_transcript(w);
    std::size_t i = 0;
    while (i < n.size()) {
      auto j = n.find(' ', i);
      if (j == std::string::npos) j = n.size();
      if (j > i) out.push_back(n.substr(i, j - i));
      i = j + 1;
    }
  }
  return out;
}

WerResult wer_details(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  const auto ref = normalize_words(reference);
  const auto hyp = normalize_words(hypothesis);
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, "reference has no words");

  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }

  WerResult res;
  res.reference_words = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++res.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++res.deletions;
      --i;
    } else {
      ++res.insertions;
      --j;
    }
  }
  res.rate = static_cast<double>(d[n][m]) / static_cast<double>(n);
  return res;
}

double wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  return wer_details(reference, hypothesis).rate;
}

double wer(std::string_view reference, std::string_view hypothesis) {
  return wer(std::vector<std::string>{std::string(reference)}, std::vector<std::string>{std::string(hypothesis)});
}

// ─── Sweep ───────────────────────────────────────────────────────────────────

std::vector<std::pair<int, int>> admissible_cells(SweepRange k, SweepRange f) {
  std::vector<std::pair<int, int>> out;
  for (int kk = k.lo; kk <= k.hi; ++kk)
    for (int ff = f.lo; ff <= f.hi; ++ff)
      if (kk >= 1 && ff >= 0 && ff <= kk) out.emplace_back(kk, ff);
  return out;
}

SweepGrid ablation_sweep(const StreamConfig& base, SweepRange k, SweepRange f, const CellRunner& runner,
                         const std::map<std::pair<int, int>, RunReport>& completed, const CellObserver& on_cell) {
  if (k.lo > k.hi || f.lo > f.hi || k.lo < 1 || f.lo < 0)
    throw Error(ErrorCode::InvalidArgument, "invalid sweep ranges");
  SweepGrid grid;
  grid.config = config_snapshot(base);
  const auto cells = admissible_cells(k, f);
  grid.skipped_constraint =
      static_cast<std::size_t>(k.hi - k.lo + 1) * static_cast<std::size_t>(f.hi - f.lo + 1) - cells.size();

  for (auto [kk, ff] : cells) {
    SweepCell cell;
    cell.k = kk;
    cell.f = ff;
    cell.headline = kk == kHeadlineK && ff == kHeadlineF;
    if (auto it = completed.find({kk, ff}); it != completed.end()) {
      cell.report = it->second;
      cell.resumed = true;
    } else {
      StreamConfig cell_cfg = base;
      cell_cfg.k = kk;
      cell_cfg.f = ff;
      cell_cfg.ablation_grid = true;
      try {
        cell.report = runner(cell_cfg);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      if (on_cell) on_cell(cell);
    }
    grid.cells.push_back(std::move(cell));
  }
  return grid;
}

// ─── Rendering ───────────────────────────────────────────────────────────────

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json chunk_to_json(const ChunkStats& c) {
  return json{{"t", c.t},
              {"cur_words", c.cur_words},
              {"lookahead_words", c.lookahead_words},
              {"input_tokens", c.input_tokens},
              {"speech_tokens", c.speech_tokens},
              {"context_size", c.context_size},
              {"stop_reason", c.stop_reason},
              {"dispatch_ns", c.dispatch_ns},
              {"first_token_ns", c.first_token_ns},
              {"done_ns", c.done_ns}};
}

ChunkStats chunk_from_json(const json& j) {
  ChunkStats c;
  c.t = j.at("t").get<int>();
  c.cur_words = j.at("cur_words").get<std::size_t>();
  c.lookahead_words = j.at("lookahead_words").get<std::size_t>();
  c.input_tokens = j.at("input_tokens").get<std::size_t>();
  c.speech_tokens = j.at("speech_tokens").get<std::size_t>();
  c.context_size = j.at("context_size").get<std::size_t>();
  c.stop_reason = j.at("stop_reason").get<std::string>();
  c.dispatch_ns = j.at("dispatch_ns").get<std::int64_t>();
  c.first_token_ns = j.at("first_token_ns").get<std::int64_t>();
  c.done_ns = j.at("done_ns").get<std::int64_t>();
  return c;
}

json report_json(const RunReport& r) {
  json chunks = json::array();
  for (const auto& c : r.chunks) chunks.push_back(chunk_to_json(c));
  return json{{"id", r.id},
              {"k", r.k},
              {"f", r.f},
              {"ttfa_ns", r.ttfa_ns},
              {"ttfa_ms", r.ttfa_ms},
              {"rtf", r.rtf},
              {"audio_duration_s", r.audio_duration_s},
              {"processing_time_s", r.processing_time_s},
              {"wer", r.wer ? json(*r.wer) : json(nullptr)},
              {"total_tokens", r.total_tokens},
              {"peak_context", r.peak_context},
              {"chunks", std::move(chunks)},
              {"config", r.config}};
}

RunReport report_from(const json& j) {
  RunReport r;
  r.id = j.at("id").get<std::string>();
  r.k = j.at("k").get<int>();
  r.f = j.at("f").get<int>();
  r.ttfa_ns = j.at("ttfa_ns").get<std::int64_t>();
  r.ttfa_ms = j.at("ttfa_ms").get<double>();
  r.rtf = j.at("rtf").get<double>();
  r.audio_duration_s = j.at("audio_duration_s").get<double>();
  r.processing_time_s = j.at("processing_time_s").get<double>();
  if (!j.at("wer").is_null()) r.wer = j.at("wer").get<double>();
  r.total_tokens = j.at("total_tokens").get<std::size_t>();
  r.peak_context = j.at("peak_context").get<std::size_t>();
  for (const auto& c : j.at("chunks")) r.chunks.push_back(chunk_from_json(c));
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  return r;
}

std::string report_csv_fields(const RunReport& r) {
  return fmt(r.ttfa_ms) + "," + fmt(r.rtf) + "," + fmt(r.audio_duration_s) + "," + fmt(r.processing_time_s) + "," +
         (r.wer ? fmt(*r.wer) : std::string()) + "," + std::to_string(r.chunks.size()) + "," +
         std::to_string(r.total_tokens) + "," + std::to_string(r.peak_context);
}

}  // namespace

std::string reports_to_csv(const std::vector<RunReport>& reports) {
  std::string out = "id,k,f,ttfa_ms,rtf,audio_duration_s,processing_time_s,wer,chunks,total_tokens,peak_context\n";
  for (const auto& r : reports)
    out += csv_escape(r.id) + "," + std::to_string(r.k) + "," + std::to_string(r.f) + "," + report_csv_fields(r) + "\n";
  return out;
}

std::string report_to_json(const RunReport& r) { return report_json(r).dump(); }

RunReport report_from_json(std::string_view text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Parse, "report is not valid JSON");
  try {
    return report_from(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad report: ") + e.what());
  }
}

std::string reports_to_json(const std::vector<RunReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return json{{"reports", std::move(arr)}}.dump(2);
}

std::vector<RunReport> reports_from_json(std::string_view text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.contains("reports")) throw Error(ErrorCode::Parse, "expected {\"reports\": [...]}");
  std::vector<RunReport> out;
  try {
    for (const auto& r : j.at("reports")) out.push_back(report_from(r));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad report: ") + e.what());
  }
  return out;
}

std::string grid_to_csv(const SweepGrid& grid) {
  std::string out =
      "k,f,headline,status,ttfa_ms,rtf,audio_duration_s,processing_time_s,wer,chunks,total_tokens,peak_context,error\n";
  for (const auto& c : grid.cells) {
    out += std::to_string(c.k) + "," + std::to_string(c.f) + "," + (c.headline ? "1" : "0") + "," +
           (c.ok() ? "ok" : "failed") + ",";
    out += c.ok() ? report_csv_fields(*c.report) : std::string(",,,,,,,");
    out += "," + csv_escape(c.error) + "\n";
  }
  return out;
}

std::string cell_to_json_line(const SweepCell& c) {
  json j{{"k", c.k}, {"f", c.f}, {"headline", c.headline}, {"status", c.ok() ? "ok" : "failed"}};
  j["report"] = c.ok() ? report_json(*c.report) : json(nullptr);
  j["error"] = c.error;
  return j.dump();
}

std::optional<SweepCell> cell_from_json_line(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    SweepCell c;
    c.k = j.at("k").get<int>();
    c.f = j.at("f").get<int>();
    c.headline = j.at("headline").get<bool>();
    if (!j.at("report").is_null()) c.report = report_from(j.at("report"));
    c.error = j.value("error", "");
    return c;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::string grid_to_json(const SweepGrid& grid) {
  json cells = json::array();
  for (const auto& c : grid.cells) cells.push_back(json::parse(cell_to_json_line(c)));
  return json{{"cells", std::move(cells)},
              {"cell_count", grid.cells.size()},
              {"skipped_constraint", grid.skipped_constraint},
              {"headline", {{"k", kHeadlineK}, {"f", kHeadlineF}}},
              {"config", grid.config}}
      .dump(2);
}

void render_report(const std::vector<RunReport>& reports, ReportFormat format, const std::string& path) {
  if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "no reports to render");
  write_file_atomic(path, format == ReportFormat::Csv ? reports_to_csv(reports) : reports_to_json(reports) + "\n");
}

}  // namespace streamtts
