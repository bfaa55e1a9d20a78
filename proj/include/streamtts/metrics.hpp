// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streamtts/core.hpp"

namespace streamtts {

// ─── Timing log ──────────────────────────────────────────────────────────────

enum class EventKind { RequestSubmitted, ChunkDispatched, FirstToken, FirstAudioGroup, ChunkDone, StreamDone };
std::string_view to_string(EventKind k);

struct TimingEvent {
  EventKind kind;
  std::optional<int> chunk;
  std::int64_t ns = 0;
};

// Append-only per-session event record. Timestamps must be non-decreasing,
// RequestSubmitted must come first, FirstAudioGroup may occur once.
class TimingLog {
 public:
  void record(EventKind kind, std::int64_t ns, std::optional<int> chunk = std::nullopt);
  const std::vector<TimingEvent>& events() const { return events_; }
  std::optional<std::int64_t> first(EventKind kind) const;
  bool empty() const { return events_.empty(); }

 private:
  std::vector<TimingEvent> events_;
};

// Shared sink for logs from many sessions. Thread-safe; dumps as JSONL
// {"session": str, "event": str, "t": int?, "ns": int}, ordered by
// (session, ns) with arrival order breaking ties.
class MetricsSink {
 public:
  void append(const std::string& session, const TimingLog& log);
  std::string to_jsonl() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::pair<std::string, TimingEvent>> events_;
};

// ─── Latency metrics ─────────────────────────────────────────────────────────

// first_audio_group - request_submitted. Throws MissingEvent.
std::int64_t ttfa_ns(const TimingLog& log);
double ttfa(const TimingLog& log);  // milliseconds

// (stream_done - request_submitted) / (total_tokens / r_s).
// Throws MissingEvent or ZeroAudioDuration.
double rtf(const TimingLog& log, std::size_t total_tokens, const StreamConfig& cfg);
double rtf_from_durations(double processing_s, double audio_s);
inline bool is_real_time(double rtf_value) { return rtf_value < 1.0; }

struct ChunkStats {
  int t = 0;
  std::size_t cur_words = 0;
  std::size_t lookahead_words = 0;
  std::size_t input_tokens = 0;
  std::size_t speech_tokens = 0;
  std::size_t context_size = 0;
  std::string stop_reason;
  std::int64_t dispatch_ns = 0;
  std::int64_t first_token_ns = 0;
  std::int64_t done_ns = 0;
  bool operator==(const ChunkStats&) const = default;
};

struct RunReport {
  std::string id;
  int k = 0;
  int f = 0;
  std::int64_t ttfa_ns = 0;
  double ttfa_ms = 0.0;
  double rtf = 0.0;
  double audio_duration_s = 0.0;
  double processing_time_s = 0.0;
  std::optional<double> wer;
  std::size_t total_tokens = 0;
  std::size_t peak_context = 0;
  std::vector<ChunkStats> chunks;
  std::map<std::string, std::string> config;
  bool operator==(const RunReport&) const = default;
};

// Averages TTFA over runs; RTF is total processing over total audio.
RunReport aggregate_reports(const std::vector<RunReport>& runs, std::string id);

// ─── Measurement protocol ────────────────────────────────────────────────────

struct ProtocolReport {
  int warmups = 0;
  int trial_count = 0;
  double ttfa_mean_ms = 0.0;
  double ttfa_std_ms = 0.0;
  double rtf_mean = 0.0;
  double rtf_std = 0.0;
  std::vector<RunReport> trials;
  std::optional<std::string> error;  // set when a run failed; trials holds what finished
};

using TrialRunner = std::function<RunReport(int run_index)>;

// Runs `warmups` discarded runs, then `trials` measured ones. A failing run
// stops the batch; completed trials are kept and summarized.
ProtocolReport measure_protocol(const TrialRunner& runner, int trials = 50, int warmups = 2);

// Sample standard deviation; 0 for fewer than two values.
double mean_of(const std::vector<double>& v);
double stddev_of(const std::vector<double>& v);

// ─── Word error rate ─────────────────────────────────────────────────────────

struct WerResult {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_words = 0;
  double rate = 0.0;
};

// Each word goes through normalize_transcript (lowercase, ASCII punctuation
// stripped); words that normalize to nothing are dropped. Throws
// EmptyReference when the normalized reference is empty.
WerResult wer_details(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);
double wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);
double wer(std::string_view reference, std::string_view hypothesis);
std::vector<std::string> normalize_words(const std::vector<std::string>& words);

// ─── Ablation sweep ──────────────────────────────────────────────────────────

struct SweepRange {
  int lo = 0;
  int hi = 0;
};

inline constexpr SweepRange kDefaultChunkRange{1, 10};
inline constexpr SweepRange kDefaultLookaheadRange{1, 6};
inline constexpr int kHeadlineK = 5;
inline constexpr int kHeadlineF = 2;

struct SweepCell {
  int k = 0;
  int f = 0;
  bool headline = false;
  std::optional<RunReport> report;
  std::string error;
  bool resumed = false;
  bool ok() const { return report.has_value(); }
};

struct SweepGrid {
  std::vector<SweepCell> cells;
  std::size_t skipped_constraint = 0;  // (k, f) pairs with f > k
  std::map<std::string, std::string> config;
};

// Admissible (k, f) pairs in row-major order (k outer), f <= k only.
std::vector<std::pair<int, int>> admissible_cells(SweepRange k, SweepRange f);

using CellRunner = std::function<RunReport(const StreamConfig& cell_cfg)>;
using CellObserver = std::function<void(const SweepCell&)>;

// One run per admissible pair. Cells found in `completed` are reused
// (resume). A failing cell records its error and the sweep continues.
// `on_cell` sees every freshly run cell as soon as it finishes.
SweepGrid ablation_sweep(const StreamConfig& base, SweepRange k, SweepRange f, const CellRunner& runner,
                         const std::map<std::pair<int, int>, RunReport>& completed = {},
                         const CellObserver& on_cell = nullptr);

// ─── Rendering ───────────────────────────────────────────────────────────────

enum class ReportFormat { Json, Csv };

// CSV columns, fixed:
//   id,k,f,ttfa_ms,rtf,audio_duration_s,processing_time_s,wer,chunks,total_tokens,peak_context
std::string reports_to_csv(const std::vector<RunReport>& reports);
std::string reports_to_json(const std::vector<RunReport>& reports);
std::vector<RunReport> reports_from_json(std::string_view text);
std::string report_to_json(const RunReport& r);
RunReport report_from_json(std::string_view text);

// Grid CSV columns, fixed:
//   k,f,headline,status,ttfa_ms,rtf,audio_duration_s,processing_time_s,wer,chunks,total_tokens,peak_context,error
std::string grid_to_csv(const SweepGrid& grid);
std::string grid_to_json(const SweepGrid& grid);
std::string cell_to_json_line(const SweepCell& cell);
std::optional<SweepCell> cell_from_json_line(std::string_view line);

// Writes reports in the requested format (atomic). Throws InvalidArgument for
// an empty report list.
void render_report(const std::vector<RunReport>& reports, ReportFormat format, const std::string& path);

}  // namespace streamtts
