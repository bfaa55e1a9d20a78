// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "streamtts/io.hpp"

namespace streamtts {

using nlohmann::json;

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::MalformedJson: return "MalformedJson";
    case RejectReason::MissingField: return "MissingField";
    case RejectReason::DuplicateId: return "DuplicateId";
    case RejectReason::TokenOutOfVocab: return "TokenOutOfVocab";
    case RejectReason::MarkerCollision: return "MarkerCollision";
    case RejectReason::SpeechTokenOutOfVocab: return "SpeechTokenOutOfVocab";
    case RejectReason::SpanOutOfRange: return "SpanOutOfRange";
    case RejectReason::SpanOverlap: return "SpanOverlap";
    case RejectReason::TimeInverted: return "TimeInverted";
    case RejectReason::AlignmentNotMonotone: return "AlignmentNotMonotone";
    case RejectReason::AlignmentExceedsAudio: return "AlignmentExceedsAudio";
    case RejectReason::SpeechLengthMismatch: return "SpeechLengthMismatch";
  }
  return "Unknown";
}

namespace {

struct FieldError {
  std::string detail;
};

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FieldError{std::string("missing field '") + key + "'"};
  return *it;
}

std::uint64_t as_index(const json& v, const char* what) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw FieldError{std::string(what) + " must be a non-negative integer"};
  return v.get<std::uint64_t>();
}

double as_number(const json& v, const char* what) {
  if (!v.is_number()) throw FieldError{std::string(what) + " must be a number"};
  return v.get<double>();
}

CorpusRecord record_from_json(const json& j) {
  if (!j.is_object()) throw FieldError{"record must be a JSON object"};
  CorpusRecord rec;
  AlignedUtterance& u = rec.utterance;

  const json& id = require(j, "id");
  if (!id.is_string()) throw FieldError{"id must be a string"};
  u.utterance_id = id.get<std::string>();

  const json& tt = require(j, "text_tokens");
  if (!tt.is_array()) throw FieldError{"text_tokens must be an array"};
  for (const auto& v : tt) {
    auto x = as_index(v, "text token");
    if (x > UINT32_MAX) throw FieldError{"text token exceeds 32 bits"};
    u.text_tokens.push_back(TextToken{static_cast<std::uint32_t>(x)});
  }

  const json& st = require(j, "speech_tokens");
  if (!st.is_array()) throw FieldError{"speech_tokens must be an array"};
  for (const auto& v : st) {
    auto x = as_index(v, "speech token");
    if (x > UINT32_MAX) throw FieldError{"speech token exceeds 32 bits"};
    u.speech_tokens.push_back(SpeechToken{static_cast<std::uint32_t>(x)});
  }

  u.audio_duration_s = as_number(require(j, "duration_s"), "duration_s");
  if (!(u.audio_duration_s >= 0.0)) throw FieldError{"duration_s must be >= 0"};

  const json& words = require(j, "words");
  if (!words.is_array()) throw FieldError{"words must be an array"};
  int index = 0;
  for (const auto& w : words) {
    if (!w.is_object()) throw FieldError{"word must be an object"};
    WordAlignment wa;
    wa.word_index = ++index;
    const json& surface = require(w, "w");
    if (!surface.is_string()) throw FieldError{"w must be a string"};
    wa.surface = surface.get<std::string>();
    wa.token_begin = as_index(require(w, "b"), "b");
    wa.token_end = as_index(require(w, "e"), "e");
    if (auto it = w.find("aligned"); it != w.end()) {
      if (!it->is_boolean()) throw FieldError{"aligned must be a boolean"};
      wa.aligned = it->get<bool>();
    }
    auto t0 = w.find("t0");
    auto t1 = w.find("t1");
    if (wa.aligned) {
      if (t0 == w.end() || t1 == w.end() || t0->is_null() || t1->is_null())
        throw FieldError{"aligned word " + std::to_string(index) + " lacks t0/t1"};
      wa.audio_start_s = as_number(*t0, "t0");
      wa.audio_end_s = as_number(*t1, "t1");
    } else {
      if (t0 != w.end() && !t0->is_null()) wa.audio_start_s = as_number(*t0, "t0");
      if (t1 != w.end() && !t1->is_null()) wa.audio_end_s = as_number(*t1, "t1");
    }
    u.words.push_back(std::move(wa));
  }

  if (auto it = j.find("speaker"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw FieldError{"speaker must be a string"};
    rec.speaker_id = it->get<std::string>();
  }
  if (auto it = j.find("reference_eligible"); it != j.end()) {
    if (!it->is_boolean()) throw FieldError{"reference_eligible must be a boolean"};
    rec.is_reference_eligible = it->get<bool>();
  }
  return rec;
}

}  // namespace

std::optional<Rejection> check_utterance(const AlignedUtterance& u, const StreamConfig& cfg) {
  auto reject = [](RejectReason r, std::string detail) {
    return std::optional<Rejection>(Rejection{0, r, std::move(detail)});
  };

  for (std::size_t i = 0; i < u.text_tokens.size(); ++i) {
    auto id = u.text_tokens[i].id;
    if (id == cfg.marker_id)
      return reject(RejectReason::MarkerCollision, "text token " + std::to_string(i) + " equals marker_id");
    if (id >= cfg.text_vocab_size)
      return reject(RejectReason::TokenOutOfVocab, "text token " + std::to_string(i) + " out of vocabulary");
  }
  for (std::size_t i = 0; i < u.speech_tokens.size(); ++i) {
    if (u.speech_tokens[i].id >= cfg.speech_vocab_size)
      return reject(RejectReason::SpeechTokenOutOfVocab,
                    "speech token " + std::to_string(i) + " out of vocabulary");
  }

  const std::size_t T = u.text_tokens.size();
  const double tol = cfg.align_tolerance_ms / 1000.0;
  const WordAlignment* prev = nullptr;
  const WordAlignment* prev_aligned = nullptr;
  for (const auto& w : u.words) {
    const std::string tag = "word " + std::to_string(w.word_index);
    if (w.token_end < w.token_begin || w.token_end > T)
      return reject(RejectReason::SpanOutOfRange, tag + " span outside [0, T)");
    if (prev != nullptr && w.token_begin < prev->token_end)
      return reject(RejectReason::SpanOverlap, tag + " overlaps previous word span");
    prev = &w;

    if (!w.aligned) continue;
    if (!(w.audio_start_s >= 0.0) || !(w.audio_end_s > w.audio_start_s))
      return reject(RejectReason::TimeInverted, tag + " requires 0 <= t0 < t1");
    if (w.audio_end_s > u.audio_duration_s)
      return reject(RejectReason::AlignmentExceedsAudio, tag + " ends after the audio");
    if (prev_aligned != nullptr && prev_aligned->audio_end_s > w.audio_start_s + tol)
      return reject(RejectReason::AlignmentNotMonotone, tag + " starts before the previous word ends");
    prev_aligned = &w;
  }

  const auto expected = static_cast<long long>(std::floor(u.audio_duration_s * cfg.r_s));
  const auto L = static_cast<long long>(u.speech_tokens.size());
  if (std::llabs(L - expected) > cfg.r_s)
    return reject(RejectReason::SpeechLengthMismatch,
                  "speech length " + std::to_string(L) + " inconsistent with duration");
  return std::nullopt;
}

LoadResult parse_corpus(std::string_view text, const StreamConfig& cfg) {
  LoadResult out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      ++out.blank_lines;
      continue;
    }

    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      out.rejected.push_back({line_no, RejectReason::MalformedJson, "line is not valid JSON"});
      continue;
    }
    CorpusRecord rec;
    try {
      rec = record_from_json(j);
    } catch (const FieldError& e) {
      out.rejected.push_back({line_no, RejectReason::MissingField, e.detail});
      continue;
    }
    if (auto bad = check_utterance(rec.utterance, cfg)) {
      bad->line = line_no;
      out.rejected.push_back(std::move(*bad));
      continue;
    }
    if (!seen.insert(rec.utterance.utterance_id).second) {
      out.rejected.push_back({line_no, RejectReason::DuplicateId, "duplicate id " + rec.utterance.utterance_id});
      continue;
    }
    out.accepted.records.push_back(std::move(rec));
  }
  return out;
}

LoadResult load_corpus(const std::string& path, const StreamConfig& cfg) {
  require_valid(cfg);
  return parse_corpus(read_file(path), cfg);
}

std::string record_to_json_line(const CorpusRecord& rec) {
  const AlignedUtterance& u = rec.utterance;
  json j;
  j["id"] = u.utterance_id;
  json tt = json::array();
  for (auto t : u.text_tokens) tt.push_back(t.id);
  j["text_tokens"] = std::move(tt);
  json st = json::array();
  for (auto s : u.speech_tokens) st.push_back(s.id);
  j["speech_tokens"] = std::move(st);
  j["duration_s"] = u.audio_duration_s;
  json words = json::array();
  for (const auto& w : u.words) {
    json wj;
    wj["w"] = w.surface;
    wj["b"] = w.token_begin;
    wj["e"] = w.token_end;
    if (w.aligned) {
      wj["t0"] = w.audio_start_s;
      wj["t1"] = w.audio_end_s;
    }
    wj["aligned"] = w.aligned;
    words.push_back(std::move(wj));
  }
  j["words"] = std::move(words);
  if (rec.speaker_id) j["speaker"] = *rec.speaker_id;
  if (!rec.is_reference_eligible) j["reference_eligible"] = false;
  return j.dump();
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus.records) {
    out += record_to_json_line(r);
    out += '\n';
  }
  return out;
}

std::string normalize_transcript(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (c < 0x80 && std::ispunct(c)) continue;
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
  }
  return out;
}

std::string transcript_of(const AlignedUtterance& utt) {
  std::string s;
  for (const auto& w : utt.words) {
    if (!s.empty()) s += ' ';
    s += w.surface;
  }
  return s;
}

FilterResult filter_eval_overlap(const Corpus& corpus, const std::set<std::string>& blocklist) {
  std::set<std::string> normalized;
  for (const auto& b : blocklist) normalized.insert(normalize_transcript(b));
  FilterResult out;
  for (const auto& rec : corpus.records) {
    if (normalized.count(normalize_transcript(transcript_of(rec.utterance))) != 0) {
      ++out.removed;
      continue;
    }
    out.corpus.records.push_back(rec);
  }
  return out;
}

std::set<std::string> load_blocklist(const std::string& path) {
  std::istringstream in(read_file(path));
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto n = normalize_transcript(line);
    if (!n.empty()) out.insert(std::move(n));
  }
  return out;
}

const std::vector<double>& CorpusStats::histogram_edges() {
  static const std::vector<double> edges{0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0};
  return edges;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  const auto& edges = CorpusStats::histogram_edges();
  for (const auto& rec : corpus.records) {
    const auto& u = rec.utterance;
    ++s.utterance_count;
    s.total_words += u.words.size();
    s.total_speech_tokens += u.speech_tokens.size();
    s.total_duration_s += u.audio_duration_s;
    s.alignment_gap_count += static_cast<std::size_t>(
        std::count_if(u.words.begin(), u.words.end(), [](const auto& w) { return !w.aligned; }));
    std::size_t bin = 0;
    while (bin + 1 < edges.size() && u.audio_duration_s >= edges[bin + 1]) ++bin;
    ++s.duration_histogram[bin];
  }
  return s;
}

std::string stats_to_json(const CorpusStats& s) {
  json j;
  j["utterance_count"] = s.utterance_count;
  j["total_words"] = s.total_words;
  j["total_speech_tokens"] = s.total_speech_tokens;
  j["alignment_gap_count"] = s.alignment_gap_count;
  j["total_duration_s"] = s.total_duration_s;
  j["duration_histogram_edges_s"] = CorpusStats::histogram_edges();
  j["duration_histogram"] = s.duration_histogram;
  return j.dump();
}

Corpus subsample(const Corpus& corpus, std::size_t count, std::uint64_t seed) {
  if (count >= corpus.records.size()) return corpus;
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(corpus.records.size());
  for (std::size_t i = 0; i < corpus.records.size(); ++i)
    keyed.emplace_back(derive_seed(seed, corpus.records[i].utterance.utterance_id), i);
  std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(count), keyed.end());
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < count; ++i) picked.push_back(keyed[i].second);
  std::sort(picked.begin(), picked.end());
  Corpus out;
  for (auto i : picked) out.records.push_back(corpus.records[i]);
  return out;
}

}  // namespace streamtts
