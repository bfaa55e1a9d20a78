// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/core.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace streamtts {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::SessionNotActive: return "SessionNotActive";
    case ErrorCode::ChunkIndexMismatch: return "ChunkIndexMismatch";
    case ErrorCode::FinalizeWhileChunksPending: return "FinalizeWhileChunksPending";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::PushAfterFinalize: return "PushAfterFinalize";
    case ErrorCode::TokenizationFailure: return "TokenizationFailure";
    case ErrorCode::UnalignedBoundaryWord: return "UnalignedBoundaryWord";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NoAlignedWords: return "NoAlignedWords";
    case ErrorCode::OutOfOrderChunk: return "OutOfOrderChunk";
    case ErrorCode::IncompatibleRates: return "IncompatibleRates";
    case ErrorCode::MissingEvent: return "MissingEvent";
    case ErrorCode::ZeroAudioDuration: return "ZeroAudioDuration";
  }
  return "Unknown";
}

std::string_view to_string(ConfigViolation v) {
  switch (v) {
    case ConfigViolation::ChunkSizeZero: return "ChunkSizeZero";
    case ConfigViolation::NegativeLookahead: return "NegativeLookahead";
    case ConfigViolation::LookaheadExceedsChunk: return "LookaheadExceedsChunk";
    case ConfigViolation::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ConfigViolation::FrameRateNonPositive: return "FrameRateNonPositive";
    case ConfigViolation::MinFramesNonPositive: return "MinFramesNonPositive";
    case ConfigViolation::MarkerOutOfVocab: return "MarkerOutOfVocab";
    case ConfigViolation::UnkOutOfVocab: return "UnkOutOfVocab";
    case ConfigViolation::UnkCollidesWithMarker: return "UnkCollidesWithMarker";
    case ConfigViolation::EmptySpeechVocab: return "EmptySpeechVocab";
    case ConfigViolation::TextTokensPerWordNonPositive: return "TextTokensPerWordNonPositive";
    case ConfigViolation::TokensPerWordNonPositive: return "TokensPerWordNonPositive";
    case ConfigViolation::MaxTokensBelowDensity: return "MaxTokensBelowDensity";
    case ConfigViolation::EmitGroupNonPositive: return "EmitGroupNonPositive";
    case ConfigViolation::SampleRateNonPositive: return "SampleRateNonPositive";
    case ConfigViolation::IncompatibleRates: return "IncompatibleRates";
    case ConfigViolation::NegativeCrossfade: return "NegativeCrossfade";
    case ConfigViolation::NegativeLatency: return "NegativeLatency";
    case ConfigViolation::FaultRateOutOfRange: return "FaultRateOutOfRange";
    case ConfigViolation::UnknownBackend: return "UnknownBackend";
    case ConfigViolation::NonPositiveTimeout: return "NonPositiveTimeout";
    case ConfigViolation::NegativeAlignTolerance: return "NegativeAlignTolerance";
  }
  return "Unknown";
}

std::vector<ConfigIssue> validate_config(const StreamConfig& cfg) {
  std::vector<ConfigIssue> out;
  auto add = [&](ConfigViolation code, std::string msg) { out.push_back({code, std::move(msg)}); };

  if (cfg.k < 1) add(ConfigViolation::ChunkSizeZero, "k must be >= 1");
  if (cfg.f < 0) add(ConfigViolation::NegativeLookahead, "f must be >= 0");
  if (cfg.ablation_grid && cfg.k >= 1 && cfg.f > cfg.k)
    add(ConfigViolation::LookaheadExceedsChunk, "f must be <= k in ablation-grid mode");
  if (!(cfg.p_full >= 0.0 && cfg.p_full <= 1.0))
    add(ConfigViolation::ProbabilityOutOfRange, "p_full must lie in [0, 1]");
  if (cfg.r_s <= 0) add(ConfigViolation::FrameRateNonPositive, "r_s must be > 0");
  if (cfg.ell_min < 1) add(ConfigViolation::MinFramesNonPositive, "ell_min must be >= 1");
  if (cfg.marker_id >= cfg.text_vocab_size)
    add(ConfigViolation::MarkerOutOfVocab, "marker_id must be < text_vocab_size");
  if (cfg.unk_id >= cfg.text_vocab_size)
    add(ConfigViolation::UnkOutOfVocab, "unk_id must be < text_vocab_size");
  if (cfg.unk_id == cfg.marker_id)
    add(ConfigViolation::UnkCollidesWithMarker, "unk_id must differ from marker_id");
  if (cfg.speech_vocab_size == 0) add(ConfigViolation::EmptySpeechVocab, "speech_vocab_size must be > 0");
  if (cfg.max_text_tokens_per_word < 1)
    add(ConfigViolation::TextTokensPerWordNonPositive, "max_text_tokens_per_word must be >= 1");
  if (cfg.tokens_per_word < 1) add(ConfigViolation::TokensPerWordNonPositive, "tokens_per_word must be >= 1");
  if (cfg.max_tokens_per_word < cfg.tokens_per_word)
    add(ConfigViolation::MaxTokensBelowDensity, "max_tokens_per_word must be >= tokens_per_word");
  if (cfg.emit_group_g < 1) add(ConfigViolation::EmitGroupNonPositive, "emit_group_g must be >= 1");
  if (cfg.sample_rate_hz < 1) add(ConfigViolation::SampleRateNonPositive, "sample_rate_hz must be > 0");
  if (cfg.sample_rate_hz >= 1 && cfg.r_s > 0 && cfg.sample_rate_hz % cfg.r_s != 0)
    add(ConfigViolation::IncompatibleRates, "sample_rate_hz must be divisible by r_s");
  if (cfg.crossfade_ms < 0) add(ConfigViolation::NegativeCrossfade, "crossfade_ms must be >= 0");
  if (cfg.token_latency_ns < 0 || cfg.prompt_latency_ns < 0)
    add(ConfigViolation::NegativeLatency, "latencies must be >= 0");
  if (!(cfg.fault_rate >= 0.0 && cfg.fault_rate <= 1.0))
    add(ConfigViolation::FaultRateOutOfRange, "fault_rate must lie in [0, 1]");
  if (cfg.backend != "mock" && cfg.backend != "http")
    add(ConfigViolation::UnknownBackend, "backend must be 'mock' or 'http'");
  if (cfg.timeout_ms <= 0) add(ConfigViolation::NonPositiveTimeout, "timeout_ms must be > 0");
  if (cfg.align_tolerance_ms < 0)
    add(ConfigViolation::NegativeAlignTolerance, "align_tolerance_ms must be >= 0");
  return out;
}

std::vector<std::string> config_warnings(const StreamConfig& cfg) {
  std::vector<std::string> out;
  if (!cfg.ablation_grid && cfg.f > cfg.k)
    out.push_back("lookahead f exceeds chunk size k");
  if (cfg.retain_reference) out.push_back("retain_reference prepends the reference to every prompt");
  if (cfg.crossfade_ms > 0) out.push_back("crossfade_ms > 0 shortens output at chunk seams");
  return out;
}

void require_valid(const StreamConfig& cfg) {
  auto issues = validate_config(cfg);
  if (issues.empty()) return;
  std::string msg;
  for (const auto& i : issues) {
    if (!msg.empty()) msg += "; ";
    msg += std::string(to_string(i.code)) + " (" + i.message + ")";
  }
  throw Error(ErrorCode::InvalidConfig, msg);
}

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidConfig,
              "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_int(std::string_view key, std::string_view value) {
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || p != value.data() + value.size()) bad_value(key, value);
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  std::string tmp(value);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) bad_value(key, value);
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

}  // namespace

void set_config_value(StreamConfig& cfg, std::string_view key, std::string_view raw) {
  std::string_view value = trim(raw);
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
    value = value.substr(1, value.size() - 2);

  if (key == "k" || key == "chunk_size") cfg.k = parse_int<int>(key, value);
  else if (key == "f" || key == "lookahead") cfg.f = parse_int<int>(key, value);
  else if (key == "p_full") cfg.p_full = parse_double(key, value);
  else if (key == "r_s" || key == "frame_rate") cfg.r_s = parse_int<int>(key, value);
  else if (key == "ell_min" || key == "min_frames") cfg.ell_min = parse_int<int>(key, value);
  else if (key == "marker_id") cfg.marker_id = parse_int<std::uint32_t>(key, value);
  else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "text_vocab_size") cfg.text_vocab_size = parse_int<std::uint32_t>(key, value);
  else if (key == "speech_vocab_size") cfg.speech_vocab_size = parse_int<std::uint32_t>(key, value);
  else if (key == "unk_id") cfg.unk_id = parse_int<std::uint32_t>(key, value);
  else if (key == "max_text_tokens_per_word") cfg.max_text_tokens_per_word = parse_int<int>(key, value);
  else if (key == "tokens_per_word") cfg.tokens_per_word = parse_int<int>(key, value);
  else if (key == "max_tokens_per_word") cfg.max_tokens_per_word = parse_int<int>(key, value);
  else if (key == "emit_group_g" || key == "emit_group") cfg.emit_group_g = parse_int<int>(key, value);
  else if (key == "sample_rate_hz" || key == "sample_rate") cfg.sample_rate_hz = parse_int<int>(key, value);
  else if (key == "crossfade_ms") cfg.crossfade_ms = parse_int<int>(key, value);
  else if (key == "align_tolerance_ms") cfg.align_tolerance_ms = parse_int<int>(key, value);
  else if (key == "simulated_time") cfg.simulated_time = parse_bool(key, value);
  else if (key == "token_latency_ns") cfg.token_latency_ns = parse_int<std::int64_t>(key, value);
  else if (key == "prompt_latency_ns") cfg.prompt_latency_ns = parse_int<std::int64_t>(key, value);
  else if (key == "fault_rate") cfg.fault_rate = parse_double(key, value);
  else if (key == "final_marker") cfg.final_marker = parse_bool(key, value);
  else if (key == "retain_reference") cfg.retain_reference = parse_bool(key, value);
  else if (key == "ablation_grid") cfg.ablation_grid = parse_bool(key, value);
  else if (key == "backend") cfg.backend = std::string(value);
  else if (key == "endpoint") cfg.endpoint = std::string(value);
  else if (key == "timeout_ms") cfg.timeout_ms = parse_int<int>(key, value);
  else throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

void apply_config_text(StreamConfig& cfg, std::string_view text, const std::string& origin) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    // Section headers are accepted and ignored so small TOML files load.
    if (line.front() == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidConfig,
                  origin + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void load_config_file(StreamConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

void apply_env_overrides(StreamConfig& cfg) {
  if (const char* s = std::getenv("STREAMTTS_SEED"); s != nullptr && *s != '\0')
    set_config_value(cfg, "seed", s);
}

std::map<std::string, std::string> config_snapshot(const StreamConfig& cfg) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::ostringstream pf, fr;
  pf << cfg.p_full;
  fr << cfg.fault_rate;
  return {
      {"k", std::to_string(cfg.k)},
      {"f", std::to_string(cfg.f)},
      {"p_full", pf.str()},
      {"r_s", std::to_string(cfg.r_s)},
      {"ell_min", std::to_string(cfg.ell_min)},
      {"marker_id", std::to_string(cfg.marker_id)},
      {"seed", std::to_string(cfg.seed)},
      {"text_vocab_size", std::to_string(cfg.text_vocab_size)},
      {"speech_vocab_size", std::to_string(cfg.speech_vocab_size)},
      {"unk_id", std::to_string(cfg.unk_id)},
      {"max_text_tokens_per_word", std::to_string(cfg.max_text_tokens_per_word)},
      {"tokens_per_word", std::to_string(cfg.tokens_per_word)},
      {"max_tokens_per_word", std::to_string(cfg.max_tokens_per_word)},
      {"emit_group_g", std::to_string(cfg.emit_group_g)},
      {"sample_rate_hz", std::to_string(cfg.sample_rate_hz)},
      {"crossfade_ms", std::to_string(cfg.crossfade_ms)},
      {"align_tolerance_ms", std::to_string(cfg.align_tolerance_ms)},
      {"simulated_time", b(cfg.simulated_time)},
      {"token_latency_ns", std::to_string(cfg.token_latency_ns)},
      {"prompt_latency_ns", std::to_string(cfg.prompt_latency_ns)},
      {"fault_rate", fr.str()},
      {"final_marker", b(cfg.final_marker)},
      {"retain_reference", b(cfg.retain_reference)},
      {"ablation_grid", b(cfg.ablation_grid)},
      {"backend", cfg.backend},
      {"endpoint", cfg.endpoint},
      {"timeout_ms", std::to_string(cfg.timeout_ms)},
  };
}

// ─── RNG ─────────────────────────────────────────────────────────────────────

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  return mix64(state);
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return mix64(seed ^ mix64(fnv1a64(label)));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

SeededRng::SeededRng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64_next(sm);
}

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "uniform_below(0)");
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

bool bernoulli(SeededRng& rng, double p) {
  return rng.next_unit() < p;
}

}  // namespace streamtts
