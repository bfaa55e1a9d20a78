// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "streamtts/io.hpp"

namespace streamtts {

FrameGrouper::FrameGrouper(int group_size) : group_size_(static_cast<std::size_t>(group_size)) {
  if (group_size < 1) throw Error(ErrorCode::InvalidArgument, "group size must be >= 1");
}

void FrameGrouper::check_order(int chunk_index) {
  if (chunk_open_ && chunk_index != current_chunk_)
    throw Error(ErrorCode::OutOfOrderChunk, "chunk " + std::to_string(chunk_index) + " arrived before chunk " +
                                                std::to_string(current_chunk_) + " was flushed");
  if (!chunk_open_ && chunk_index <= current_chunk_)
    throw Error(ErrorCode::OutOfOrderChunk, "chunk " + std::to_string(chunk_index) + " is not after chunk " +
                                                std::to_string(current_chunk_));
}

std::vector<FrameGroup> FrameGrouper::push_tokens(std::span<const SpeechToken> tokens, int chunk_index) {
  check_order(chunk_index);
  current_chunk_ = chunk_index;
  chunk_open_ = true;

  std::vector<FrameGroup> out;
  for (auto t : tokens) {
    residue_.push_back(t);
    if (residue_.size() == group_size_) {
      out.push_back(FrameGroup{std::move(residue_), chunk_index, next_ordinal_++, false});
      residue_.clear();
    }
  }
  return out;
}

std::vector<FrameGroup> FrameGrouper::flush(int chunk_index) {
  if (!chunk_open_) {
    // A chunk that produced no tokens has nothing to flush.
    check_order(chunk_index);
    current_chunk_ = chunk_index;
    return {};
  }
  if (chunk_index != current_chunk_)
    throw Error(ErrorCode::OutOfOrderChunk, "flush of chunk " + std::to_string(chunk_index) +
                                                " while chunk " + std::to_string(current_chunk_) + " is open");
  chunk_open_ = false;
  std::vector<FrameGroup> out;
  if (!residue_.empty()) {
    out.push_back(FrameGroup{std::move(residue_), chunk_index, next_ordinal_++, true});
    residue_.clear();
  }
  return out;
}

// ─── Mock vocoder ────────────────────────────────────────────────────────────

MockVocoder::MockVocoder(const StreamConfig& cfg) : sample_rate_(cfg.sample_rate_hz) {
  if (cfg.r_s <= 0 || cfg.sample_rate_hz <= 0 || cfg.sample_rate_hz % cfg.r_s != 0)
    throw Error(ErrorCode::IncompatibleRates, "sample_rate_hz " + std::to_string(cfg.sample_rate_hz) +
                                                  " is not a multiple of r_s " + std::to_string(cfg.r_s));
  samples_per_token_ = cfg.sample_rate_hz / cfg.r_s;
}

double MockVocoder::frequency_hz(SpeechToken t) {
  return kBaseHz + kStepHz * static_cast<double>(t.id % kFrequencyBins);
}

double MockVocoder::max_step(int sample_rate_hz) {
  const double f_max = kBaseHz + kStepHz * (kFrequencyBins - 1);
  return kAmplitude * 2.0 * std::numbers::pi * f_max / sample_rate_hz + 1.0;
}

AudioSegment MockVocoder::render(const FrameGroup& group) {
  AudioSegment seg;
  seg.sample_rate_hz = sample_rate_;
  seg.chunk_index = group.chunk_index;
  seg.group_ordinal = group.ordinal;
  seg.samples.reserve(group.tokens.size() * static_cast<std::size_t>(samples_per_token_));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (auto t : group.tokens) {
    const double step = two_pi * frequency_hz(t) / sample_rate_;
    for (int i = 0; i < samples_per_token_; ++i) {
      seg.samples.push_back(static_cast<std::int16_t>(std::lround(kAmplitude * std::sin(phase_))));
      phase_ += step;
      if (phase_ >= two_pi) phase_ -= two_pi;
    }
  }
  return seg;
}

StreamEmitter::StreamEmitter(const StreamConfig& cfg) : grouper_(cfg.emit_group_g), vocoder_(cfg) {}

std::size_t StreamEmitter::render(std::vector<FrameGroup> groups) {
  for (const auto& g : groups) {
    total_tokens_ += g.tokens.size();
    AudioSegment seg = vocoder_.render(g);
    total_samples_ += seg.samples.size();
    if (sink_) sink_(seg);
    if (retain_) segments_.push_back(std::move(seg));
  }
  return groups.size();
}

std::size_t StreamEmitter::push_tokens(std::span<const SpeechToken> tokens, int chunk_index) {
  return render(grouper_.push_tokens(tokens, chunk_index));
}

std::size_t StreamEmitter::flush(int chunk_index) { return render(grouper_.flush(chunk_index)); }

std::vector<std::int16_t> concatenate_audio(std::span<const AudioSegment> segments, int crossfade_ms) {
  std::vector<std::int16_t> out;
  std::size_t total = 0;
  for (const auto& s : segments) total += s.samples.size();
  out.reserve(total);

  int last_chunk = segments.empty() ? 0 : segments.front().chunk_index;
  for (const auto& seg : segments) {
    std::size_t start = 0;
    if (crossfade_ms > 0 && seg.chunk_index != last_chunk && !out.empty()) {
      const auto n = std::min({static_cast<std::size_t>(seg.sample_rate_hz) * static_cast<std::size_t>(crossfade_ms) / 1000,
                               out.size(), seg.samples.size()});
      const std::size_t base = out.size() - n;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = static_cast<double>(i + 1) / static_cast<double>(n + 1);
        const double mixed = (1.0 - w) * out[base + i] + w * seg.samples[i];
        out[base + i] = static_cast<std::int16_t>(std::lround(std::clamp(mixed, -32768.0, 32767.0)));
      }
      start = n;
    }
    out.insert(out.end(), seg.samples.begin() + static_cast<std::ptrdiff_t>(start), seg.samples.end());
    last_chunk = seg.chunk_index;
  }
  return out;
}

// ─── WAV ─────────────────────────────────────────────────────────────────────

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}
std::uint32_t get_u32(std::string_view s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + static_cast<std::size_t>(i)]);
  return v;
}
std::uint16_t get_u16(std::string_view s, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) |
                                    (static_cast<unsigned char>(s[at + 1]) << 8));
}

}  // namespace

std::string encode_wav(std::span<const std::int16_t> samples, int sample_rate_hz) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);  // byte rate
  put_u16(out, 2);                                               // block align
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (auto s : samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

void write_wav_samples(std::span<const std::int16_t> samples, int sample_rate_hz, const std::string& path) {
  write_file_atomic(path, encode_wav(samples, sample_rate_hz));
}

void write_wav(std::span<const AudioSegment> segments, const std::string& path, int crossfade_ms,
               int sample_rate_hz) {
  int rate = sample_rate_hz;
  for (const auto& s : segments) {
    if (rate == 0) rate = s.sample_rate_hz;
    if (s.sample_rate_hz != rate)
      throw Error(ErrorCode::IncompatibleRates, "segments have mixed sample rates");
  }
  if (rate == 0) rate = StreamConfig{}.sample_rate_hz;
  const auto samples = concatenate_audio(segments, crossfade_ms);
  write_wav_samples(samples, rate, path);
}

WavData decode_wav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE")
    throw Error(ErrorCode::Parse, "not a RIFF/WAVE file");
  WavData out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string_view id = b.substr(pos, 4);
    const std::uint32_t size = get_u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw Error(ErrorCode::Parse, "truncated WAV chunk");
    if (id == "fmt ") {
      if (size < 16 || get_u16(b, body) != 1) throw Error(ErrorCode::Parse, "only PCM WAV is supported");
      out.channels = get_u16(b, body + 2);
      out.sample_rate_hz = static_cast<int>(get_u32(b, body + 4));
      out.bits_per_sample = get_u16(b, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt || out.bits_per_sample != 16) throw Error(ErrorCode::Parse, "expected 16-bit PCM data");
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = static_cast<std::int16_t>(get_u16(b, body + 2 * i));
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw Error(ErrorCode::Parse, "WAV has no data chunk");
}

WavData read_wav(const std::string& path) { return decode_wav(read_file(path)); }

}  // namespace streamtts
