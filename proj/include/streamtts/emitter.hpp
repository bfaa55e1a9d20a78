// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "streamtts/core.hpp"

namespace streamtts {

struct FrameGroup {
  SpeechTokens tokens;
  int chunk_index = 0;
  std::size_t ordinal = 0;  // contiguous across the whole stream
  bool flush = false;       // last group of its chunk
};

struct AudioSegment {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = 0;
  int chunk_index = 0;
  std::size_t group_ordinal = 0;
};

// Greedy grouping of speech tokens into fixed-size decodable groups. Residue
// below the group size is held until the chunk is flushed.
class FrameGrouper {
 public:
  explicit FrameGrouper(int group_size);

  // Tokens for chunk `chunk_index`. Chunks must arrive in order, and a chunk
  // must be flushed before the next one starts (else OutOfOrderChunk).
  std::vector<FrameGroup> push_tokens(std::span<const SpeechToken> tokens, int chunk_index);
  // Emits the residue of `chunk_index` as a short group; never an empty one.
  std::vector<FrameGroup> flush(int chunk_index);

  std::size_t pending() const { return residue_.size(); }
  std::size_t groups_emitted() const { return next_ordinal_; }

 private:
  void check_order(int chunk_index);

  std::size_t group_size_;
  SpeechTokens residue_;
  int current_chunk_ = 0;
  bool chunk_open_ = false;
  std::size_t next_ordinal_ = 0;
};

// Deterministic stand-in for a streaming vocoder. Each token renders
// sample_rate_hz / r_s samples of a sinusoid whose frequency depends on the
// token id: f = 110 + 15 * (id % 48) Hz, amplitude 8000. The oscillator phase
// carries over between tokens, groups and chunks.
class MockVocoder {
 public:
  static constexpr double kAmplitude = 8000.0;
  static constexpr double kBaseHz = 110.0;
  static constexpr double kStepHz = 15.0;
  static constexpr int kFrequencyBins = 48;

  explicit MockVocoder(const StreamConfig& cfg);

  AudioSegment render(const FrameGroup& group);
  int samples_per_token() const { return samples_per_token_; }
  int sample_rate_hz() const { return sample_rate_; }

  static double frequency_hz(SpeechToken t);
  // Largest |x[n+1] - x[n]| the oscillator can produce at this rate,
  // including one unit of rounding.
  static double max_step(int sample_rate_hz);

 private:
  int sample_rate_;
  int samples_per_token_;
  double phase_ = 0.0;
};

// Grouping plus vocoding for one session. Tokens go in one at a time as they
// are generated; rendered segments are kept and optionally forwarded.
class StreamEmitter {
 public:
  using SegmentSink = std::function<void(const AudioSegment&)>;

  explicit StreamEmitter(const StreamConfig& cfg);

  // Returns the number of groups rendered by this call.
  std::size_t push_tokens(std::span<const SpeechToken> tokens, int chunk_index);
  std::size_t flush(int chunk_index);

  void set_segment_sink(SegmentSink sink) { sink_ = std::move(sink); }
  // With retain off, segments go only to the sink; counters still advance.
  void set_retain_segments(bool retain) { retain_ = retain; }
  const std::vector<AudioSegment>& segments() const { return segments_; }
  std::size_t total_tokens() const { return total_tokens_; }
  std::size_t total_samples() const { return total_samples_; }
  int sample_rate_hz() const { return vocoder_.sample_rate_hz(); }

 private:
  std::size_t render(std::vector<FrameGroup> groups);

  FrameGrouper grouper_;
  MockVocoder vocoder_;
  std::vector<AudioSegment> segments_;
  SegmentSink sink_;
  bool retain_ = true;
  std::size_t total_tokens_ = 0;
  std::size_t total_samples_ = 0;
};

// Joins segments. With crossfade_ms > 0, consecutive chunks are overlap-added
// with a linear fade of that length (this shortens the output).
std::vector<std::int16_t> concatenate_audio(std::span<const AudioSegment> segments, int crossfade_ms);

// RIFF/WAVE, PCM 16-bit mono, little-endian.
std::string encode_wav(std::span<const std::int16_t> samples, int sample_rate_hz);
void write_wav(std::span<const AudioSegment> segments, const std::string& path, int crossfade_ms = 0,
               int sample_rate_hz = 0);
void write_wav_samples(std::span<const std::int16_t> samples, int sample_rate_hz, const std::string& path);

struct WavData {
  int sample_rate_hz = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::vector<std::int16_t> samples;
};

WavData decode_wav(std::string_view bytes);
WavData read_wav(const std::string& path);

}  // namespace streamtts
