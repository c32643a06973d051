#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace truewm::audio {

inline constexpr unsigned kCanonicalRate = 16000;

struct Waveform {
  std::vector<double> samples;
  unsigned sample_rate = kCanonicalRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// RIFF/WAVE with PCM16 or IEEE float32 data, mono or stereo. Stereo is
/// averaged to mono; PCM16 maps to [-1, 1) by dividing by 32768.
Waveform read_wav(const std::filesystem::path& path);
Waveform parse_wav(std::span<const std::uint8_t> bytes);

/// PCM16 little-endian with a canonical 44-byte header.
void write_wav(const Waveform& wave, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(const Waveform& wave);

/// Clamp to [-1, 1 - 1/32768], scale by 32768, round half away from zero.
std::int16_t to_pcm16(double sample);
double from_pcm16(std::int16_t word);

/// Linear interpolation onto the target grid; output length
/// round(L * target / source).
Waveform resample_linear(const Waveform& wave, unsigned target_rate);
/// Linear interpolation of `samples` to exactly `length` points spanning the
/// same time interval (sample i maps to position i * src/dst).
std::vector<double> resample_to_length(std::span<const double> samples, std::size_t length);

struct SegmentPlan {
  std::size_t segment_length = kCanonicalRate;
  std::size_t hop = kCanonicalRate;  // always equal to segment_length
  std::size_t count = 0;
  std::size_t source_length = 0;
  bool padded_tail = false;  // final window was zero-padded
  std::size_t tail_padding = 0;

  static SegmentPlan for_length(std::size_t length, std::size_t segment_length);
};

/// Non-overlapping windows; the final partial window is zero-padded.
std::vector<std::vector<double>> segment(std::span<const double> samples, const SegmentPlan& plan);
/// Concatenates windows and drops the tail padding.
std::vector<double> assemble(const std::vector<std::vector<double>>& segments, const SegmentPlan& plan);

}  // namespace truewm::audio
