#include "truewm/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "truewm/error.hpp"

namespace truewm::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

std::int16_t to_pcm16(double sample) {
  const double clamped = std::clamp(sample, -1.0, 1.0 - 1.0 / 32768.0);
  return static_cast<std::int16_t>(std::round(clamped * 32768.0));
}

double from_pcm16(std::int16_t word) { return static_cast<double>(word) / 32768.0; }

Waveform parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ParseError("RIFF header: file shorter than 12 bytes");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) throw ParseError("RIFF header: missing 'RIFF' tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) throw ParseError("RIFF header: form type is not 'WAVE'");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size()) throw ParseError("'fmt ' chunk: truncated (size " + std::to_string(size) + ")");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw ParseError("'fmt ' chunk: extensible format without sub-format GUID");
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError("'data' chunk: appears before 'fmt ' chunk");
      data = bytes.data() + body;
      // Streams written without a final size carry 0 or 0xFFFFFFFF.
      const bool streamed = size == 0 || size == 0xFFFFFFFFu;
      if (!streamed && body + size > bytes.size())
        throw ParseError("'data' chunk: truncated (declares " + std::to_string(size) + " bytes, " +
                         std::to_string(bytes.size() - body) + " present)");
      data_size = streamed ? bytes.size() - body : size;
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw ParseError("'fmt ' chunk: not found");
  if (data == nullptr) throw ParseError("'data' chunk: not found");
  if (channels != 1 && channels != 2)
    throw UnsupportedFormat("unsupported channel count " + std::to_string(channels) + " (mono or stereo only)");
  if (rate == 0) throw ParseError("'fmt ' chunk: sample rate is zero");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw UnsupportedFormat("unsupported codec: format tag " + std::to_string(format) + " with " +
                            std::to_string(bits) + " bits (PCM16 or float32 only)");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + (f * channels + c) * width;
      if (pcm16) {
        acc += from_pcm16(static_cast<std::int16_t>(read_u16(p)));
      } else {
        acc += static_cast<double>(std::bit_cast<float>(read_u32(p)));
      }
    }
    w.samples[f] = acc / channels;
  }
  return w;
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const UnsupportedFormat& e) {
    throw UnsupportedFormat(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const Waveform& wave) {
  TRUEWM_REQUIRE(wave.sample_rate > 0, "write_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, wave.sample_rate);
  put_u32(out, wave.sample_rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : wave.samples) {
    TRUEWM_REQUIRE(std::isfinite(s), "write_wav: non-finite sample");
    put_u16(out, static_cast<std::uint16_t>(to_pcm16(s)));
  }
  return out;
}

void write_wav(const Waveform& wave, const std::filesystem::path& path) {
  const auto bytes = encode_wav(wave);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<double> resample_to_length(std::span<const double> samples, std::size_t length) {
  if (length == 0 || samples.empty()) return std::vector<double>(length, 0.0);
  if (length == samples.size()) return {samples.begin(), samples.end()};
  const double step = static_cast<double>(samples.size()) / static_cast<double>(length);
  std::vector<double> out(length);
  const std::size_t last = samples.size() - 1;
  for (std::size_t i = 0; i < length; ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto i0 = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = pos - static_cast<double>(i0);
    out[i] = samples[i0] + (samples[i1] - samples[i0]) * frac;
  }
  return out;
}

Waveform resample_linear(const Waveform& wave, unsigned target_rate) {
  TRUEWM_REQUIRE(target_rate > 0, "resample_linear: target rate must be positive");
  if (target_rate == wave.sample_rate) return wave;
  const auto length = static_cast<std::size_t>(
      std::llround(static_cast<double>(wave.samples.size()) * target_rate / static_cast<double>(wave.sample_rate)));
  return Waveform{resample_to_length(wave.samples, length), target_rate};
}

SegmentPlan SegmentPlan::for_length(std::size_t length, std::size_t segment_length) {
  TRUEWM_REQUIRE(segment_length > 0, "segment length must be positive");
  SegmentPlan p;
  p.segment_length = segment_length;
  p.hop = segment_length;
  p.source_length = length;
  p.count = (length + segment_length - 1) / segment_length;
  if (p.count == 0) p.count = 1;  // empty input still yields one (silent) window
  p.tail_padding = p.count * segment_length - length;
  p.padded_tail = p.tail_padding > 0;
  return p;
}

std::vector<std::vector<double>> segment(std::span<const double> samples, const SegmentPlan& plan) {
  TRUEWM_REQUIRE(plan.segment_length > 0 && plan.hop == plan.segment_length, "segment plan must be non-overlapping");
  TRUEWM_REQUIRE(samples.size() == plan.source_length, "segment plan was built for a different length");
  std::vector<std::vector<double>> out(plan.count, std::vector<double>(plan.segment_length, 0.0));
  for (std::size_t s = 0; s < plan.count; ++s) {
    const std::size_t begin = s * plan.hop;
    const std::size_t n = std::min(plan.segment_length, samples.size() - std::min(begin, samples.size()));
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(begin), n, out[s].begin());
  }
  return out;
}

std::vector<double> assemble(const std::vector<std::vector<double>>& segments, const SegmentPlan& plan) {
  TRUEWM_REQUIRE(segments.size() == plan.count, "assemble: segment count does not match plan");
  std::vector<double> out;
  out.reserve(plan.count * plan.segment_length);
  for (const auto& s : segments) {
    TRUEWM_REQUIRE(s.size() == plan.segment_length, "assemble: segment has the wrong length");
    out.insert(out.end(), s.begin(), s.end());
  }
  out.resize(plan.source_length);
  return out;
}

}  // namespace truewm::audio
