#include "truewm/toy_corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "truewm/attacks.hpp"
#include "truewm/error.hpp"
#include "truewm/random.hpp"

namespace truewm::corpus {

namespace {

struct Vowel {
  double f1, f2, f3;
};

// Rough adult formant centers for a handful of vowels.
constexpr std::array<Vowel, 6> kVowels = {{
    {730, 1090, 2440},  // a
    {530, 1840, 2480},  // e
    {270, 2290, 3010},  // i
    {570, 840, 2410},   // o
    {300, 870, 2240},   // u
    {660, 1720, 2410},  // ae
}};

enum class Unit { kVowel, kFricative, kPause };

struct Syllable {
  Unit unit;
  std::size_t start, length;
  Vowel vowel;
};

double formant_gain(double f, const Vowel& v) {
  // Sum of resonance peaks with bandwidths growing with frequency.
  const std::array<double, 3> centers{v.f1, v.f2, v.f3};
  const std::array<double, 3> widths{80, 110, 160};
  const std::array<double, 3> heights{1.0, 0.6, 0.3};
  double g = 0.02;
  for (std::size_t i = 0; i < 3; ++i) {
    const double d = (f - centers[i]) / widths[i];
    g += heights[i] / (1.0 + d * d);
  }
  return g;
}

double smoothstep_window(std::size_t i, std::size_t n, std::size_t ramp) {
  if (n == 0) return 0.0;
  ramp = std::min(ramp, n / 2);
  if (ramp == 0) return 1.0;
  const auto edge = [&](std::size_t k) { return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(k) / ramp); };
  if (i < ramp) return edge(i);
  if (i >= n - ramp) return edge(n - 1 - i);
  return 1.0;
}

}  // namespace

audio::Waveform synth_clip(std::uint64_t seed, double seconds, unsigned sample_rate) {
  TRUEWM_REQUIRE(seconds > 0, "clip duration must be positive");
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  const double sr = sample_rate;

  // Syllable plan.
  std::vector<Syllable> plan;
  for (std::size_t pos = 0; pos < n;) {
    const double r = rng.uniform();
    Syllable s{};
    s.unit = r < 0.65 ? Unit::kVowel : (r < 0.85 ? Unit::kFricative : Unit::kPause);
    const double dur = s.unit == Unit::kPause ? rng.uniform(0.04, 0.12) : rng.uniform(0.10, 0.30);
    s.start = pos;
    s.length = std::min(n - pos, static_cast<std::size_t>(dur * sr));
    s.vowel = kVowels[rng.below(kVowels.size())];
    plan.push_back(s);
    pos += std::max<std::size_t>(s.length, 1);
  }

  // Voiced source: harmonics of a drifting f0 with vibrato.
  const double f0_base = rng.uniform(95.0, 230.0);
  const double drift_rate = rng.uniform(0.3, 0.9);
  const double drift_phase = rng.uniform(0.0, 2 * std::numbers::pi);
  const double vib_rate = rng.uniform(4.5, 6.0);
  const std::size_t max_harmonics = static_cast<std::size_t>(7000.0 / f0_base);
  std::vector<double> voiced(n, 0.0);
  std::vector<double> phase(max_harmonics + 1, 0.0);
  for (std::size_t k = 1; k <= max_harmonics; ++k) phase[k] = rng.uniform(0.0, 2 * std::numbers::pi);

  std::size_t syl = 0;
  Vowel current = plan.front().vowel;
  const double glide = std::exp(-1.0 / (0.03 * sr));  // ~30 ms formant transitions
  for (std::size_t i = 0; i < n; ++i) {
    while (syl + 1 < plan.size() && i >= plan[syl + 1].start) ++syl;
    const Vowel& target = plan[syl].vowel;
    current.f1 = glide * current.f1 + (1 - glide) * target.f1;
    current.f2 = glide * current.f2 + (1 - glide) * target.f2;
    current.f3 = glide * current.f3 + (1 - glide) * target.f3;
    if (plan[syl].unit != Unit::kVowel) continue;
    const double t = i / sr;
    const double f0 = f0_base * (1.0 + 0.08 * std::sin(2 * std::numbers::pi * drift_rate * t + drift_phase)) *
                      (1.0 + 0.015 * std::sin(2 * std::numbers::pi * vib_rate * t));
    double v = 0.0;
    for (std::size_t k = 1; k <= max_harmonics; ++k) {
      const double f = f0 * static_cast<double>(k);
      if (f >= 0.45 * sr) break;
      phase[k] += 2 * std::numbers::pi * f / sr;
      v += formant_gain(f, current) / std::pow(static_cast<double>(k), 0.7) * std::sin(phase[k]);
    }
    const auto& s = plan[syl];
    voiced[i] = v * smoothstep_window(i - s.start, s.length, static_cast<std::size_t>(0.02 * sr));
  }

  // Fricatives: band-limited noise.
  std::vector<double> hiss(n);
  for (auto& h : hiss) h = rng.normal();
  const double hi = std::min(6500.0, 0.45 * sr);
  hiss = attacks::butterworth_filter(hiss, attacks::FilterKind::kBand, 2500.0, hi, sample_rate);
  std::vector<double> out(n);
  for (const auto& s : plan) {
    for (std::size_t i = s.start; i < s.start + s.length; ++i) {
      double v = voiced[i];
      if (s.unit == Unit::kFricative) v += 0.8 * hiss[i] * smoothstep_window(i - s.start, s.length, s.length / 4);
      out[i] = v;
    }
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0 ? 0.5 / peak : 1.0;
  for (std::size_t i = 0; i < n; ++i) out[i] = out[i] * gain + 1e-3 * rng.normal();  // room noise floor
  return {std::move(out), sample_rate};
}

std::vector<audio::Waveform> make_toy_corpus(const ToyCorpusOptions& options) {
  TRUEWM_REQUIRE(options.clips > 0, "toy corpus needs at least one clip");
  std::vector<audio::Waveform> clips;
  clips.reserve(options.clips);
  for (std::size_t i = 0; i < options.clips; ++i)
    clips.push_back(synth_clip(splitmix64(options.seed + i), options.seconds, options.sample_rate));
  return clips;
}

std::vector<std::filesystem::path> write_toy_corpus(const std::filesystem::path& dir,
                                                    const ToyCorpusOptions& options) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  const auto clips = make_toy_corpus(options);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%02zu.wav", i);
    paths.push_back(dir / name);
    audio::write_wav(clips[i], paths.back());
  }
  return paths;
}

std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace truewm::corpus
