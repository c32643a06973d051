#pragma once

// Deterministic synthetic speech-like clips: a glottal harmonic source shaped
// by moving vowel formants, with fricative noise bursts and short pauses.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "truewm/audio_io.hpp"

namespace truewm::corpus {

struct ToyCorpusOptions {
  std::size_t clips = 20;
  double seconds = 2.0;
  unsigned sample_rate = audio::kCanonicalRate;
  std::uint64_t seed = 20240917;
};

audio::Waveform synth_clip(std::uint64_t seed, double seconds, unsigned sample_rate = audio::kCanonicalRate);
std::vector<audio::Waveform> make_toy_corpus(const ToyCorpusOptions& options = {});
/// Writes clip_00.wav ... as PCM16; returns the paths in order.
std::vector<std::filesystem::path> write_toy_corpus(const std::filesystem::path& dir,
                                                    const ToyCorpusOptions& options = {});

/// Every *.wav under `dir` (non-recursive), sorted by file name.
std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir);

}  // namespace truewm::corpus
