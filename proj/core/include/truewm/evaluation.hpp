#pragma once

// Robustness evaluation: embed random bits into every clip, attack, extract
// and score.

#include <cstdint>
#include <string>
#include <vector>

#include "truewm/attacks.hpp"
#include "truewm/audio_io.hpp"
#include "truewm/metrics.hpp"
#include "truewm/model.hpp"

namespace truewm::evaluation {

struct NamedClip {
  std::string name;
  audio::Waveform wave;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  /// Independent (bits, attack noise) draws per clip; row values are means.
  std::size_t trials = 1;
  /// Worker threads across clips (0 = TRUE_WM_THREADS or hardware concurrency).
  std::size_t threads = 0;
  bool with_ssim = true;
  std::string model_id;
};

/// Thread count after applying the TRUE_WM_THREADS cap.
std::size_t worker_threads(std::size_t requested);

/// One row per (clip, attack) in input order. snr_db and ssim compare the
/// clean clip with the received (watermarked, then attacked) signal.
metrics::EvalReport evaluate(const Model& model, const std::vector<NamedClip>& clips,
                             const std::vector<attacks::AttackSpec>& attack_list, const EvalOptions& options = {});

}  // namespace truewm::evaluation
