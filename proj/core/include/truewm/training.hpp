#pragma once

// Joint optimization of the hiding module and decoder with the attack
// simulator between them.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "truewm/audio_io.hpp"
#include "truewm/dsp.hpp"
#include "truewm/model.hpp"

namespace truewm::training {

struct LossWeights {
  double mel = 0.8;  // lambda_1
  double mag = 0.1;  // lambda_2
  double wm = 0.3;   // alpha

  void validate() const;
};

struct SpectralConfig {
  dsp::StftConfig stft;
  dsp::MelConfig mel;
};

/// Mean |mel(s) - mel(s_hat)| over batch, frames and mel bands.
nn::Tensor mel_loss(const nn::Tensor& s, const nn::Tensor& s_hat, const SpectralConfig& config = {});
/// Mean |log(max(|S|, floor)) - log(max(|S_hat|, floor))| over STFT bins.
nn::Tensor mag_loss(const nn::Tensor& s, const nn::Tensor& s_hat, const SpectralConfig& config = {});
/// Mean binary cross-entropy between soft bits and the embedded bits.
nn::Tensor watermark_loss(const nn::Tensor& soft_bits, const nn::Tensor& bits);

struct LossBreakdown {
  nn::Tensor total;  // differentiable scalar
  double mel = 0.0;
  double mag = 0.0;
  double wm = 0.0;
  double value = 0.0;
};

/// weights.mel * L_mel + weights.mag * L_mag + weights.wm * L_wm.
LossBreakdown total_loss(const nn::Tensor& s, const nn::Tensor& s_hat, const nn::Tensor& bits,
                         const nn::Tensor& soft_bits, const LossWeights& weights, const SpectralConfig& config = {});

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  double lr = 2e-4;
  std::uint64_t seed = 0;
  std::size_t bits = 32;
  std::size_t window = 16000;
  bool attack_enabled = true;
  /// Stop after this many optimizer steps in total (0 = run all epochs).
  std::size_t max_steps = 0;
  double val_fraction = 0.1;
  LossWeights weights;
  /// The mel and magnitude weights are zero for the first `fidelity_hold`
  /// steps, then ramp linearly to their configured values over
  /// `fidelity_ramp` steps. This gives the decoder time to find the watermark
  /// before fidelity pressure removes it.
  std::size_t fidelity_hold = 0;
  std::size_t fidelity_ramp = 0;
  SpectralConfig spectral;
  /// Save a resumable bundle every N steps and at the end (0 = only at the end).
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_path;
  /// Optional progress sink, one line per epoch.
  std::ostream* progress = nullptr;

  void validate() const;
};

struct StepResult {
  double mel = 0.0;
  double mag = 0.0;
  double wm = 0.0;
  double total = 0.0;
};

/// Owns the optimizer for one model. Step randomness (watermarks, attacks)
/// comes from Rng::derive(seed, step), so a resumed trainer reproduces an
/// uninterrupted run.
class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config);

  /// One optimizer update on a batch of window-length segments.
  StepResult step(const std::vector<std::vector<double>>& batch);

  std::uint64_t steps() const { return optimizer_.steps(); }
  nn::AdamW& optimizer() { return optimizer_; }
  const nn::AdamW& optimizer() const { return optimizer_; }
  void restore(const OptimizerState& state);

 private:
  Model& model_;
  TrainConfig config_;
  nn::AdamW optimizer_;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  StepResult mean;
  double val_acc = 0.0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochLog& row);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded clip-level split; at least one training clip, and at least one
/// validation clip whenever there are two or more clips and val_fraction > 0.
Split split_clips(std::size_t clips, double val_fraction, std::uint64_t seed);

/// Window-length segments of every clip in `indices` (resampled to 16 kHz).
std::vector<std::vector<double>> make_segments(const std::vector<audio::Waveform>& clips,
                                               const std::vector<std::size_t>& indices, std::size_t window);

/// Clean accuracy over segments with fresh random bits per segment.
double clean_accuracy(const Model& model, const std::vector<std::vector<double>>& segments, std::uint64_t seed);

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  Split split;
  std::optional<OptimizerState> optimizer;
};

/// Full training run. Passing `resume` continues from a bundle saved by an
/// earlier run with the same configuration.
TrainResult train_loop(const TrainConfig& config, const std::vector<audio::Waveform>& corpus,
                       const Bundle* resume = nullptr, std::ostream* csv = nullptr);

}  // namespace truewm::training
