#pragma once

// STFT magnitude and mel transforms. Both are differentiable tensor ops so the
// fidelity losses can backpropagate into the waveform.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "truewm/tensor.hpp"

namespace truewm::dsp {

struct StftConfig {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;

  void validate() const;
  std::size_t bins() const { return n_fft / 2 + 1; }
  /// Frame count with reflect center padding of n_fft/2 on both sides.
  std::size_t frames(std::size_t length) const { return 1 + length / hop; }
};

struct MelConfig {
  std::size_t n_mels = 80;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means sample_rate / 2
  unsigned sample_rate = 16000;
};

double hz_to_mel(double hz);   // HTK: 2595 log10(1 + f/700)
double mel_to_hz(double mel);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// Triangular HTK-scale filterbank, [n_mels x (n_fft/2 + 1)], unnormalized.
class MelFilterbank {
 public:
  MelFilterbank(const StftConfig& stft, const MelConfig& mel);

  std::size_t n_mels() const { return n_mels_; }
  std::size_t n_bins() const { return n_bins_; }
  double weight(std::size_t mel, std::size_t bin) const { return (*weights_)[mel * n_bins_ + bin]; }
  std::span<const double> weights() const { return *weights_; }
  const std::shared_ptr<const std::vector<double>>& shared_weights() const { return weights_; }
  /// Peak frequency of each filter in Hz.
  std::span<const double> centers_hz() const { return centers_; }

 private:
  std::size_t n_mels_;
  std::size_t n_bins_;
  std::shared_ptr<const std::vector<double>> weights_;
  std::vector<double> centers_;
};

/// Process-wide cache; filterbanks are immutable once built.
const MelFilterbank& shared_filterbank(const StftConfig& stft, const MelConfig& mel);

/// Magnitude spectrogram. [B, 1, L] -> [B, frames, bins]; [L] -> [frames, bins].
nn::Tensor stft_magnitude(const nn::Tensor& signal, const StftConfig& cfg);
/// Projects the last (frequency-bin) axis through the filterbank.
nn::Tensor apply_filterbank(const nn::Tensor& magnitude, const MelFilterbank& fb);
nn::Tensor mel_spectrogram(const nn::Tensor& signal, const StftConfig& stft, const MelFilterbank& fb);

inline constexpr double kLogFloor = 1e-5;
/// log(max(x, floor)).
nn::Tensor log_compress(const nn::Tensor& x, double floor = kLogFloor);

/// Convenience for plain sample buffers (no gradient tracking).
nn::Tensor as_signal(std::span<const double> samples);

}  // namespace truewm::dsp
