#pragma once

// Evaluation metrics: bit accuracy, waveform SNR and SSIM between log-mel
// spectrograms.

#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "truewm/dsp.hpp"
#include "truewm/watermark.hpp"

namespace truewm::metrics {

double bit_accuracy(const WatermarkBits& a, const WatermarkBits& b);

/// Returned by snr_db when test equals ref exactly.
inline constexpr double kSnrExact = std::numeric_limits<double>::infinity();

/// 10 log10(sum ref^2 / sum (ref - test)^2).
double snr_db(std::span<const double> ref, std::span<const double> test);

struct SsimOptions {
  std::size_t window = 8;
  std::size_t stride = 4;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// SSIM between two equally sized 2-D maps [rows x cols]. The dynamic range is
/// max - min over both maps, which keeps the index symmetric. Windows shrink to
/// the map size when a dimension is smaller than the window.
double ssim_2d(std::span<const double> a, std::span<const double> b, std::size_t rows, std::size_t cols,
               const SsimOptions& options = {});

/// SSIM of the log-mel spectrograms of two signals.
double spectrogram_ssim(std::span<const double> ref, std::span<const double> test,
                        const dsp::StftConfig& stft = {}, const dsp::MelConfig& mel = {},
                        const SsimOptions& options = {});

struct EvalRow {
  std::string clip;
  std::string attack;
  std::size_t capacity = 0;
  std::string model_id;
  double acc = 0.0;
  double snr_db = 0.0;
  double ssim = 0.0;
};

/// Per-clip rows plus per-attack aggregates (mean over clips).
class EvalReport {
 public:
  void add(EvalRow row);
  const std::vector<EvalRow>& rows() const { return rows_; }
  /// One row per attack in first-seen order with clip = "mean".
  std::vector<EvalRow> aggregate() const;
  /// Mean accuracy for one attack label; NaN when absent.
  double mean_acc(const std::string& attack) const;

  void write_csv(std::ostream& out) const;
  void write_table(std::ostream& out) const;

 private:
  std::vector<EvalRow> rows_;
};

}  // namespace truewm::metrics
