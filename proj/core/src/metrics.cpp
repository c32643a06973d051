#include "truewm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>

#include "truewm/error.hpp"

namespace truewm::metrics {

double bit_accuracy(const WatermarkBits& a, const WatermarkBits& b) {
  TRUEWM_REQUIRE(a.size() == b.size(), "bit_accuracy: length mismatch");
  TRUEWM_REQUIRE(a.size() > 0, "bit_accuracy: empty watermark");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double snr_db(std::span<const double> ref, std::span<const double> test) {
  TRUEWM_REQUIRE(ref.size() == test.size(), "snr_db: length mismatch");
  double signal = 0.0, error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    signal += ref[i] * ref[i];
    const double d = ref[i] - test[i];
    error += d * d;
  }
  TRUEWM_REQUIRE(signal > 0.0, "snr_db: reference is silent");
  if (error == 0.0) return kSnrExact;
  return 10.0 * std::log10(signal / error);
}

double ssim_2d(std::span<const double> a, std::span<const double> b, std::size_t rows, std::size_t cols,
               const SsimOptions& options) {
  TRUEWM_REQUIRE(a.size() == rows * cols && b.size() == rows * cols, "ssim: map size mismatch");
  TRUEWM_REQUIRE(rows > 0 && cols > 0, "ssim: empty map");
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const double range = std::max(*amax, *bmax) - std::min(*amin, *bmin);
  // Identical constant maps are perfectly similar.
  const double r = range > 0 ? range : 1.0;
  const double c1 = (options.k1 * r) * (options.k1 * r);
  const double c2 = (options.k2 * r) * (options.k2 * r);

  const std::size_t wr = std::min(options.window, rows);
  const std::size_t wc = std::min(options.window, cols);
  const double n = static_cast<double>(wr * wc);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + wr <= rows; r0 += options.stride) {
    for (std::size_t c0 = 0; c0 + wc <= cols; c0 += options.stride) {
      double sa = 0, sb = 0;
      for (std::size_t i = r0; i < r0 + wr; ++i)
        for (std::size_t j = c0; j < c0 + wc; ++j) {
          sa += a[i * cols + j];
          sb += b[i * cols + j];
        }
      const double ma = sa / n, mb = sb / n;
      double va = 0, vb = 0, cov = 0;
      for (std::size_t i = r0; i < r0 + wr; ++i)
        for (std::size_t j = c0; j < c0 + wc; ++j) {
          const double da = a[i * cols + j] - ma, db = b[i * cols + j] - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= n;
      vb /= n;
      cov /= n;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double spectrogram_ssim(std::span<const double> ref, std::span<const double> test, const dsp::StftConfig& stft,
                        const dsp::MelConfig& mel, const SsimOptions& options) {
  TRUEWM_REQUIRE(ref.size() == test.size(), "spectrogram_ssim: length mismatch");
  TRUEWM_REQUIRE(ref.size() >= stft.n_fft, "spectrogram_ssim: clip is shorter than one STFT frame");
  nn::NoGradScope no_grad;
  const auto& fb = dsp::shared_filterbank(stft, mel);
  const auto a = dsp::log_compress(dsp::mel_spectrogram(dsp::as_signal(ref), stft, fb));
  const auto b = dsp::log_compress(dsp::mel_spectrogram(dsp::as_signal(test), stft, fb));
  return ssim_2d(a.data(), b.data(), a.dim(0), a.dim(1), options);
}

void EvalReport::add(EvalRow row) { rows_.push_back(std::move(row)); }

std::vector<EvalRow> EvalReport::aggregate() const {
  std::vector<EvalRow> out;
  std::vector<std::size_t> counts;
  std::map<std::string, std::size_t> index;
  for (const auto& row : rows_) {
    auto [it, fresh] = index.try_emplace(row.attack, out.size());
    if (fresh) {
      EvalRow agg = row;
      agg.clip = "mean";
      agg.acc = agg.snr_db = agg.ssim = 0.0;
      out.push_back(agg);
      counts.push_back(0);
    }
    auto& agg = out[it->second];
    agg.acc += row.acc;
    agg.snr_db += row.snr_db;
    agg.ssim += row.ssim;
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double n = static_cast<double>(counts[i]);
    out[i].acc /= n;
    out[i].snr_db /= n;
    out[i].ssim /= n;
  }
  return out;
}

double EvalReport::mean_acc(const std::string& attack) const {
  for (const auto& row : aggregate())
    if (row.attack == attack) return row.acc;
  return std::nan("");
}

namespace {

void csv_row(std::ostream& out, const EvalRow& r) {
  out << r.clip << ',' << r.attack << ',' << r.capacity << ',' << r.model_id << ',' << r.acc << ',' << r.snr_db
      << ',' << r.ssim << ",,\n";
}

}  // namespace

void EvalReport::write_csv(std::ostream& out) const {
  const auto old = out.precision(10);
  // PESQ and STOI are left for externally supplied scores.
  out << "clip,attack,capacity,model,acc,snr_db,ssim,pesq,stoi\n";
  for (const auto& r : rows_) csv_row(out, r);
  for (const auto& r : aggregate()) csv_row(out, r);
  out.precision(old);
}

void EvalReport::write_table(std::ostream& out) const {
  std::size_t width = 6;
  for (const auto& r : rows_) width = std::max(width, r.attack.size());
  out << std::left << std::setw(static_cast<int>(width + 2)) << "attack" << std::right << std::setw(8) << "acc"
      << std::setw(10) << "snr_db" << std::setw(8) << "ssim" << '\n';
  for (const auto& r : aggregate()) {
    out << std::left << std::setw(static_cast<int>(width + 2)) << r.attack << std::right << std::fixed
        << std::setprecision(4) << std::setw(8) << r.acc << std::setprecision(2) << std::setw(10) << r.snr_db
        << std::setprecision(4) << std::setw(8) << r.ssim << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace truewm::metrics
