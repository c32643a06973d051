#include "truewm/dsp.hpp"

#include <fftw3.h>

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "truewm/error.hpp"
#include "truewm/ops.hpp"

namespace truewm::dsp {

namespace {

// FFTW plans are created under a lock and executed with the new-array API,
// which is thread-safe.
struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

const FftPlans& plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, FftPlans> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int size = static_cast<int>(n);
  auto* real = fftw_alloc_real(n);
  auto* cplx = fftw_alloc_complex(n / 2 + 1);
  FftPlans p;
  p.forward = fftw_plan_dft_r2c_1d(size, real, cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(size, cplx, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(real);
  fftw_free(cplx);
  return cache.emplace(n, p).first->second;
}

// Mirror index into [0, n) for reflect padding, valid for any offset.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

void StftConfig::validate() const {
  TRUEWM_REQUIRE(n_fft >= 2 && (n_fft & (n_fft - 1)) == 0, "STFT n_fft must be a power of two");
  TRUEWM_REQUIRE(hop >= 1 && hop <= n_fft, "STFT hop must be in [1, n_fft]");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

MelFilterbank::MelFilterbank(const StftConfig& stft, const MelConfig& mel)
    : n_mels_(mel.n_mels), n_bins_(stft.bins()) {
  stft.validate();
  TRUEWM_REQUIRE(mel.n_mels >= 1, "mel filterbank needs at least one band");
  TRUEWM_REQUIRE(mel.sample_rate > 0, "mel filterbank needs a positive sample rate");
  const double nyquist = mel.sample_rate / 2.0;
  const double f_max = mel.f_max > 0 ? mel.f_max : nyquist;
  TRUEWM_REQUIRE(mel.f_min >= 0 && mel.f_min < f_max && f_max <= nyquist, "mel range must satisfy 0 <= f_min < f_max <= nyquist");

  const double mel_lo = hz_to_mel(mel.f_min), mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels_ + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels_ + 1));

  std::vector<double> weights(n_mels_ * n_bins_, 0.0);
  centers_.resize(n_mels_);
  for (std::size_t m = 0; m < n_mels_; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    centers_[m] = mid;
    bool any = false;
    for (std::size_t k = 0; k < n_bins_; ++k) {
      const double f = static_cast<double>(k) * mel.sample_rate / static_cast<double>(stft.n_fft);
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      const double w = std::max(0.0, std::min(up, down));
      weights[m * n_bins_ + k] = w;
      any = any || w > 0.0;
    }
    TRUEWM_REQUIRE(any, "mel band " + std::to_string(m) + " covers no FFT bin; use fewer mels or a larger n_fft");
  }
  weights_ = std::make_shared<const std::vector<double>>(std::move(weights));
}

const MelFilterbank& shared_filterbank(const StftConfig& stft, const MelConfig& mel) {
  static std::mutex mu;
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t, double, double, unsigned>,
                  std::unique_ptr<MelFilterbank>>
      cache;
  std::lock_guard lock(mu);
  auto key = std::make_tuple(stft.n_fft, stft.hop, mel.n_mels, mel.f_min, mel.f_max, mel.sample_rate);
  auto& slot = cache[key];
  if (!slot) slot = std::make_unique<MelFilterbank>(stft, mel);
  return *slot;
}

nn::Tensor stft_magnitude(const nn::Tensor& signal, const StftConfig& cfg) {
  cfg.validate();
  const bool batched = signal.rank() == 3;
  TRUEWM_REQUIRE(batched ? signal.dim(1) == 1 : signal.rank() == 1,
                 "stft_magnitude expects [B, 1, L] or [L], got " + nn::shape_str(signal.shape()));
  const std::size_t batch = batched ? signal.dim(0) : 1;
  const std::size_t len = signal.shape().back();
  const std::size_t n = cfg.n_fft, bins = cfg.bins(), frames = cfg.frames(len);
  const auto pad = static_cast<std::ptrdiff_t>(n / 2);
  const auto window = hann_window(n);
  const auto& plans = plans_for(n);

  std::vector<double> mag(batch * frames * bins);
  auto spectrum = std::make_shared<std::vector<std::complex<double>>>(batch * frames * bins);
  std::vector<double> buf(n);
  auto x = signal.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.data() + b * len;
    for (std::size_t f = 0; f < frames; ++f) {
      const auto start = static_cast<std::ptrdiff_t>(f * cfg.hop) - pad;
      for (std::size_t i = 0; i < n; ++i) buf[i] = window[i] * xb[reflect_index(start + static_cast<std::ptrdiff_t>(i), len)];
      auto* out = spectrum->data() + (b * frames + f) * bins;
      fftw_execute_dft_r2c(plans.forward, buf.data(), reinterpret_cast<fftw_complex*>(out));
      for (std::size_t k = 0; k < bins; ++k) mag[(b * frames + f) * bins + k] = std::abs(out[k]);
    }
  }

  nn::Shape shape = batched ? nn::Shape{batch, frames, bins} : nn::Shape{frames, bins};
  return nn::record_op(
      "stft_magnitude", std::move(shape), std::move(mag), {signal},
      [=](nn::GradSink& g) {
        auto go = g.out_grad();
        auto gi = g.in_grad(0);
        std::vector<std::complex<double>> coeff(bins);
        std::vector<double> frame_grad(n);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t f = 0; f < frames; ++f) {
            const auto* X = spectrum->data() + (b * frames + f) * bins;
            const double* gm = go.data() + (b * frames + f) * bins;
            // d|X_k|/dx_n = Re(conj(X_k)/|X_k| e^{-2 pi i k n / N}); evaluated
            // for all n at once with a Hermitian inverse transform.
            for (std::size_t k = 0; k < bins; ++k) {
              const double a = std::abs(X[k]);
              const std::complex<double> c = a > 0 ? gm[k] * std::conj(X[k]) / a : std::complex<double>{};
              if (k == 0 || k == bins - 1)
                coeff[k] = {c.real(), 0.0};
              else
                coeff[k] = std::conj(c) * 0.5;
            }
            fftw_execute_dft_c2r(plans.inverse, reinterpret_cast<fftw_complex*>(coeff.data()), frame_grad.data());
            const auto start = static_cast<std::ptrdiff_t>(f * cfg.hop) - pad;
            for (std::size_t i = 0; i < n; ++i)
              gi[b * len + reflect_index(start + static_cast<std::ptrdiff_t>(i), len)] += window[i] * frame_grad[i];
          }
        }
      });
}

nn::Tensor apply_filterbank(const nn::Tensor& magnitude, const MelFilterbank& fb) {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t bins = magnitude.shape().back();
  TRUEWM_REQUIRE(bins == fb.n_bins(), "filterbank expects " + std::to_string(fb.n_bins()) + " bins, got " +
                                          std::to_string(bins));
  const std::size_t rows = magnitude.numel() / bins, mels = fb.n_mels();
  Eigen::Map<const RowMat> W(fb.weights().data(), mels, bins);
  std::vector<double> out(rows * mels);
  Eigen::Map<RowMat>(out.data(), rows, mels).noalias() =
      Eigen::Map<const RowMat>(magnitude.data().data(), rows, bins) * W.transpose();
  nn::Shape shape = magnitude.shape();
  shape.back() = mels;
  return nn::record_op("mel_filterbank", std::move(shape), std::move(out), {magnitude},
                       [rows, bins, mels, weights = fb.shared_weights()](nn::GradSink& g) {
                         Eigen::Map<const RowMat> W(weights->data(), mels, bins);
                         Eigen::Map<RowMat>(g.in_grad(0).data(), rows, bins).noalias() +=
                             Eigen::Map<const RowMat>(g.out_grad().data(), rows, mels) * W;
                       });
}

nn::Tensor mel_spectrogram(const nn::Tensor& signal, const StftConfig& stft, const MelFilterbank& fb) {
  return apply_filterbank(stft_magnitude(signal, stft), fb);
}

nn::Tensor log_compress(const nn::Tensor& x, double floor) {
  for (double v : x.data()) TRUEWM_REQUIRE(v >= 0.0, "log_compress expects non-negative input");
  return nn::log_floor(x, floor);
}

nn::Tensor as_signal(std::span<const double> samples) {
  return nn::Tensor({samples.size()}, std::vector<double>(samples.begin(), samples.end()));
}

}  // namespace truewm::dsp
