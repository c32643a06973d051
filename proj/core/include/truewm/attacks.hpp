#pragma once

// Post-processing attacks. Every attack preserves length, is deterministic
// given (spec, seed), and has a differentiable tensor form used on the
// training path.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "truewm/random.hpp"
#include "truewm/tensor.hpp"

namespace truewm::attacks {

enum class Kind {
  kIdentity,
  kGaussianNoise,
  kPinkNoise,
  kLowPass,
  kBandPass,
  kHighPass,
  kTimeStretch,
  kSuppression,
  kResample,
  kEcho,
  kDither,
};

enum class Region { kBehind, kFront };

struct AttackSpec {
  Kind kind = Kind::kIdentity;
  double snr_db = 20.0;      // gn
  double level = 0.5;        // pn, amplitude relative to matched-power noise
  double cutoff_hz = 3000;   // lp, hp
  double lo_hz = 500;        // bp
  double hi_hz = 8000;       // bp
  double factor = 0.5;       // tsi
  double gain = 0.5;         // sps
  Region region = Region::kBehind;
  double rate_hz = 44100;    // res
  double delay_ms = 100;     // echo
  double decay = 0.3;        // echo
  double lsb = 1.0;          // dither

  /// Grammar: kind[:key=value[,key=value...]], e.g. "gn:snr=20",
  /// "bp:lo=500,hi=8000". Values accept a trailing 'k' (x1000).
  static AttackSpec parse(std::string_view text);
  std::string to_string() const;
  void validate(unsigned sample_rate) const;

  static AttackSpec identity() { return {}; }
  static AttackSpec gaussian_noise(double snr_db);
  static AttackSpec pink_noise(double level);
  static AttackSpec low_pass(double cutoff_hz);
  static AttackSpec band_pass(double lo_hz, double hi_hz);
  static AttackSpec high_pass(double cutoff_hz);
  static AttackSpec time_stretch(double factor);
  static AttackSpec suppression(double gain = 0.5, Region region = Region::kBehind);
  static AttackSpec resample(double rate_hz);
  static AttackSpec echo(double delay_ms = 100, double decay = 0.3);
  static AttackSpec dither(double lsb = 1.0);
};

std::string_view kind_name(Kind kind);
std::string valid_kinds_help();

/// The nine training-time operations (identity and pink noise excluded).
const std::array<Kind, 9>& training_kinds();
/// One attack drawn uniformly from training_kinds() with randomized strength.
AttackSpec sample_training_attack(Rng& rng);
/// Column set of the per-dataset robustness table.
std::vector<AttackSpec> robustness_suite();
/// Attack set used for the with/without attack-simulator comparison.
std::vector<AttackSpec> ablation_suite();

inline constexpr double kOutputClamp = 4.0;

std::vector<double> apply_attack(std::span<const double> x, const AttackSpec& spec, std::uint64_t seed,
                                 unsigned sample_rate = 16000);
/// Differentiable form for [B, 1, L] (or [L]) tensors; row b uses
/// Rng::derive(seed, b).
nn::Tensor apply_attack(const nn::Tensor& x, const AttackSpec& spec, std::uint64_t seed, unsigned sample_rate = 16000);

// --- kernels -------------------------------------------------------------

enum class NoiseColor { kWhite, kPink };

/// Unit mean-square noise of length n.
std::vector<double> unit_noise(std::size_t n, NoiseColor color, Rng& rng);
/// x + n with n scaled so that 10 log10(P_x / P_n) == snr_db exactly.
/// snr_db = +inf returns x. Silent x is a contract violation.
std::vector<double> additive_noise_at_snr(std::span<const double> x, double snr_db, NoiseColor color,
                                          std::uint64_t seed);

enum class FilterKind { kLow, kHigh, kBand };

struct Biquad {
  double b0, b1, b2, a1, a2;  // a0 normalized to 1
};

/// Butterworth sections via the bilinear transform (pre-warped).
/// Band-pass is high-pass(lo) followed by low-pass(hi), each of `order`.
std::vector<Biquad> butterworth_sections(FilterKind kind, double f1, double f2, unsigned sample_rate, int order = 4);
/// Causal single pass, zero initial state.
std::vector<double> run_biquads(std::span<const double> x, std::span<const Biquad> sections);
std::vector<double> butterworth_filter(std::span<const double> x, FilterKind kind, double f1, double f2,
                                       unsigned sample_rate, int order = 4);

/// Resample by `factor` then back to the input length (linear interpolation).
std::vector<double> time_stretch_interpolate(std::span<const double> x, double factor);
std::vector<double> suppression(std::span<const double> x, double gain, Region region = Region::kBehind);
std::vector<double> echo(std::span<const double> x, std::size_t delay_samples, double decay);
/// TPDF noise with peak lsb/32768: (u1 + u2 - 1) * lsb / 32768.
std::vector<double> tpdf_noise(std::size_t n, double lsb, Rng& rng);
/// Adds TPDF noise then requantizes to the 16-bit grid.
std::vector<double> dither(std::span<const double> x, double lsb, std::uint64_t seed);
std::vector<double> requantize16(std::span<const double> x);

}  // namespace truewm::attacks
