#pragma once

// Extracting module: a stack of temporal gated convolution (TGC) blocks
// followed by an extraction head, plus binomial-test verification.

#include <cstddef>
#include <vector>

#include "truewm/layers.hpp"
#include "truewm/watermark.hpp"

namespace truewm::extracting {

struct DecoderConfig {
  std::size_t bits = 32;
  std::vector<std::size_t> channels{1, 16, 32, 64, 64};
  /// Multipliers on the uniform(+-1/sqrt(fan_in)) initialization. Each gated
  /// block halves the signal at init, so without compensation the pooled
  /// features reach the head orders of magnitude too small to learn from.
  double conv_gain = 3.4641016151377544;  // 2 * sqrt(3)
  double head_gain = 8.0;

  void validate() const;
};

/// sigmoid(bn(conv_main(x))) * conv_shortcut(x)
struct TgcBlock {
  nn::Conv1dLayer main;
  nn::Tensor bn_gamma;
  nn::Tensor bn_beta;
  nn::BatchNormState bn;
  nn::Conv1dLayer shortcut;
};

struct DecoderParams {
  std::vector<TgcBlock> blocks;
  nn::DenseLayer head;  // channels.back() -> l
};

DecoderParams init_decoder(const DecoderConfig& config, Rng& rng);
std::vector<nn::NamedTensor> named_parameters(const DecoderParams& params);

/// Train mode normalizes with batch statistics and updates the block's
/// running statistics.
nn::Tensor tgc_forward(const nn::Tensor& x, TgcBlock& block, nn::BnMode mode);
nn::Tensor tgc_forward(const nn::Tensor& x, const TgcBlock& block);  // eval

/// Soft bits in (0, 1), shape [B, l].
nn::Tensor extract_bits(const nn::Tensor& watermarked, DecoderParams& params, nn::BnMode mode);
nn::Tensor extract_bits(const nn::Tensor& watermarked, const DecoderParams& params);  // eval

/// Threshold at 0.5; exactly 0.5 maps to 1.
WatermarkBits hard_bits(std::span<const double> soft);
std::vector<WatermarkBits> hard_bits_batch(const nn::Tensor& soft);

inline constexpr double kDefaultTau = 1e-6;

/// Upper binomial tail P(X >= matches) for X ~ Bin(length, xi), computed in
/// log space.
double binomial_p_value(std::size_t matches, std::size_t length, double xi = 0.5);

struct VerificationReport {
  std::size_t matches = 0;
  std::size_t length = 0;
  double p_value = 1.0;
  double tau = kDefaultTau;
  bool decision = false;
};

std::size_t count_matches(const WatermarkBits& a, const WatermarkBits& b);
VerificationReport verify(const WatermarkBits& extracted, const WatermarkBits& claimed, double tau = kDefaultTau);

}  // namespace truewm::extracting
