#pragma once

// Hiding module: a dense block expands the bit string to one waveform-length
// channel, which is concatenated with the carrier and fed to a fully
// convolutional encoder (no normalization, no activations).

#include <cstddef>
#include <vector>

#include "truewm/layers.hpp"
#include "truewm/watermark.hpp"

namespace truewm::hiding {

struct HidingConfig {
  std::size_t window = 16000;  // L
  std::size_t bits = 32;       // l
  std::size_t hidden = 256;    // dense block width
  /// Down path channels; the first entry is the encoder input (carrier + latent).
  std::vector<std::size_t> down_channels{2, 16, 32, 64, 64};
  std::vector<std::size_t> down_padding{2, 2, 2, 1};
  /// Output channels of each (transposed conv, conv) up stage. The last plain
  /// conv maps to a single channel.
  std::vector<std::size_t> up_channels{64, 32, 16, 16};
  /// Add the carrier to the encoder output instead of emitting it directly.
  bool residual = true;

  void validate() const;
};

struct DenseBlock {
  nn::DenseLayer fc1;  // l -> hidden
  nn::DenseLayer fc2;  // hidden -> L
};

struct EncoderParams {
  std::vector<nn::Conv1dLayer> down;
  std::vector<nn::ConvTranspose1dLayer> up_transposed;
  std::vector<nn::Conv1dLayer> up_conv;
};

struct HidingParams {
  DenseBlock dense_block;
  EncoderParams encoder;
};

HidingParams init_hiding(const HidingConfig& config, Rng& rng);
std::vector<nn::NamedTensor> named_parameters(const HidingParams& params);

/// Bits as a [B, l] tensor of 0.0 / 1.0.
nn::Tensor bits_tensor(const std::vector<WatermarkBits>& batch);

/// Dense block: FC -> ReLU -> FC, reshaped to [B, 1, L].
nn::Tensor expand_watermark(const nn::Tensor& bits, const DenseBlock& block, std::size_t window);
nn::Tensor expand_watermark(const WatermarkBits& bits, const DenseBlock& block, std::size_t window);

/// Output length of every down stage for an input of length L (L first).
std::vector<std::size_t> encoder_stage_lengths(std::size_t length, const HidingConfig& config);

/// [B, 2, L] -> [B, 1, L]. After each transposed conv the length is trimmed or
/// zero-padded on the right to the matching down-stage length.
nn::Tensor encoder_forward(const nn::Tensor& sigma, const EncoderParams& params);

/// Watermarked segment for carrier s [B, 1, L] and bits [B, l].
nn::Tensor embed(const nn::Tensor& carrier, const nn::Tensor& bits, const HidingParams& params,
                 const HidingConfig& config);
nn::Tensor embed(const nn::Tensor& carrier, const WatermarkBits& bits, const HidingParams& params,
                 const HidingConfig& config);

}  // namespace truewm::hiding
