#pragma once

// Differentiable operator set. Activations use the [B, C, L] layout
// (batch, channel, length); dense layers use [B, n].

#include <cstddef>
#include <span>
#include <vector>

#include "truewm/tensor.hpp"

namespace truewm::nn {

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                 std::size_t padding);
std::size_t conv1d_transpose_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                           std::size_t padding, std::size_t output_padding);

/// Cross-correlation with zero padding. weight: [Cout, Cin, k], bias: [Cout].
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding);
/// Adjoint of conv1d plus bias. weight: [Cin, Cout, k], bias: [Cout].
/// Pass an undefined Tensor as bias to skip it (same for conv1d).
Tensor conv1d_transpose(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
                        std::size_t padding, std::size_t output_padding);

/// y = x W^T + b with x: [B, n], W: [m, n], b: [m].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

enum class BnMode { kTrain, kEval };

struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Per-channel normalization over (B, L). Train mode updates `state`
/// (unbiased running variance); eval mode reads it.
Tensor batch_norm1d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                    BnMode mode);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor log(const Tensor& x);
/// log(max(x, floor)); gradient is zero where the floor is active.
Tensor log_floor(const Tensor& x, double floor);
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Concatenates [B, C_i, L] tensors along the channel axis.
Tensor concat_channels(std::span<const Tensor> parts);
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Item `index` of a [B, ...] tensor as a [1, ...] tensor.
Tensor select_batch(const Tensor& x, std::size_t index);
/// Inverse of select_batch over all items.
Tensor stack_batch(std::span<const Tensor> items);

/// Trims or right-zero-pads the last axis to `length`.
Tensor fit_length(const Tensor& x, std::size_t length);

/// Mean over the last axis: [B, C, L] -> [B, C].
Tensor global_avg_pool(const Tensor& x);

/// Mean absolute difference, reduced to a scalar.
Tensor l1_loss(const Tensor& a, const Tensor& b);

inline constexpr double kBceClamp = 1e-7;
/// Mean binary cross-entropy; predictions clamped to [1e-7, 1 - 1e-7].
Tensor bce_loss(const Tensor& pred, const Tensor& target);

}  // namespace truewm::nn
